#include "mixshrink/cli.hpp"

int main(int argc, char** argv) { return mixshrink::run_cli(argc, argv); }
