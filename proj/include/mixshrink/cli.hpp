#ifndef MIXSHRINK_CLI_HPP
#define MIXSHRINK_CLI_HPP

namespace mixshrink {

// Entry point for the mixshrink command-line tool (fit / simulate /
// crossval). Returns the process exit code; errors go to stderr only.
int run_cli(int argc, char** argv);

}  // namespace mixshrink

#endif  // MIXSHRINK_CLI_HPP
