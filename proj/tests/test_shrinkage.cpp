#include <doctest.h>

#include <cmath>

#include "mixshrink/numerics.hpp"
#include "mixshrink/rng.hpp"
#include "mixshrink/shrinkage.hpp"

using namespace mixshrink;

namespace {

WeightedDesign collinear_design(RngStream& rng, Eigen::Index n, double rho) {
  WeightedDesign design;
  design.X.resize(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double shared = rng.normal();
    design.X(i, 0) = std::sqrt(1.0 - rho * rho) * rng.normal() + rho * shared;
    design.X(i, 1) = std::sqrt(1.0 - rho * rho) * rng.normal() + rho * shared;
  }
  design.w.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) design.w[i] = 0.2 + rng.uniform01();
  return design;
}

Vector random_vector(RngStream& rng, Eigen::Index n) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}

// Closed-form MSE of the canonical Liu-type estimator (bias^2 plus trace of
// the covariance), for each plug-in case. These are the quantities the
// optimal d minimizes; used as the independent oracle for the grid scans.
double lt_mse_ml(const Vector& lambda, const Vector& alpha, double sigma2,
                 double k, double d) {
  double mse = 0.0;
  for (Eigen::Index m = 0; m < lambda.size(); ++m) {
    const double lk = lambda[m] + k;
    const double bias = (d + k) * alpha[m] / lk;
    mse += bias * bias +
           sigma2 * (lambda[m] - d) * (lambda[m] - d) / (lambda[m] * lk * lk);
  }
  return mse;
}

double lt_mse_ridge(const Vector& lambda, const Vector& alpha, double sigma2,
                    double k, double d) {
  double mse = 0.0;
  for (Eigen::Index m = 0; m < lambda.size(); ++m) {
    const double lk = lambda[m] + k;
    const double shrink = lambda[m] * (lambda[m] + k - d) / (lk * lk);
    const double bias = (shrink - 1.0) * alpha[m];
    mse += bias * bias + sigma2 * lambda[m] * (lambda[m] + k - d) *
                             (lambda[m] + k - d) / (lk * lk * lk * lk);
  }
  return mse;
}

// Canonical-route component estimates, used as oracles for
// the direct solvers.
Vector canonical_ridge_beta(const WeightedDesign& design, const Vector& y,
                            double k) {
  const CanonicalBasis basis = canonical_basis(design);
  const Vector wy = design.w.array().sqrt().matrix().asDiagonal() * y;
  const Vector alpha =
      ((basis.eigen.eigenvalues.array() + k).inverse() *
       (basis.eigen.eigenvalues.array().sqrt() *
        (basis.v1.transpose() * wy).array()))
          .matrix();
  return basis.eigen.eigenvectors * alpha;
}

Vector canonical_lt_beta(const WeightedDesign& design, const Vector& y,
                         double k, double d, const Vector& plugin_beta) {
  const CanonicalBasis basis = canonical_basis(design);
  const Vector wy = design.w.array().sqrt().matrix().asDiagonal() * y;
  const Vector alpha_plugin =
      basis.eigen.eigenvectors.transpose() * plugin_beta;
  const Vector alpha =
      ((basis.eigen.eigenvalues.array() + k).inverse() *
       ((basis.eigen.eigenvalues.array().sqrt() *
         (basis.v1.transpose() * wy).array()) -
        d * alpha_plugin.array()))
          .matrix();
  return basis.eigen.eigenvectors * alpha;
}

}  // namespace

TEST_SUITE_BEGIN("shrinkage");

TEST_CASE("ml update: identity design fits exactly, variance floored") {
  WeightedDesign design{Matrix::Identity(3, 3), Vector::Ones(3)};
  Vector y(3);
  y << 2.0, -1.0, 0.5;
  ComponentUpdate up = ml_component_update(design, y, Vector::Ones(3));
  CHECK((up.beta - y).norm() < 1e-10);
  CHECK(up.sigma2 == doctest::Approx(kVarianceFloor));
  CHECK(up.variance_floored);
}

TEST_CASE("ml update: intercept-only column matches hand WLS oracle") {
  WeightedDesign design{Matrix::Ones(4, 1), Vector::Ones(4)};
  Vector y(4);
  y << 0, 0, 2, 2;
  ComponentUpdate up = ml_component_update(design, y, Vector::Ones(4));
  CHECK(up.beta[0] == doctest::Approx(1.0));
  CHECK(up.sigma2 == doctest::Approx(1.0));
}

TEST_CASE("ml update: zero responsibilities are an error") {
  WeightedDesign design{Matrix::Ones(4, 1), Vector::Zero(4)};
  Vector y = Vector::Ones(4);
  CHECK_THROWS_AS(ml_component_update(design, y, Vector::Zero(4)),
                  Error);
}

TEST_CASE("ml update: rank-deficient design raises RankError") {
  WeightedDesign design;
  design.X.resize(4, 2);
  design.X << 1, 1, 2, 2, 3, 3, 4, 4;
  design.w = Vector::Ones(4);
  CHECK_THROWS_AS(ml_component_update(design, Vector::Ones(4),
                                      Vector::Ones(4)),
                  RankError);
}

TEST_CASE("hkp rule: worked examples and plug-in recomputation") {
  CHECK(ridge_k_hkp(Vector::Ones(2), 1.0, 2) == doctest::Approx(1.0));
  CHECK(ridge_k_hkp(Vector::Ones(4), 2.0, 4) == doctest::Approx(2.0));

  // Desk-scale values as they come out of a converged ML fit.
  Vector beta(3);
  beta << 0.4, -1.2, 2.2;
  const double sigma2 = 0.73;
  CHECK(ridge_k_hkp(beta, sigma2, 3) ==
        doctest::Approx(3.0 * sigma2 / beta.squaredNorm()));

  CHECK_THROWS_AS(ridge_k_hkp(Vector::Zero(2), 1.0, 2), NumericError);
}

TEST_CASE("ridge update: k = 0 equals the ML update") {
  RngStream rng(31);
  WeightedDesign design = collinear_design(rng, 20, 0.6);
  Vector y = random_vector(rng, 20);
  ComponentUpdate ml = ml_component_update(design, y, design.w);
  ComponentUpdate ridge = ridge_component_update(design, y, design.w, 0.0);
  CHECK((ml.beta - ridge.beta).norm() < 1e-9 * (1.0 + ml.beta.norm()));
  CHECK(ridge.sigma2 == doctest::Approx(ml.sigma2));
}

TEST_CASE("ridge update: huge k shrinks coefficients to zero") {
  RngStream rng(37);
  WeightedDesign design = collinear_design(rng, 20, 0.6);
  Vector y = random_vector(rng, 20);
  ComponentUpdate up = ridge_component_update(design, y, design.w, 1e12);
  CHECK(up.beta.norm() < 1e-6);
}

TEST_CASE("ridge update: collinear design matches the canonical route") {
  RngStream rng(41);
  WeightedDesign design = collinear_design(rng, 30, 0.999);
  Vector y = random_vector(rng, 30);
  const double k = 0.5;
  ComponentUpdate up = ridge_component_update(design, y, design.w, k);
  Vector oracle = canonical_ridge_beta(design, y, k);
  CHECK((up.beta - oracle).norm() <= 1e-6 * std::max(1e-12, oracle.norm()));
}

TEST_CASE("lt k rule: boundary, formula and clamped cases") {
  Vector lam(2);
  lam << 100.0, 1.0;  // condition number exactly 100: no regularization
  CHECK(lt_k_eigen(lam) == doctest::Approx(kLtKFloor));

  lam << 1000.0, 1.0;
  CHECK(lt_k_eigen(lam) == doctest::Approx(900.0 / 99.0));

  lam << 10.0, 5.0;  // well conditioned: clamp
  CHECK(lt_k_eigen(lam) == doctest::Approx(kLtKFloor));

  CHECK(lt_k_eigen(lam) > 0.0);
}

TEST_CASE("lt d optimal: ML case p=1 with k -> 0 tends to l s2/(l a2+s2)") {
  Vector lam = Vector::Ones(1);
  Vector alpha = Vector::Ones(1);
  const double d = lt_d_optimal(lam, alpha, 1.0, 1e-12, LtPlugin::ML);
  CHECK(d == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("lt d optimal: ridge case zero numerator when s2 = k a2") {
  Vector lam = Vector::Ones(1);
  Vector alpha = Vector::Ones(1);
  CHECK(lt_d_optimal(lam, alpha, 1.0, 1.0, LtPlugin::Ridge) ==
        doctest::Approx(0.0));
}

TEST_CASE("lt d optimal: matches independent summation oracle") {
  RngStream rng(43);
  for (int t = 0; t < 20; ++t) {
    Vector lam(3);
    lam << 3.0 + rng.uniform01(), 1.0 + rng.uniform01(), rng.uniform01() + 0.1;
    Vector alpha = random_vector(rng, 3);
    const double sigma2 = 0.5 + rng.uniform01();
    const double k = 0.1 + rng.uniform01();

    double num_ml = 0.0, den_ml = 0.0, num_r = 0.0, den_r = 0.0;
    for (int m = 0; m < 3; ++m) {
      const double l = lam[m];
      const double a2 = alpha[m] * alpha[m];
      num_ml += (sigma2 - k * a2) / std::pow(l + k, 2);
      den_ml += (l * a2 + sigma2) / (l * std::pow(l + k, 2));
      num_r += l * (sigma2 - k * a2) / std::pow(l + k, 3);
      den_r += l * (l * a2 + sigma2) / std::pow(l + k, 4);
    }
    CHECK(std::abs(lt_d_optimal(lam, alpha, sigma2, k, LtPlugin::ML) -
                   num_ml / den_ml) < 1e-12);
    CHECK(std::abs(lt_d_optimal(lam, alpha, sigma2, k, LtPlugin::Ridge) -
                   num_r / den_r) < 1e-12);
  }
}

TEST_CASE("lt d practical: delegates to the ridge-plug-in optimum") {
  RngStream rng(47);
  Vector lam(3);
  lam << 4.0, 1.5, 0.2;
  Vector alpha = random_vector(rng, 3);
  const double sigma2 = 0.8;
  const double k = 0.6;
  CHECK(lt_d_practical(lam, alpha, sigma2, k) ==
        doctest::Approx(lt_d_optimal(lam, alpha, sigma2, k, LtPlugin::Ridge)));

  // p = 1 zero-numerator case.
  Vector l1 = Vector::Ones(1);
  Vector a1 = Vector::Constant(1, 2.0);
  CHECK(lt_d_practical(l1, a1, 4.0, 1.0) == doctest::Approx(0.0));
}

TEST_CASE("lt d practical: finite and bounded on a converged ridge fit") {
  RngStream rng(53);
  WeightedDesign design = collinear_design(rng, 40, 0.99);
  Vector beta_true(2);
  beta_true << 2.0, -1.0;
  Vector y = design.X * beta_true + 0.3 * random_vector(rng, 40);

  auto [xtwx, xtwy] = weighted_cross_products(design, y);
  const EigenSystem eig = symmetric_eigen(xtwx);
  const double k = lt_k_eigen(eig.eigenvalues);
  ComponentUpdate ridge_up = ridge_component_update(design, y, design.w, k);
  const Vector alpha = eig.eigenvectors.transpose() * ridge_up.beta;
  const double d = lt_d_practical(eig.eigenvalues, alpha, ridge_up.sigma2, k);
  CHECK(std::isfinite(d));
  CHECK(std::abs(d) < eig.eigenvalues[0]);
}

TEST_CASE("lt update: d = 0 reduces to ridge with the same k") {
  RngStream rng(59);
  WeightedDesign design = collinear_design(rng, 25, 0.9);
  Vector y = random_vector(rng, 25);
  const double k = 0.4;
  ComponentUpdate ridge = ridge_component_update(design, y, design.w, k);
  ComponentUpdate lt = lt_component_update(design, y, design.w, k, 0.0,
                                           random_vector(rng, 2));
  CHECK((ridge.beta - lt.beta).norm() < 1e-10 * (1.0 + ridge.beta.norm()));
}

TEST_CASE("lt update: tiny k with d = 0 approaches the ML update") {
  RngStream rng(61);
  WeightedDesign design = collinear_design(rng, 25, 0.5);
  Vector y = random_vector(rng, 25);
  ComponentUpdate ml = ml_component_update(design, y, design.w);
  ComponentUpdate lt = lt_component_update(design, y, design.w, 1e-10, 0.0,
                                           Vector::Zero(2));
  CHECK((ml.beta - lt.beta).norm() < 1e-6 * (1.0 + ml.beta.norm()));
}

TEST_CASE("lt update: collinear design matches the canonical route") {
  RngStream rng(67);
  WeightedDesign design = collinear_design(rng, 30, 0.999);
  Vector y = random_vector(rng, 30);

  auto [xtwx, xtwy] = weighted_cross_products(design, y);
  const EigenSystem eig = symmetric_eigen(xtwx);
  const double k = lt_k_eigen(eig.eigenvalues);
  ComponentUpdate ridge_up = ridge_component_update(design, y, design.w, k);
  const Vector alpha = eig.eigenvectors.transpose() * ridge_up.beta;
  const double d = lt_d_practical(eig.eigenvalues, alpha, ridge_up.sigma2, k);

  ComponentUpdate lt =
      lt_component_update(design, y, design.w, k, d, ridge_up.beta);
  Vector oracle = canonical_lt_beta(design, y, k, d, ridge_up.beta);
  CHECK((lt.beta - oracle).norm() <= 1e-6 * std::max(1e-12, oracle.norm()));
}

TEST_CASE("reduction chain: LT(k, d=0) = Ridge(k) and Ridge(0) = ML") {
  RngStream rng(71);
  for (int t = 0; t < 50; ++t) {
    WeightedDesign design = collinear_design(rng, 20, 0.8 * rng.uniform01());
    Vector y = random_vector(rng, 20);
    const double k = 0.01 + rng.uniform01();

    ComponentUpdate ml = ml_component_update(design, y, design.w);
    ComponentUpdate ridge0 = ridge_component_update(design, y, design.w, 0.0);
    CHECK((ml.beta - ridge0.beta).norm() < 1e-8 * (1.0 + ml.beta.norm()));

    ComponentUpdate ridge = ridge_component_update(design, y, design.w, k);
    ComponentUpdate lt = lt_component_update(design, y, design.w, k, 0.0,
                                             ml.beta);
    CHECK((ridge.beta - lt.beta).norm() < 1e-10 * (1.0 + ridge.beta.norm()));
    CHECK(lt.sigma2 == doctest::Approx(ridge.sigma2));
  }
}

TEST_CASE("optimal d: grid scan never beats the returned value") {
  RngStream rng(73);
  for (int t = 0; t < 60; ++t) {
    const Eigen::Index p = 1 + static_cast<Eigen::Index>(rng.uniform_below(4));
    Vector lam(p);
    for (Eigen::Index m = 0; m < p; ++m)
      lam[m] = std::pow(10.0, 2.0 * rng.uniform01() - 1.0);
    std::sort(lam.data(), lam.data() + p, std::greater<double>());
    Vector alpha = random_vector(rng, p);
    const double sigma2 = 0.2 + 2.0 * rng.uniform01();
    const double k = std::pow(10.0, 2.0 * rng.uniform01() - 1.5);

    for (const LtPlugin kind : {LtPlugin::ML, LtPlugin::Ridge}) {
      const double d_star = lt_d_optimal(lam, alpha, sigma2, k, kind);
      const double mse_star = (kind == LtPlugin::ML)
                                  ? lt_mse_ml(lam, alpha, sigma2, k, d_star)
                                  : lt_mse_ridge(lam, alpha, sigma2, k,
                                                 d_star);
      const double span = std::max(1.0, std::abs(d_star));
      for (int g = 0; g <= 200; ++g) {
        const double d = d_star + span * (g - 100) / 100.0;
        const double mse = (kind == LtPlugin::ML)
                               ? lt_mse_ml(lam, alpha, sigma2, k, d)
                               : lt_mse_ridge(lam, alpha, sigma2, k, d);
        CHECK(mse >= mse_star - 1e-9);
      }
    }
  }
}

TEST_CASE("penalize_intercept = false leaves the intercept unshrunk") {
  RngStream rng(79);
  WeightedDesign design;
  design.X.resize(40, 2);
  design.X.col(0) = Vector::Ones(40);
  for (Eigen::Index i = 0; i < 40; ++i) design.X(i, 1) = rng.normal();
  design.w = Vector::Ones(40);
  Vector y(40);
  for (Eigen::Index i = 0; i < 40; ++i)
    y[i] = 3.0 + 0.5 * design.X(i, 1) + 0.1 * rng.normal();

  ComponentUpdate up = ridge_component_update(design, y, design.w, 1e10,
                                              kVarianceFloor, false);
  CHECK(std::abs(up.beta[1]) < 1e-6);                  // slope fully shrunk
  CHECK(up.beta[0] == doctest::Approx(y.mean()).epsilon(1e-6));
}

TEST_SUITE_END();
