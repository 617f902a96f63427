#include <doctest.h>

#include <Eigen/SVD>
#include <cmath>

#include "mixshrink/numerics.hpp"
#include "mixshrink/rng.hpp"

using namespace mixshrink;

namespace {

// Random design whose cross-product matrix has the requested condition
// number: X = Q1 diag(s) Q2' with singular values spread as sqrt(cond).
WeightedDesign random_design(RngStream& rng, Eigen::Index n, Eigen::Index p,
                             double xtwx_cond, bool with_zero_weight = false) {
  Matrix a(n, p);
  Matrix b(p, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j) a(i, j) = rng.normal();
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < p; ++j) b(i, j) = rng.normal();
  Eigen::HouseholderQR<Matrix> qa(a);
  Eigen::HouseholderQR<Matrix> qb(b);
  Matrix q1 = qa.householderQ() * Matrix::Identity(n, p);
  Matrix q2 = qb.householderQ() * Matrix::Identity(p, p);

  Vector s(p);
  for (Eigen::Index m = 0; m < p; ++m) {
    const double t = (p == 1) ? 0.0
                              : static_cast<double>(m) /
                                    static_cast<double>(p - 1);
    s[m] = std::pow(std::sqrt(xtwx_cond), -t);
  }

  WeightedDesign design;
  design.X = q1 * s.asDiagonal() * q2.transpose();
  design.w.resize(n);
  for (Eigen::Index i = 0; i < n; ++i)
    design.w[i] = 0.1 + 1.9 * rng.uniform01();
  if (with_zero_weight) design.w[0] = 0.0;
  return design;
}

Vector random_vector(RngStream& rng, Eigen::Index n) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}

// Canonical-route ridge estimate (eigenbasis path through V1), compared against
// the direct regularized solve in the tests below.
Vector canonical_ridge(const WeightedDesign& design, const Vector& y,
                       double k) {
  const CanonicalBasis basis = canonical_basis(design);
  const Vector wy = design.w.array().sqrt().matrix().asDiagonal() * y;
  const Vector alpha =
      (basis.eigen.eigenvalues.array() + k)
          .inverse()
          .matrix()
          .asDiagonal() *
      (basis.eigen.eigenvalues.array().sqrt().matrix().asDiagonal() *
       (basis.v1.transpose() * wy));
  return basis.eigen.eigenvectors * alpha;
}

// Canonical-route Liu-type estimate for an arbitrary plug-in.
Vector canonical_lt(const WeightedDesign& design, const Vector& y, double k,
                    double d, const Vector& plugin_beta) {
  const CanonicalBasis basis = canonical_basis(design);
  const Vector wy = design.w.array().sqrt().matrix().asDiagonal() * y;
  const Vector alpha_plugin =
      basis.eigen.eigenvectors.transpose() * plugin_beta;
  const Vector rhs =
      basis.eigen.eigenvalues.array().sqrt().matrix().asDiagonal() *
          (basis.v1.transpose() * wy) -
      d * alpha_plugin;
  const Vector alpha =
      (basis.eigen.eigenvalues.array() + k).inverse().matrix().asDiagonal() *
      rhs;
  return basis.eigen.eigenvectors * alpha;
}

}  // namespace

TEST_SUITE_BEGIN("numerics");

TEST_CASE("weighted cross products: identity case") {
  WeightedDesign design{Matrix::Identity(2, 2), Vector::Ones(2)};
  Vector y(2);
  y << 3, 4;
  auto [xtwx, xtwy] = weighted_cross_products(design, y);
  CHECK((xtwx - Matrix::Identity(2, 2)).norm() == doctest::Approx(0.0));
  CHECK(xtwy[0] == doctest::Approx(3.0));
  CHECK(xtwy[1] == doctest::Approx(4.0));
}

TEST_CASE("weighted cross products: hand-computed column case") {
  WeightedDesign design;
  design.X = Matrix::Ones(3, 1);
  design.w.resize(3);
  design.w << 0.5, 0.25, 0.25;
  Vector y = Vector::Constant(3, 2.0);
  auto [xtwx, xtwy] = weighted_cross_products(design, y);
  CHECK(xtwx(0, 0) == doctest::Approx(1.0));  // 0.5 + 0.25 + 0.25
  CHECK(xtwy[0] == doctest::Approx(2.0));
}

TEST_CASE("weighted cross products: rejects all-zero weights and bad dims") {
  WeightedDesign design{Matrix::Identity(2, 2), Vector::Zero(2)};
  CHECK_THROWS_AS(weighted_cross_products(design, Vector::Ones(2)),
                  NumericError);

  WeightedDesign mismatched{Matrix::Identity(2, 2), Vector::Ones(2)};
  CHECK_THROWS_AS(weighted_cross_products(mismatched, Vector::Ones(3)),
                  DimensionError);

  WeightedDesign nonfinite{Matrix::Identity(2, 2), Vector::Ones(2)};
  nonfinite.X(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(weighted_cross_products(nonfinite, Vector::Ones(2)),
                  NumericError);
}

TEST_CASE("symmetric eigen: diagonal, hand characteristic polynomial, zero") {
  Matrix d2(2, 2);
  d2 << 4, 0, 0, 1;
  EigenSystem eig = symmetric_eigen(d2);
  CHECK(eig.eigenvalues[0] == doctest::Approx(4.0));
  CHECK(eig.eigenvalues[1] == doctest::Approx(1.0));

  // [[2,1],[1,2]]: roots of (2-l)^2 - 1 are 3 and 1.
  Matrix a(2, 2);
  a << 2, 1, 1, 2;
  eig = symmetric_eigen(a);
  CHECK(eig.eigenvalues[0] == doctest::Approx(3.0));
  CHECK(eig.eigenvalues[1] == doctest::Approx(1.0));
  CHECK((a - eig.eigenvectors * eig.eigenvalues.asDiagonal() *
                 eig.eigenvectors.transpose())
            .norm() < 1e-8 * a.norm());

  eig = symmetric_eigen(Matrix::Zero(3, 3));
  CHECK(eig.eigenvalues.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  CHECK((eig.eigenvectors.transpose() * eig.eigenvectors -
         Matrix::Identity(3, 3))
            .norm() < 1e-8);
}

TEST_CASE("symmetric eigen: rejects non-symmetric input") {
  Matrix a(2, 2);
  a << 1, 2, 0, 1;
  CHECK_THROWS_AS(symmetric_eigen(a), NumericError);
}

TEST_CASE("symmetric eigen: reconstruction and orthonormality bounds") {
  RngStream rng(7);
  for (int t = 0; t < 50; ++t) {
    const Eigen::Index p = 2 + static_cast<Eigen::Index>(rng.uniform_below(5));
    Matrix g(p, p);
    for (Eigen::Index i = 0; i < p; ++i)
      for (Eigen::Index j = 0; j < p; ++j) g(i, j) = rng.normal();
    Matrix a = 0.5 * (g + g.transpose());
    EigenSystem eig = symmetric_eigen(a);
    const double scale = std::max(1.0, a.norm());
    CHECK((a - eig.eigenvectors * eig.eigenvalues.asDiagonal() *
                   eig.eigenvectors.transpose())
              .norm() < 1e-8 * scale);
    CHECK((eig.eigenvectors.transpose() * eig.eigenvectors -
           Matrix::Identity(p, p))
              .norm() < 1e-8);
    for (Eigen::Index m = 1; m < p; ++m)
      CHECK(eig.eigenvalues[m] <= eig.eigenvalues[m - 1]);
  }
}

TEST_CASE("canonical basis: identity design") {
  WeightedDesign design{Matrix::Identity(3, 3), Vector::Ones(3)};
  CanonicalBasis basis = canonical_basis(design);
  CHECK((basis.eigen.eigenvalues - Vector::Ones(3)).norm() < 1e-12);
  // The spectrum is fully degenerate, so the eigenbasis is arbitrary; the
  // basis-independent statement is V1 = U (since W^{1/2} X = I here).
  CHECK((basis.v1 - basis.eigen.eigenvectors).norm() < 1e-10);
  CHECK((basis.v1.transpose() * basis.v1 - Matrix::Identity(3, 3)).norm() <
        1e-10);
}

TEST_CASE("canonical basis: reconstruction vs direct SVD oracle") {
  RngStream rng(11);
  WeightedDesign design = random_design(rng, 6, 2, 10.0);
  design.w = Vector::Ones(6);
  CanonicalBasis basis = canonical_basis(design);

  const Matrix wx = design.w.array().sqrt().matrix().asDiagonal() * design.X;
  const Matrix rebuilt =
      basis.v1 *
      basis.eigen.eigenvalues.array().sqrt().matrix().asDiagonal() *
      basis.eigen.eigenvectors.transpose();
  CHECK((wx - rebuilt).norm() < 1e-8);
  CHECK((basis.v1.transpose() * basis.v1 - Matrix::Identity(2, 2)).norm() <
        1e-8);

  // Independent oracle: singular values of W^{1/2} X.
  Eigen::JacobiSVD<Matrix> svd(wx);
  for (Eigen::Index m = 0; m < 2; ++m)
    CHECK(std::sqrt(basis.eigen.eigenvalues[m]) ==
          doctest::Approx(svd.singularValues()[m]).epsilon(1e-10));
}

TEST_CASE("canonical basis: zero weight row drops out, reconstruction holds") {
  RngStream rng(13);
  WeightedDesign design = random_design(rng, 3, 2, 4.0, true);
  CanonicalBasis basis = canonical_basis(design);
  const Matrix wx = design.w.array().sqrt().matrix().asDiagonal() * design.X;
  const Matrix rebuilt =
      basis.v1 *
      basis.eigen.eigenvalues.array().sqrt().matrix().asDiagonal() *
      basis.eigen.eigenvectors.transpose();
  CHECK((wx - rebuilt).norm() < 1e-8);

  // Oracle on the reduced system: rows with positive weight only.
  Matrix wx_reduced(2, 2);
  wx_reduced.row(0) = wx.row(1);
  wx_reduced.row(1) = wx.row(2);
  Eigen::JacobiSVD<Matrix> svd(wx_reduced);
  for (Eigen::Index m = 0; m < 2; ++m)
    CHECK(std::sqrt(basis.eigen.eigenvalues[m]) ==
          doctest::Approx(svd.singularValues()[m]).epsilon(1e-10));
}

TEST_CASE("canonical basis: rank-deficient design names the rank") {
  WeightedDesign design;
  design.X.resize(4, 2);
  design.X << 1, 2, 2, 4, 3, 6, 4, 8;  // second column is twice the first
  design.w = Vector::Ones(4);
  try {
    canonical_basis(design);
    FAIL("expected RankError");
  } catch (const RankError& err) {
    CHECK(err.detected_rank == 1);
  }
}

TEST_CASE("ridge solve: identity and diagonal examples") {
  Vector rhs(2);
  rhs << 2, 2;
  Vector beta = ridge_solve(Matrix::Identity(2, 2), rhs, 1.0);
  CHECK(beta[0] == doctest::Approx(1.0));
  CHECK(beta[1] == doctest::Approx(1.0));

  Matrix a(2, 2);
  a << 2, 0, 0, 1;
  rhs << 2, 1;
  beta = ridge_solve(a, rhs, 0.0);
  CHECK(beta[0] == doctest::Approx(1.0));
  CHECK(beta[1] == doctest::Approx(1.0));
}

TEST_CASE("ridge solve: near-collinear 2x2 vs closed-form inverse oracle") {
  Matrix a(2, 2);
  a << 1, 0.999, 0.999, 1;
  Vector rhs(2);
  rhs << 1, 1;
  const double k = 0.1;
  Vector beta = ridge_solve(a, rhs, k);

  // Closed-form inverse of [[1.1, 0.999], [0.999, 1.1]].
  const double det = 1.1 * 1.1 - 0.999 * 0.999;
  const double expected = (1.1 - 0.999) / det;
  CHECK(beta[0] == doctest::Approx(expected).epsilon(1e-10));
  CHECK(beta[1] == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("ridge solve: singular at k = 0 raises, k > 0 succeeds") {
  Matrix a(2, 2);
  a << 1, 1, 1, 1;
  Vector rhs(2);
  rhs << 1, 1;
  CHECK_THROWS_AS(ridge_solve(a, rhs, 0.0), SingularError);
  CHECK_NOTHROW(ridge_solve(a, rhs, 0.5));
}

TEST_CASE("ridge solve: k = 0 equals normal-equations oracle on full rank") {
  RngStream rng(17);
  for (int t = 0; t < 25; ++t) {
    WeightedDesign design = random_design(rng, 12, 3, 100.0);
    Vector y = random_vector(rng, 12);
    auto [xtwx, xtwy] = weighted_cross_products(design, y);
    Vector beta = ridge_solve(xtwx, xtwy, 0.0);
    Vector oracle = xtwx.colPivHouseholderQr().solve(xtwy);
    CHECK((beta - oracle).norm() < 1e-8 * (1.0 + oracle.norm()));
  }
}

TEST_CASE("ridge solve: shrinkage is monotone in k") {
  RngStream rng(19);
  for (int t = 0; t < 25; ++t) {
    WeightedDesign design = random_design(rng, 10, 3, 1e4);
    Vector y = random_vector(rng, 10);
    auto [xtwx, xtwy] = weighted_cross_products(design, y);
    double prev_norm = std::numeric_limits<double>::infinity();
    for (double k : {1e-6, 1e-4, 1e-2, 1.0, 100.0}) {
      const double norm = ridge_solve(xtwx, xtwy, k).norm();
      CHECK(norm <= prev_norm * (1.0 + 1e-12));
      prev_norm = norm;
    }
  }
}

TEST_CASE("canonical equivalence: ridge and Liu-type routes match direct") {
  RngStream rng(23);
  for (int t = 0; t < 100; ++t) {
    const Eigen::Index p = 2 + static_cast<Eigen::Index>(rng.uniform_below(4));
    const Eigen::Index n = p + 4 + static_cast<Eigen::Index>(
                                       rng.uniform_below(20));
    const double cond = std::pow(10.0, 8.0 * rng.uniform01());
    WeightedDesign design = random_design(rng, n, p, cond);
    Vector y = random_vector(rng, n);
    auto [xtwx, xtwy] = weighted_cross_products(design, y);
    const double lambda1 = symmetric_eigen(xtwx).eigenvalues[0];
    const double k = lambda1 * std::pow(10.0, -6.0 * rng.uniform01());

    // Ridge form: sign-agnostic comparison through U alpha, not U entrywise.
    Vector direct = ridge_solve(xtwx, xtwy, k);
    Vector canonical = canonical_ridge(design, y, k);
    CHECK((direct - canonical).norm() <=
          1e-6 * std::max(1e-12, direct.norm()));

    // Liu-type form with an arbitrary d and plug-in.
    const double d = 4.0 * (rng.uniform01() - 0.5) * lambda1;
    Vector plugin = random_vector(rng, p);
    Vector lt_direct = ridge_solve_diag(xtwx, xtwy - d * plugin, k,
                                        Vector::Ones(p));
    Vector lt_canonical = canonical_lt(design, y, k, d, plugin);
    CHECK((lt_direct - lt_canonical).norm() <=
          1e-6 * std::max(1e-12, lt_direct.norm()));
  }
}

TEST_SUITE_END();
