#include "mixshrink/numerics.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>

namespace mixshrink {

void WeightedDesign::validate() const {
  if (X.rows() != w.size())
    throw DimensionError("weighted design: X has " + std::to_string(X.rows()) +
                         " rows but w has " + std::to_string(w.size()));
  if (X.rows() < 1 || X.cols() < 1)
    throw DimensionError("weighted design: empty design");
  if (!X.allFinite() || !w.allFinite())
    throw NumericError("weighted design: non-finite entries");
  if ((w.array() < 0.0).any())
    throw NumericError("weighted design: negative weight");
  if (w.maxCoeff() <= 0.0)
    throw NumericError("weighted design: all weights are zero");
}

std::pair<Matrix, Vector> weighted_cross_products(const WeightedDesign& design,
                                                  const Vector& y) {
  design.validate();
  if (y.size() != design.n())
    throw DimensionError("weighted cross products: y has " +
                         std::to_string(y.size()) + " entries, expected " +
                         std::to_string(design.n()));
  if (!y.allFinite())
    throw NumericError("weighted cross products: non-finite response");

  Matrix xtwx = design.X.transpose() * design.w.asDiagonal() * design.X;
  xtwx = 0.5 * (xtwx + xtwx.transpose()).eval();  // enforce exact symmetry
  Vector xtwy = design.X.transpose() * (design.w.asDiagonal() * y);
  return {std::move(xtwx), std::move(xtwy)};
}

EigenSystem symmetric_eigen(const Matrix& a) {
  if (a.rows() != a.cols())
    throw DimensionError("symmetric eigen: matrix is " +
                         std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()));
  if (!a.allFinite()) throw NumericError("symmetric eigen: non-finite entries");
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * scale)
    throw NumericError("symmetric eigen: input not symmetric (max deviation " +
                       std::to_string(asym) + ")");

  Eigen::SelfAdjointEigenSolver<Matrix> solver(a);
  if (solver.info() != Eigen::Success)
    throw NumericError("symmetric eigen: decomposition failed");

  // Eigen returns ascending order; flip to descending.
  const Eigen::Index p = a.rows();
  EigenSystem out;
  out.eigenvalues.resize(p);
  out.eigenvectors.resize(p, p);
  for (Eigen::Index m = 0; m < p; ++m) {
    out.eigenvalues[m] = solver.eigenvalues()[p - 1 - m];
    out.eigenvectors.col(m) = solver.eigenvectors().col(p - 1 - m);
  }
  return out;
}

CanonicalBasis canonical_basis(const WeightedDesign& design) {
  design.validate();
  Matrix xtwx = design.X.transpose() * design.w.asDiagonal() * design.X;
  xtwx = 0.5 * (xtwx + xtwx.transpose()).eval();
  EigenSystem eig = symmetric_eigen(xtwx);

  const Eigen::Index p = design.p();
  const double lambda_max = eig.eigenvalues[0];
  int rank = 0;
  for (Eigen::Index m = 0; m < p; ++m)
    if (eig.eigenvalues[m] > kRankTol * lambda_max) ++rank;
  if (rank < p)
    throw RankError("canonical basis: weighted design has rank " +
                        std::to_string(rank) + " < p = " + std::to_string(p),
                    rank);

  // V1 = W^{1/2} X U Lambda^{-1/2}; avoids any n x n decomposition.
  CanonicalBasis basis;
  basis.eigen = std::move(eig);
  Matrix wx = design.w.array().sqrt().matrix().asDiagonal() * design.X;
  basis.v1 = wx * basis.eigen.eigenvectors *
             basis.eigen.eigenvalues.array().rsqrt().matrix().asDiagonal();
  return basis;
}

Vector ridge_solve_diag(const Matrix& xtwx, const Vector& rhs, double k,
                        const Vector& reg) {
  if (xtwx.rows() != xtwx.cols() || xtwx.rows() != rhs.size() ||
      reg.size() != rhs.size())
    throw DimensionError("ridge solve: inconsistent dimensions");
  if (k < 0.0) throw NumericError("ridge solve: negative ridge parameter");
  if (!xtwx.allFinite() || !rhs.allFinite())
    throw NumericError("ridge solve: non-finite input");

  if (k == 0.0) {
    EigenSystem eig = symmetric_eigen(xtwx);
    if (eig.eigenvalues[0] <= 0.0 ||
        eig.eigenvalues[eig.eigenvalues.size() - 1] <=
            kRankTol * eig.eigenvalues[0])
      throw SingularError(
          "ridge solve: singular system at k = 0; use a positive k");
  }

  Matrix a = xtwx;
  a.diagonal() += k * reg;
  Eigen::LDLT<Matrix> ldlt(a);
  Vector beta = ldlt.solve(rhs);
  // One refinement step tightens the residual on ill-conditioned systems.
  beta += ldlt.solve(rhs - a * beta);

  const double resid = (a * beta - rhs).norm();
  const double scale = 1.0 + rhs.norm() + a.norm() * beta.norm();
  if (!beta.allFinite() || resid > 1e-8 * scale)
    throw SingularError("ridge solve: solution did not meet residual bound (" +
                        std::to_string(resid) + "); system may be singular");
  return beta;
}

Vector ridge_solve(const Matrix& xtwx, const Vector& rhs, double k) {
  return ridge_solve_diag(xtwx, rhs, k, Vector::Ones(rhs.size()));
}

}  // namespace mixshrink
