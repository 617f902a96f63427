#ifndef MIXSHRINK_NUMERICS_HPP
#define MIXSHRINK_NUMERICS_HPP

#include <utility>

#include "mixshrink/types.hpp"

namespace mixshrink {

// Design matrix together with the diagonal of the component weight matrix.
struct WeightedDesign {
  Matrix X;
  Vector w;

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index p() const { return X.cols(); }

  void validate() const;
};

// Spectral decomposition with eigenvalues sorted descending and orthonormal
// eigenvectors in matching column order.
struct EigenSystem {
  Vector eigenvalues;
  Matrix eigenvectors;
};

// Eigensystem of X^T W X plus the n x p left factor V1 of the weighted
// design, restricted to the positive spectrum: W^{1/2} X = V1 Lambda^{1/2} U^T.
struct CanonicalBasis {
  EigenSystem eigen;
  Matrix v1;
};

// X^T W X and X^T W y.
std::pair<Matrix, Vector> weighted_cross_products(const WeightedDesign& design,
                                                  const Vector& y);

EigenSystem symmetric_eigen(const Matrix& a);

CanonicalBasis canonical_basis(const WeightedDesign& design);

// Solves (XtWX + k I) beta = rhs through a factorization of the regularized
// matrix. k = 0 is accepted only for full-rank systems.
Vector ridge_solve(const Matrix& xtwx, const Vector& rhs, double k);

// Same solve with a per-coordinate regularizer k * diag(reg) instead of k I;
// used when the intercept is exempted from the penalty.
Vector ridge_solve_diag(const Matrix& xtwx, const Vector& rhs, double k,
                        const Vector& reg);

}  // namespace mixshrink

#endif  // MIXSHRINK_NUMERICS_HPP
