#ifndef MIXSHRINK_SHRINKAGE_HPP
#define MIXSHRINK_SHRINKAGE_HPP

#include "mixshrink/numerics.hpp"
#include "mixshrink/types.hpp"

namespace mixshrink {

// Outcome of one per-component M-step solve.
struct ComponentUpdate {
  Vector beta;
  double sigma2 = 0.0;
  double k_used = 0.0;
  double d_used = 0.0;
  bool variance_floored = false;
};

// Floor below which the Liu-type k estimate is clamped; the eigenvalue rule
// can go negative on well-conditioned designs where no regularization is
// needed.
inline constexpr double kLtKFloor = 1e-8;

// Unpenalized weighted least squares plus the weighted residual variance.
ComponentUpdate ml_component_update(const WeightedDesign& design,
                                    const Vector& y, const Vector& tau_col,
                                    double variance_floor = kVarianceFloor);

// Hoerl-Kennard-Baldwin style plug-in: k = p * sigma2 / (beta' beta).
double ridge_k_hkp(const Vector& beta_ml, double sigma2_ml, Eigen::Index p);

ComponentUpdate ridge_component_update(const WeightedDesign& design,
                                       const Vector& y, const Vector& tau_col,
                                       double k,
                                       double variance_floor = kVarianceFloor,
                                       bool penalize_intercept = true);

// k = (lambda_max - 100 lambda_min) / 99, clamped below at kLtKFloor.
double lt_k_eigen(const Vector& eigenvalues);

enum class LtPlugin { ML, Ridge };

// Mean-squared-error-optimal d in canonical coordinates for a fixed k,
// for either the ML or the ridge plug-in estimator.
double lt_d_optimal(const Vector& eigenvalues, const Vector& alpha,
                    double sigma2, double k, LtPlugin plugin_kind);

// Practical per-iteration d: the ridge-plug-in optimum evaluated at the
// current ridge estimates.
double lt_d_practical(const Vector& eigenvalues, const Vector& alpha_ridge,
                      double sigma2_ridge, double k);

// Alternative d with a different denominator weighting (decaying like
// (lambda+k)^-2 and carrying sigma^4); selectable for comparison runs.
double lt_d_literal(const Vector& eigenvalues, const Vector& alpha_ridge,
                    double sigma2_ridge, double k);

ComponentUpdate lt_component_update(const WeightedDesign& design,
                                    const Vector& y, const Vector& tau_col,
                                    double k, double d,
                                    const Vector& plugin_beta,
                                    double variance_floor = kVarianceFloor,
                                    bool penalize_intercept = true);

}  // namespace mixshrink

#endif  // MIXSHRINK_SHRINKAGE_HPP
