#include "mixshrink/shrinkage.hpp"

#include <cmath>
#include <string>

namespace mixshrink {

namespace {

double check_tau_sum(const Vector& tau_col) {
  const double total = tau_col.sum();
  if (!(total > 0.0))
    throw DegenerateError("component update: zero total responsibility");
  return total;
}

// Weighted residual variance of the given coefficients, floored.
void set_sigma2(ComponentUpdate& update, const WeightedDesign& design,
                const Vector& y, double tau_sum, double variance_floor) {
  Vector resid = y - design.X * update.beta;
  const double wrss = (design.w.array() * resid.array().square()).sum();
  double sigma2 = wrss / tau_sum;
  if (sigma2 < variance_floor) {
    sigma2 = variance_floor;
    update.variance_floored = true;
  }
  update.sigma2 = sigma2;
}

Vector regularizer(Eigen::Index p, bool penalize_intercept) {
  Vector reg = Vector::Ones(p);
  if (!penalize_intercept) reg[0] = 0.0;
  return reg;
}

}  // namespace

ComponentUpdate ml_component_update(const WeightedDesign& design,
                                    const Vector& y, const Vector& tau_col,
                                    double variance_floor) {
  const double tau_sum = check_tau_sum(tau_col);
  auto [xtwx, xtwy] = weighted_cross_products(design, y);

  const EigenSystem eig = symmetric_eigen(xtwx);
  const double lambda_max = eig.eigenvalues[0];
  int rank = 0;
  for (Eigen::Index m = 0; m < eig.eigenvalues.size(); ++m)
    if (eig.eigenvalues[m] > kRankTol * lambda_max) ++rank;
  if (rank < design.p())
    throw RankError("ml update: weighted design has rank " +
                        std::to_string(rank) + " < p = " +
                        std::to_string(design.p()),
                    rank);

  ComponentUpdate update;
  update.beta = ridge_solve(xtwx, xtwy, 0.0);
  set_sigma2(update, design, y, tau_sum, variance_floor);
  return update;
}

double ridge_k_hkp(const Vector& beta_ml, double sigma2_ml, Eigen::Index p) {
  const double btb = beta_ml.squaredNorm();
  if (!(btb > 0.0))
    throw NumericError("hkp rule: zero coefficient vector");
  const double k = static_cast<double>(p) * sigma2_ml / btb;
  if (!std::isfinite(k) || k <= 0.0)
    throw NumericError("hkp rule: non-positive k");
  return k;
}

ComponentUpdate ridge_component_update(const WeightedDesign& design,
                                       const Vector& y, const Vector& tau_col,
                                       double k, double variance_floor,
                                       bool penalize_intercept) {
  if (k < 0.0) throw NumericError("ridge update: negative k");
  const double tau_sum = check_tau_sum(tau_col);
  auto [xtwx, xtwy] = weighted_cross_products(design, y);

  ComponentUpdate update;
  update.k_used = k;
  update.beta = ridge_solve_diag(xtwx, xtwy, k,
                                 regularizer(design.p(), penalize_intercept));
  set_sigma2(update, design, y, tau_sum, variance_floor);
  return update;
}

double lt_k_eigen(const Vector& eigenvalues) {
  const Eigen::Index p = eigenvalues.size();
  if (p < 1) throw DimensionError("lt k: empty spectrum");
  for (Eigen::Index m = 1; m < p; ++m)
    if (eigenvalues[m] > eigenvalues[m - 1])
      throw NumericError("lt k: eigenvalues not sorted descending");
  if (!(eigenvalues[0] > 0.0))
    throw NumericError("lt k: largest eigenvalue must be positive");
  const double k = (eigenvalues[0] - 100.0 * eigenvalues[p - 1]) / 99.0;
  return std::max(kLtKFloor, k);
}

double lt_d_optimal(const Vector& eigenvalues, const Vector& alpha,
                    double sigma2, double k, LtPlugin plugin_kind) {
  const Eigen::Index p = eigenvalues.size();
  if (alpha.size() != p)
    throw DimensionError("lt d: alpha has " + std::to_string(alpha.size()) +
                         " entries for " + std::to_string(p) + " eigenvalues");
  if (!(k > 0.0)) throw NumericError("lt d: requires k > 0");
  // The ML plug-in form carries 1/lambda, so it needs a strictly positive
  // spectrum; the ridge form is continuous at lambda = 0 (terms vanish).
  if (plugin_kind == LtPlugin::ML && (eigenvalues.array() <= 0.0).any())
    throw NumericError("lt d: ML plug-in requires positive eigenvalues");
  if ((eigenvalues.array() < 0.0).any())
    throw NumericError("lt d: negative eigenvalue");

  double num = 0.0;
  double den = 0.0;
  for (Eigen::Index m = 0; m < p; ++m) {
    const double lambda = eigenvalues[m];
    const double a2 = alpha[m] * alpha[m];
    const double lk = lambda + k;
    if (plugin_kind == LtPlugin::ML) {
      num += (sigma2 - k * a2) / (lk * lk);
      den += (lambda * a2 + sigma2) / (lambda * lk * lk);
    } else {
      num += lambda * (sigma2 - k * a2) / (lk * lk * lk);
      den += lambda * (lambda * a2 + sigma2) / (lk * lk * lk * lk);
    }
  }
  if (den == 0.0) throw NumericError("lt d: zero denominator");
  return num / den;
}

double lt_d_practical(const Vector& eigenvalues, const Vector& alpha_ridge,
                      double sigma2_ridge, double k) {
  return lt_d_optimal(eigenvalues, alpha_ridge, sigma2_ridge, k,
                      LtPlugin::Ridge);
}

double lt_d_literal(const Vector& eigenvalues, const Vector& alpha_ridge,
                    double sigma2_ridge, double k) {
  const Eigen::Index p = eigenvalues.size();
  if (alpha_ridge.size() != p)
    throw DimensionError("lt d literal: dimension mismatch");
  if (!(k > 0.0)) throw NumericError("lt d literal: requires k > 0");
  double num = 0.0;
  double den = 0.0;
  for (Eigen::Index m = 0; m < p; ++m) {
    const double lambda = eigenvalues[m];
    const double a2 = alpha_ridge[m] * alpha_ridge[m];
    const double lk = lambda + k;
    num += lambda * (sigma2_ridge - k * a2) / (lk * lk * lk);
    den += (lambda * a2 + sigma2_ridge * sigma2_ridge) / (lk * lk);
  }
  if (den == 0.0) throw NumericError("lt d literal: zero denominator");
  return num / den;
}

ComponentUpdate lt_component_update(const WeightedDesign& design,
                                    const Vector& y, const Vector& tau_col,
                                    double k, double d,
                                    const Vector& plugin_beta,
                                    double variance_floor,
                                    bool penalize_intercept) {
  if (!(k > 0.0)) throw NumericError("lt update: requires k > 0");
  if (plugin_beta.size() != design.p())
    throw DimensionError("lt update: plug-in has " +
                         std::to_string(plugin_beta.size()) +
                         " entries, expected " + std::to_string(design.p()));
  const double tau_sum = check_tau_sum(tau_col);
  auto [xtwx, xtwy] = weighted_cross_products(design, y);

  const Vector reg = regularizer(design.p(), penalize_intercept);
  Vector rhs = xtwy - d * (reg.array() * plugin_beta.array()).matrix();

  ComponentUpdate update;
  update.k_used = k;
  update.d_used = d;
  update.beta = ridge_solve_diag(xtwx, rhs, k, reg);
  set_sigma2(update, design, y, tau_sum, variance_floor);
  return update;
}

}  // namespace mixshrink
