#include "mixshrink/mixture.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace mixshrink {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

// n x J matrix of log(pi_j) + log phi_j(y_i); the common building block for
// the likelihood and the responsibilities.
Matrix weighted_log_density(const Dataset& data, const MixtureParams& params) {
  const Eigen::Index n = data.n();
  const Eigen::Index J = params.n_components();
  if (params.n_coeffs() != data.p())
    throw DimensionError("mixture: coefficient length " +
                         std::to_string(params.n_coeffs()) +
                         " does not match design with p = " +
                         std::to_string(data.p()));

  Matrix logw(n, J);
  for (Eigen::Index j = 0; j < J; ++j) {
    const double log_pi = std::log(params.weights[j]);
    const double sigma2 = params.variances[j];
    const double log_norm = -0.5 * (kLogTwoPi + std::log(sigma2));
    Vector resid = data.y - data.X * params.coeffs[j];
    logw.col(j) =
        ((log_pi + log_norm) - resid.array().square() / (2.0 * sigma2))
            .matrix();
  }
  return logw;
}

}  // namespace

double component_logpdf(const Vector& x_row, double y, const Vector& beta,
                        double sigma2) {
  if (x_row.size() != beta.size())
    throw DimensionError("component logpdf: x has " +
                         std::to_string(x_row.size()) + " entries, beta has " +
                         std::to_string(beta.size()));
  if (!(sigma2 >= kVarianceFloor))
    throw NumericError("component logpdf: variance below floor");
  const double resid = y - x_row.dot(beta);
  return -0.5 * (kLogTwoPi + std::log(sigma2)) - resid * resid / (2.0 * sigma2);
}

double log_likelihood(const Dataset& data, const MixtureParams& params) {
  const Matrix logw = weighted_log_density(data, params);
  double total = 0.0;
  for (Eigen::Index i = 0; i < logw.rows(); ++i) {
    const double row_max = logw.row(i).maxCoeff();
    total += row_max + std::log((logw.row(i).array() - row_max).exp().sum());
  }
  return total;
}

double penalized_log_likelihood(const Dataset& data,
                                const MixtureParams& params,
                                const PenaltySpec& penalty) {
  const double loglik = log_likelihood(data, params);
  if (penalty.kind == PenaltyKind::None) return loglik;

  const Eigen::Index J = params.n_components();
  const Eigen::Index p = params.n_coeffs();
  if (penalty.k.size() != J)
    throw DimensionError("penalty: k has " + std::to_string(penalty.k.size()) +
                         " entries for " + std::to_string(J) + " components");

  Vector reg = Vector::Ones(p);
  if (!penalty.penalize_intercept) reg[0] = 0.0;

  double total_penalty = 0.0;
  for (Eigen::Index j = 0; j < J; ++j) {
    const double k = penalty.k[j];
    if (k < 0.0) throw NumericError("penalty: negative k");
    if (penalty.kind == PenaltyKind::Ridge) {
      total_penalty +=
          k * (reg.array() * params.coeffs[j].array().square()).sum() / 2.0;
    } else {
      if (k == 0.0)
        throw NumericError(
            "penalty: Liu-type penalty requires k > 0 (division by sqrt(k))");
      if (penalty.d.size() != J ||
          static_cast<Eigen::Index>(penalty.plugin.size()) != J ||
          penalty.plugin[j].size() != p)
        throw DimensionError("penalty: Liu-type plug-in dimensions mismatch");
      const double sqrt_k = std::sqrt(k);
      Vector r = (-penalty.d[j] / sqrt_k) * penalty.plugin[j] -
                 sqrt_k * params.coeffs[j];
      total_penalty += (reg.array() * r.array().square()).sum() / 2.0;
    }
  }
  return loglik - total_penalty;
}

Responsibilities responsibilities(const Dataset& data,
                                  const MixtureParams& params) {
  Matrix logw = weighted_log_density(data, params);
  Responsibilities out;
  out.tau.resize(logw.rows(), logw.cols());
  for (Eigen::Index i = 0; i < logw.rows(); ++i) {
    const double row_max = logw.row(i).maxCoeff();
    Eigen::ArrayXd row = (logw.row(i).array() - row_max).exp();
    out.tau.row(i) = (row / row.sum()).matrix();
  }
  return out;
}

std::pair<double, double> q_decomposition(const Dataset& data,
                                          const Responsibilities& tau,
                                          const MixtureParams& params) {
  const Eigen::Index n = data.n();
  const Eigen::Index J = params.n_components();
  if (tau.n() != n || tau.n_components() != J)
    throw DimensionError("q decomposition: responsibilities shape mismatch");

  double q1 = 0.0;
  double q2 = 0.0;
  for (Eigen::Index j = 0; j < J; ++j) {
    const double log_pi = std::log(params.weights[j]);
    const double sigma2 = params.variances[j];
    const double log_norm = -0.5 * (kLogTwoPi + std::log(sigma2));
    Vector resid = data.y - data.X * params.coeffs[j];
    for (Eigen::Index i = 0; i < n; ++i) {
      const double t = tau.tau(i, j);
      q1 += t * log_pi;
      q2 += t * (log_norm - resid[i] * resid[i] / (2.0 * sigma2));
    }
  }
  return {q1, q2};
}

}  // namespace mixshrink
