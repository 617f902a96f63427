#ifndef MIXSHRINK_TYPES_HPP
#define MIXSHRINK_TYPES_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace mixshrink {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Lower bound applied to every component variance; fits that touch it are
// flagged in diagnostics.
inline constexpr double kVarianceFloor = 1e-8;

// Relative eigenvalue threshold below which a cross-product matrix is
// treated as rank deficient.
inline constexpr double kRankTol = 1e-12;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class RankError : public Error {
 public:
  RankError(const std::string& msg, int detected_rank)
      : Error(msg), detected_rank(detected_rank) {}
  int detected_rank;
};

class SingularError : public Error {
 public:
  using Error::Error;
};

class DegenerateError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& msg, long line) : Error(msg), line(line) {}
  long line;
};

// Response vector plus design matrix. The intercept column, when requested,
// is added at ingestion so X always holds exactly what the model sees.
struct Dataset {
  Vector y;
  Matrix X;

  Eigen::Index n() const { return y.size(); }
  Eigen::Index p() const { return X.cols(); }

  void validate() const {
    if (X.rows() != y.size())
      throw DimensionError("dataset: X has " + std::to_string(X.rows()) +
                           " rows but y has " + std::to_string(y.size()));
    if (!y.allFinite() || !X.allFinite())
      throw NumericError("dataset: non-finite entries");
    if (n() <= p())
      throw DimensionError("dataset: need n > p, got n=" +
                           std::to_string(n()) + ", p=" + std::to_string(p()));
  }
};

// Full parameter vector of the mixture: mixing proportions, per-component
// coefficients and variances.
struct MixtureParams {
  Vector weights;
  std::vector<Vector> coeffs;
  Vector variances;

  Eigen::Index n_components() const { return weights.size(); }
  Eigen::Index n_coeffs() const {
    return coeffs.empty() ? 0 : coeffs.front().size();
  }

  void validate(double variance_floor = kVarianceFloor) const {
    const Eigen::Index J = n_components();
    if (J < 1) throw DimensionError("params: need at least one component");
    if (static_cast<Eigen::Index>(coeffs.size()) != J ||
        variances.size() != J)
      throw DimensionError("params: component count mismatch");
    if (std::abs(weights.sum() - 1.0) > 1e-10)
      throw NumericError("params: mixing proportions sum to " +
                         std::to_string(weights.sum()));
    for (Eigen::Index j = 0; j < J; ++j) {
      if (J >= 2 && (weights[j] <= 0.0 || weights[j] >= 1.0))
        throw NumericError("params: proportion " + std::to_string(j) +
                           " outside (0,1)");
      if (!(variances[j] >= variance_floor) || !std::isfinite(variances[j]))
        throw NumericError("params: variance " + std::to_string(j) +
                           " below floor");
      if (!coeffs[j].allFinite())
        throw NumericError("params: non-finite coefficients in component " +
                           std::to_string(j));
      if (coeffs[j].size() != n_coeffs())
        throw DimensionError("params: ragged coefficient vectors");
    }
  }

  MixtureParams permuted(const std::vector<int>& perm) const {
    MixtureParams out;
    const Eigen::Index J = n_components();
    out.weights.resize(J);
    out.variances.resize(J);
    out.coeffs.resize(J);
    for (Eigen::Index j = 0; j < J; ++j) {
      out.weights[j] = weights[perm[j]];
      out.variances[j] = variances[perm[j]];
      out.coeffs[j] = coeffs[perm[j]];
    }
    return out;
  }
};

// Posterior membership weights, one row per observation.
struct Responsibilities {
  Matrix tau;

  Eigen::Index n() const { return tau.rows(); }
  Eigen::Index n_components() const { return tau.cols(); }
};

enum class PenaltyKind { None, Ridge, LiuType };

// Penalty attached to the mixture objective. For Liu-type, `plugin` holds
// the per-component coefficient estimates appearing inside the penalty.
struct PenaltySpec {
  PenaltyKind kind = PenaltyKind::None;
  Vector k;
  Vector d;
  std::vector<Vector> plugin;
  bool penalize_intercept = true;

  static PenaltySpec none() { return PenaltySpec{}; }
};

}  // namespace mixshrink

#endif  // MIXSHRINK_TYPES_HPP
