#ifndef MIXSHRINK_EVALUATION_HPP
#define MIXSHRINK_EVALUATION_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mixshrink/engine.hpp"
#include "mixshrink/rng.hpp"
#include "mixshrink/types.hpp"

namespace mixshrink {

// Point-prediction rule for held-out observations, which carry no
// responsibilities. MixtureMean is the squared-loss optimal choice;
// MaxComponent and ComponentDraw are provided for sensitivity studies and
// for matching resampling-style evaluation protocols.
enum class PredictRule { MixtureMean, MaxComponent, ComponentDraw };

std::string to_string(PredictRule rule);
PredictRule predict_rule_from_string(const std::string& name);

// One simulation scenario: population, sample size, collinearity level and
// the estimator configurations to evaluate on it.
struct ScenarioSpec {
  std::string name;
  int n = 0;
  double rho = 0.0;
  MixtureParams true_params;
  int n_covariates = 0;
  bool intercept = true;
  int k_folds = 5;
  int n_replicates = 0;
  std::uint64_t seed = 0;
  std::vector<FitConfig> fit_configs;
  PredictRule predict_rule = PredictRule::MixtureMean;
  int n_workers = 1;

  void validate() const;
};

struct ReplicateMetrics {
  double sse_beta = 0.0;
  double sse_pi = 0.0;
  double sse_sigma2 = 0.0;
  double rmsep = 0.0;
  StopReason fit_stop = StopReason::Tolerance;
  bool ok = false;
  std::string error;
};

struct MetricsSummary {
  double median = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double ci_length = 0.0;
};

struct CellSummary {
  Method method = Method::ML;
  EngineKind engine = EngineKind::EM;
  MetricsSummary sse_beta;
  MetricsSummary sse_pi;
  MetricsSummary sse_sigma2;
  MetricsSummary rmsep;
  int n_used = 0;
  int n_failed = 0;
  int n_degenerate = 0;  // usable fits that stopped on a degenerate partition
};

struct ExperimentResult {
  std::vector<CellSummary> cells;  // one per fit config, in config order
  int n_replicates = 0;
};

// Covariates sharing a latent factor: x_j = sqrt(1-rho^2) w_j + rho w_shared,
// giving unit variances and pairwise correlation rho^2.
Matrix generate_collinear_design(int n, int n_covariates, double rho,
                                 RngStream& rng);

// Component labels from the mixing proportions, responses from the labelled
// regression plus normal noise. Labels are returned for diagnostics only.
std::pair<Vector, std::vector<int>> generate_mixture_responses(
    const Matrix& X, const MixtureParams& true_params, RngStream& rng);

// Permutes the estimated components to best match the reference (minimum
// total squared coefficient distance, exhaustive over J! permutations).
MixtureParams align_components(const MixtureParams& estimated,
                               const MixtureParams& reference);

struct SseValues {
  double beta = 0.0;
  double pi = 0.0;
  double sigma2 = 0.0;
};

// Squared estimation errors against the reference; inputs must be aligned.
SseValues sse_metrics(const MixtureParams& estimated,
                      const MixtureParams& reference);

// Mixture-mean prediction: yhat_i = sum_j pi_j x_i' beta_j.
Vector predict(const MixtureParams& params, const Matrix& X);

Vector predict_with_rule(const MixtureParams& params, const Matrix& X,
                         PredictRule rule, RngStream& rng);

struct KfoldReport {
  double rmsep = 0.0;
  std::vector<double> fold_rmsep;
  std::vector<StopReason> fold_stops;
};

KfoldReport kfold_crossval(const Dataset& data, const FitConfig& config,
                           int k_folds, RngStream& rng,
                           PredictRule rule = PredictRule::MixtureMean);

// Pooled root mean squared error of prediction over all held-out folds.
double kfold_rmsep(const Dataset& data, const FitConfig& config, int k_folds,
                   RngStream& rng, PredictRule rule = PredictRule::MixtureMean);

// Type-7 (linear interpolation) percentile; q in [0, 100].
double percentile(std::vector<double> values, double q);

// Full replication study: per replicate generate data, fit every config,
// align, score, cross-validate; aggregate medians with 2.5/97.5 percentile
// bounds. Deterministic given the spec seed, independent of worker count.
ExperimentResult run_experiment(const ScenarioSpec& spec);

}  // namespace mixshrink

#endif  // MIXSHRINK_EVALUATION_HPP
