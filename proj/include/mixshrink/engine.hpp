#ifndef MIXSHRINK_ENGINE_HPP
#define MIXSHRINK_ENGINE_HPP

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mixshrink/mixture.hpp"
#include "mixshrink/rng.hpp"
#include "mixshrink/types.hpp"

namespace mixshrink {

enum class Method { ML, Ridge, LT_ITR, LT_HKP };
enum class EngineKind { EM, CEM, SEM };
enum class InitKind { RandomPartition, KMeansLike, Supplied };
enum class StopReason { Tolerance, MaxIter, DegeneratePartition };

std::string to_string(Method m);
std::string to_string(EngineKind e);
std::string to_string(StopReason r);
Method method_from_string(const std::string& name);
EngineKind engine_from_string(const std::string& name);

struct FitConfig {
  Method method = Method::ML;
  EngineKind engine = EngineKind::EM;
  int n_components = 1;
  double tol = 1e-6;
  int max_iter = 500;
  int n_starts = 5;
  std::uint64_t seed = 0;
  double variance_floor = kVarianceFloor;
  bool penalize_intercept = true;
  InitKind init = InitKind::RandomPartition;
  std::optional<MixtureParams> supplied_init;
  // When set, the HKP rule for the frozen Liu-type k uses the residual
  // standard deviation instead of the variance.
  bool hkp_uses_sd = false;
  // When set, the per-iteration d uses the alternative weighting of
  // lt_d_literal instead of the MSE-optimal rule.
  bool dj_literal = false;

  void validate() const;
};

// Hard assignment of observations to components.
struct Partition {
  std::vector<int> assignment;
  std::vector<int> counts;
};

struct FitResult {
  MixtureParams params;
  std::vector<double> objective_trace;  // method's penalized objective
  std::vector<double> loglik_trace;     // raw observed-data log-likelihood
  std::vector<Vector> k_trace;          // per-iteration per-component k
  std::vector<Vector> d_trace;          // per-iteration per-component d
  bool converged = false;
  StopReason stop_reason = StopReason::MaxIter;
  int iterations = 0;
  Responsibilities responsibilities_final;
  double best_objective = -std::numeric_limits<double>::infinity();
  int floor_hits = 0;  // variance-floor activations across iterations
  int start_index = 0;
  std::vector<std::string> warnings;
};

// E-step: delegates to the posterior membership weights.
Responsibilities e_step(const Dataset& data, const MixtureParams& params);

// C-step: each row goes to its maximum-responsibility component; exact ties
// are broken uniformly at random.
Partition c_step(const Responsibilities& tau, RngStream& rng);

// S-step: one multinomial draw per row from its responsibility vector.
Partition s_step(const Responsibilities& tau, RngStream& rng);

// Pooled M-step over the full design with responsibility weights.
MixtureParams m_step_pooled(const Dataset& data, const Responsibilities& tau,
                            const FitConfig& config,
                            const MixtureParams& state);

// Partitioned M-step: proportions from counts, component fits restricted to
// partition members with their responsibility weights.
MixtureParams m_step_partitioned(const Dataset& data,
                                 const Partition& partition,
                                 const Responsibilities& tau,
                                 const FitConfig& config,
                                 const MixtureParams& state);

struct SemIterate {
  MixtureParams params;
  double objective;
};

// Iterate with the maximum observed objective; later iterates win ties.
MixtureParams sem_select(const std::vector<SemIterate>& trace);

// Full fit: best result over n_starts restarts, deterministic given the seed.
FitResult fit(const Dataset& data, const FitConfig& config);

}  // namespace mixshrink

#endif  // MIXSHRINK_ENGINE_HPP
