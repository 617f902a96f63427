#include "mixshrink/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mixshrink/numerics.hpp"
#include "mixshrink/shrinkage.hpp"

namespace mixshrink {

namespace {

constexpr double kStarvationTol = 1e-10;

// Minimum-norm WLS solution via the truncated spectrum. Used only for the
// HKP plug-in inside ridge fits, where a rank-deficient weighted design must
// not abort the iteration (the ridge solve itself is regularized).
ComponentUpdate ml_plugin_update(const WeightedDesign& design, const Vector& y,
                                 const Vector& tau_col,
                                 double variance_floor) {
  auto [xtwx, xtwy] = weighted_cross_products(design, y);
  const EigenSystem eig = symmetric_eigen(xtwx);
  const double lambda_max = std::max(eig.eigenvalues[0], 0.0);

  Vector inv = Vector::Zero(eig.eigenvalues.size());
  for (Eigen::Index m = 0; m < eig.eigenvalues.size(); ++m)
    if (eig.eigenvalues[m] > kRankTol * lambda_max)
      inv[m] = 1.0 / eig.eigenvalues[m];

  ComponentUpdate update;
  update.beta = eig.eigenvectors * inv.asDiagonal() *
                (eig.eigenvectors.transpose() * xtwy);
  Vector resid = y - design.X * update.beta;
  update.sigma2 = std::max(
      variance_floor,
      (design.w.array() * resid.array().square()).sum() / tau_col.sum());
  return update;
}

// Squared norm over the penalized coordinates plus their count.
std::pair<double, Eigen::Index> penalized_norm(const Vector& beta,
                                               bool penalize_intercept) {
  if (penalize_intercept) return {beta.squaredNorm(), beta.size()};
  return {beta.squaredNorm() - beta[0] * beta[0], beta.size() - 1};
}

double hkp_k(const Vector& beta, double sigma2, const FitConfig& config) {
  auto [btb, p_eff] = penalized_norm(beta, config.penalize_intercept);
  if (!(btb > 0.0)) throw NumericError("hkp rule: zero coefficient vector");
  const double scale = config.hkp_uses_sd ? std::sqrt(sigma2) : sigma2;
  return static_cast<double>(p_eff) * scale / btb;
}

struct MStepOutcome {
  MixtureParams params;
  PenaltySpec penalty;
  int floor_hits = 0;
};

// One per-component update with the configured method. frozen_k, when
// non-null, holds the LT(HKP) parameters fixed for the whole run. For the
// Liu-type methods plugin_out receives the ridge plug-in that entered the
// update, so the penalized objective can be evaluated consistently.
ComponentUpdate update_component(const WeightedDesign& design, const Vector& y,
                                 const Vector& tau_col,
                                 const FitConfig& config,
                                 const Vector* frozen_k, Eigen::Index j,
                                 Vector* plugin_out) {
  switch (config.method) {
    case Method::ML:
      return ml_component_update(design, y, tau_col, config.variance_floor);

    case Method::Ridge: {
      const ComponentUpdate plug =
          ml_plugin_update(design, y, tau_col, config.variance_floor);
      const double k = hkp_k(plug.beta, plug.sigma2, config);
      return ridge_component_update(design, y, tau_col, k,
                                    config.variance_floor,
                                    config.penalize_intercept);
    }

    case Method::LT_ITR:
    case Method::LT_HKP: {
      Matrix xtwx = design.X.transpose() * design.w.asDiagonal() * design.X;
      xtwx = 0.5 * (xtwx + xtwx.transpose()).eval();
      const EigenSystem eig = symmetric_eigen(xtwx);
      const double k = (config.method == Method::LT_HKP)
                           ? (*frozen_k)[j]
                           : lt_k_eigen(eig.eigenvalues);
      ComponentUpdate ridge_up =
          ridge_component_update(design, y, tau_col, k, config.variance_floor,
                                 config.penalize_intercept);
      const Vector alpha_ridge = eig.eigenvectors.transpose() * ridge_up.beta;
      // Rounding can leave a tiny negative eigenvalue on near-singular
      // weighted designs; the ridge-plug-in d is continuous at zero.
      const Vector lam = eig.eigenvalues.cwiseMax(0.0);
      const double d =
          config.dj_literal
              ? lt_d_literal(lam, alpha_ridge, ridge_up.sigma2, k)
              : lt_d_practical(lam, alpha_ridge, ridge_up.sigma2, k);
      ComponentUpdate update = lt_component_update(
          design, y, tau_col, k, d, ridge_up.beta, config.variance_floor,
          config.penalize_intercept);
      if (plugin_out != nullptr) *plugin_out = std::move(ridge_up.beta);
      return update;
    }
  }
  throw ConfigError("unknown method");
}

PenaltyKind penalty_kind(Method method) {
  switch (method) {
    case Method::ML:
      return PenaltyKind::None;
    case Method::Ridge:
      return PenaltyKind::Ridge;
    default:
      return PenaltyKind::LiuType;
  }
}

void prepare_outcome(MStepOutcome& out, Eigen::Index J,
                     const FitConfig& config) {
  out.params.weights.resize(J);
  out.params.variances.resize(J);
  out.params.coeffs.resize(J);
  out.penalty.kind = penalty_kind(config.method);
  out.penalty.penalize_intercept = config.penalize_intercept;
  out.penalty.k = Vector::Zero(J);
  out.penalty.d = Vector::Zero(J);
  out.penalty.plugin.assign(J, Vector());
}

void store_component(MStepOutcome& out, Eigen::Index j,
                     ComponentUpdate update, Vector plugin) {
  out.params.coeffs[j] = std::move(update.beta);
  out.params.variances[j] = update.sigma2;
  out.penalty.k[j] = update.k_used;
  out.penalty.d[j] = update.d_used;
  out.penalty.plugin[j] = std::move(plugin);
  if (update.variance_floored) ++out.floor_hits;
}

MStepOutcome m_step_pooled_impl(const Dataset& data,
                                const Responsibilities& tau,
                                const FitConfig& config,
                                const Vector* frozen_k) {
  const Eigen::Index n = data.n();
  const Eigen::Index J = tau.n_components();

  MStepOutcome out;
  prepare_outcome(out, J, config);

  for (Eigen::Index j = 0; j < J; ++j) {
    const Vector tau_col = tau.tau.col(j);
    const double tau_sum = tau_col.sum();
    if (tau_sum < kStarvationTol)
      throw DegenerateError("pooled m-step: component " + std::to_string(j) +
                            " starved (sum tau = " + std::to_string(tau_sum) +
                            ")");
    out.params.weights[j] = tau_sum / static_cast<double>(n);

    WeightedDesign design{data.X, tau_col};
    Vector plugin = Vector::Zero(data.p());
    ComponentUpdate update =
        update_component(design, data.y, tau_col, config, frozen_k, j,
                         &plugin);
    store_component(out, j, std::move(update), std::move(plugin));
  }
  return out;
}

MStepOutcome m_step_partitioned_impl(const Dataset& data,
                                     const Partition& partition,
                                     const Responsibilities& tau,
                                     const FitConfig& config,
                                     const Vector* frozen_k) {
  const Eigen::Index n = data.n();
  const Eigen::Index J = static_cast<Eigen::Index>(partition.counts.size());

  // CEM/SEM rule: an empty or singleton partition ends the run.
  for (Eigen::Index j = 0; j < J; ++j)
    if (partition.counts[j] <= 1)
      throw DegenerateError("partitioned m-step: partition " +
                            std::to_string(j) + " has " +
                            std::to_string(partition.counts[j]) +
                            " observation(s)");

  MStepOutcome out;
  prepare_outcome(out, J, config);

  for (Eigen::Index j = 0; j < J; ++j) {
    const int nj = partition.counts[j];
    Matrix xj(nj, data.p());
    Vector yj(nj);
    Vector tau_j(nj);
    int row = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (partition.assignment[i] != j) continue;
      xj.row(row) = data.X.row(i);
      yj[row] = data.y[i];
      tau_j[row] = tau.tau(i, j);
      ++row;
    }

    out.params.weights[j] = static_cast<double>(nj) / static_cast<double>(n);

    WeightedDesign design{std::move(xj), tau_j};
    Vector plugin = Vector::Zero(data.p());
    ComponentUpdate update =
        update_component(design, yj, tau_j, config, frozen_k, j, &plugin);
    store_component(out, j, std::move(update), std::move(plugin));
  }
  return out;
}

bool params_finite(const MixtureParams& params) {
  if (!params.weights.allFinite() || !params.variances.allFinite())
    return false;
  for (const auto& beta : params.coeffs)
    if (!beta.allFinite()) return false;
  return true;
}

std::size_t sem_select_index(const std::vector<SemIterate>& trace) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < trace.size(); ++i)
    if (trace[i].objective >= trace[best].objective) best = i;
  return best;
}

MixtureParams init_from_partition(const Dataset& data,
                                  const Partition& partition,
                                  const FitConfig& config) {
  Responsibilities one_hot;
  one_hot.tau = Matrix::Zero(data.n(), config.n_components);
  for (Eigen::Index i = 0; i < data.n(); ++i)
    one_hot.tau(i, partition.assignment[i]) = 1.0;

  FitConfig ml_config = config;
  ml_config.method = Method::ML;
  MStepOutcome outcome =
      m_step_partitioned_impl(data, partition, one_hot, ml_config, nullptr);
  return std::move(outcome.params);
}

MixtureParams make_init(const Dataset& data, const FitConfig& config,
                        RngStream rng) {
  const Eigen::Index n = data.n();
  const int J = config.n_components;

  if (config.init == InitKind::Supplied) {
    const MixtureParams& params = *config.supplied_init;
    params.validate(config.variance_floor);
    if (params.n_components() != J || params.n_coeffs() != data.p())
      throw DimensionError("init: supplied parameters do not match data");
    return params;
  }

  if (config.init == InitKind::KMeansLike) {
    // Quantile split on the response: contiguous blocks of sorted y.
    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](auto a, auto b) { return data.y[a] < data.y[b]; });
    Partition partition;
    partition.assignment.assign(n, 0);
    partition.counts.assign(J, 0);
    for (Eigen::Index r = 0; r < n; ++r) {
      const int j = static_cast<int>((r * J) / n);
      partition.assignment[order[r]] = j;
      ++partition.counts[j];
    }
    return init_from_partition(data, partition, config);
  }

  // RandomPartition: uniform assignment, redrawn until every component has
  // enough members for a full-rank per-partition ML fit.
  const int min_count = std::min<int>(
      static_cast<int>(data.p()) + 1,
      std::max<int>(2, static_cast<int>(n) / (2 * J)));
  for (int attempt = 0; attempt < 64; ++attempt) {
    Partition partition;
    partition.assignment.resize(n);
    partition.counts.assign(J, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int j = static_cast<int>(rng.uniform_below(J));
      partition.assignment[i] = j;
      ++partition.counts[j];
    }
    if (*std::min_element(partition.counts.begin(), partition.counts.end()) <
        min_count)
      continue;
    try {
      return init_from_partition(data, partition, config);
    } catch (const Error&) {
      continue;  // singular block; redraw
    }
  }
  throw DegenerateError(
      "init: failed to draw a usable random partition after 64 attempts");
}

Vector freeze_hkp_k(const MixtureParams& ridge_params,
                    const FitConfig& config) {
  const Eigen::Index J = ridge_params.n_components();
  Vector k(J);
  for (Eigen::Index j = 0; j < J; ++j)
    k[j] = hkp_k(ridge_params.coeffs[j], ridge_params.variances[j], config);
  return k;
}

FitResult run_engine_loop(const Dataset& data, const FitConfig& config,
                          RngStream rng, const MixtureParams& init_params,
                          const Vector* frozen_k) {
  FitResult result;
  result.params = init_params;

  std::vector<SemIterate> chain;
  double prev_obj = std::numeric_limits<double>::quiet_NaN();

  for (int iter = 1; iter <= config.max_iter; ++iter) {
    const Responsibilities tau = e_step(data, result.params);

    MStepOutcome outcome;
    try {
      if (config.engine == EngineKind::EM) {
        outcome = m_step_pooled_impl(data, tau, config, frozen_k);
      } else {
        const Partition partition = (config.engine == EngineKind::CEM)
                                        ? c_step(tau, rng)
                                        : s_step(tau, rng);
        outcome =
            m_step_partitioned_impl(data, partition, tau, config, frozen_k);
      }
    } catch (const DegenerateError&) {
      // Current iterate is returned unchanged.
      result.stop_reason = StopReason::DegeneratePartition;
      break;
    } catch (const RankError&) {
      result.stop_reason = StopReason::DegeneratePartition;
      break;
    }

    if (!params_finite(outcome.params))
      throw NumericError("engine: non-finite parameters at iteration " +
                         std::to_string(iter) + " (" +
                         to_string(config.method) + "/" +
                         to_string(config.engine) + ")");

    const double objective =
        penalized_log_likelihood(data, outcome.params, outcome.penalty);
    const double loglik = (outcome.penalty.kind == PenaltyKind::None)
                              ? objective
                              : log_likelihood(data, outcome.params);

    result.params = std::move(outcome.params);
    result.objective_trace.push_back(objective);
    result.loglik_trace.push_back(loglik);
    result.k_trace.push_back(outcome.penalty.k);
    result.d_trace.push_back(outcome.penalty.d);
    result.floor_hits += outcome.floor_hits;
    result.iterations = iter;

    if (config.engine == EngineKind::SEM)
      chain.push_back({result.params, objective});

    if (!std::isnan(prev_obj) && std::abs(objective - prev_obj) < config.tol) {
      result.converged = true;
      result.stop_reason = StopReason::Tolerance;
      break;
    }
    prev_obj = objective;
  }

  if (config.engine == EngineKind::SEM && !chain.empty()) {
    const std::size_t best = sem_select_index(chain);
    result.params = chain[best].params;
    result.best_objective = chain[best].objective;
  } else if (!result.objective_trace.empty()) {
    result.best_objective = result.objective_trace.back();
  }

  result.responsibilities_final = e_step(data, result.params);
  return result;
}

FitResult run_one_start(const Dataset& data, const FitConfig& config,
                        RngStream rng, const MixtureParams& init_params) {
  if (config.method != Method::LT_HKP)
    return run_engine_loop(data, config, std::move(rng), init_params, nullptr);

  // LT(HKP): a full ridge fit supplies the frozen k, and its solution seeds
  // the Liu-type iterations.
  FitConfig ridge_config = config;
  ridge_config.method = Method::Ridge;
  FitResult ridge_fit =
      run_engine_loop(data, ridge_config, rng.fork(0), init_params, nullptr);

  const Vector frozen_k = freeze_hkp_k(ridge_fit.params, config);
  return run_engine_loop(data, config, rng.fork(1), ridge_fit.params,
                         &frozen_k);
}

}  // namespace

void FitConfig::validate() const {
  if (n_components < 1) throw ConfigError("config: need n_components >= 1");
  if (!(tol > 0.0)) throw ConfigError("config: need tol > 0");
  if (max_iter < 1) throw ConfigError("config: need max_iter >= 1");
  if (n_starts < 1) throw ConfigError("config: need n_starts >= 1");
  if (!(variance_floor > 0.0))
    throw ConfigError("config: need variance_floor > 0");
  if (init == InitKind::Supplied && !supplied_init)
    throw ConfigError("config: Supplied init without parameters");
}

std::string to_string(Method m) {
  switch (m) {
    case Method::ML:
      return "ml";
    case Method::Ridge:
      return "ridge";
    case Method::LT_ITR:
      return "lt-itr";
    case Method::LT_HKP:
      return "lt-hkp";
  }
  return "?";
}

std::string to_string(EngineKind e) {
  switch (e) {
    case EngineKind::EM:
      return "em";
    case EngineKind::CEM:
      return "cem";
    case EngineKind::SEM:
      return "sem";
  }
  return "?";
}

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::Tolerance:
      return "tolerance";
    case StopReason::MaxIter:
      return "max-iter";
    case StopReason::DegeneratePartition:
      return "degenerate-partition";
  }
  return "?";
}

Method method_from_string(const std::string& name) {
  if (name == "ml") return Method::ML;
  if (name == "ridge") return Method::Ridge;
  if (name == "lt-itr") return Method::LT_ITR;
  if (name == "lt-hkp") return Method::LT_HKP;
  throw ConfigError("unknown method '" + name + "'");
}

EngineKind engine_from_string(const std::string& name) {
  if (name == "em") return EngineKind::EM;
  if (name == "cem") return EngineKind::CEM;
  if (name == "sem") return EngineKind::SEM;
  throw ConfigError("unknown engine '" + name + "'");
}

Responsibilities e_step(const Dataset& data, const MixtureParams& params) {
  return responsibilities(data, params);
}

Partition c_step(const Responsibilities& tau, RngStream& rng) {
  const Eigen::Index n = tau.n();
  const Eigen::Index J = tau.n_components();
  Partition partition;
  partition.assignment.resize(n);
  partition.counts.assign(J, 0);

  std::vector<int> argmax_set;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double row_max = tau.tau.row(i).maxCoeff();
    argmax_set.clear();
    for (Eigen::Index j = 0; j < J; ++j)
      if (tau.tau(i, j) == row_max) argmax_set.push_back(static_cast<int>(j));
    const int pick = (argmax_set.size() == 1)
                         ? argmax_set.front()
                         : argmax_set[rng.uniform_below(argmax_set.size())];
    partition.assignment[i] = pick;
    ++partition.counts[pick];
  }
  return partition;
}

Partition s_step(const Responsibilities& tau, RngStream& rng) {
  const Eigen::Index n = tau.n();
  const Eigen::Index J = tau.n_components();
  Partition partition;
  partition.assignment.resize(n);
  partition.counts.assign(J, 0);

  std::vector<double> row(J);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < J; ++j) row[j] = tau.tau(i, j);
    const int pick = static_cast<int>(rng.categorical(row));
    partition.assignment[i] = pick;
    ++partition.counts[pick];
  }
  return partition;
}

MixtureParams m_step_pooled(const Dataset& data, const Responsibilities& tau,
                            const FitConfig& config,
                            const MixtureParams& state) {
  const Vector* frozen = nullptr;
  Vector frozen_k;
  if (config.method == Method::LT_HKP) {
    frozen_k = freeze_hkp_k(state, config);
    frozen = &frozen_k;
  }
  return m_step_pooled_impl(data, tau, config, frozen).params;
}

MixtureParams m_step_partitioned(const Dataset& data,
                                 const Partition& partition,
                                 const Responsibilities& tau,
                                 const FitConfig& config,
                                 const MixtureParams& state) {
  const Vector* frozen = nullptr;
  Vector frozen_k;
  if (config.method == Method::LT_HKP) {
    frozen_k = freeze_hkp_k(state, config);
    frozen = &frozen_k;
  }
  return m_step_partitioned_impl(data, partition, tau, config, frozen).params;
}

MixtureParams sem_select(const std::vector<SemIterate>& trace) {
  if (trace.empty()) throw DimensionError("sem select: empty trace");
  return trace[sem_select_index(trace)].params;
}

FitResult fit(const Dataset& data, const FitConfig& config) {
  config.validate();
  data.validate();

  std::vector<std::string> warnings;
  if (data.n() <=
      static_cast<Eigen::Index>(config.n_components) * (data.p() + 1))
    warnings.push_back("fit: n = " + std::to_string(data.n()) +
                       " is small for J*(p+1) = " +
                       std::to_string(config.n_components *
                                      (static_cast<int>(data.p()) + 1)));

  RngStream master(config.seed);
  std::optional<FitResult> best;
  std::vector<std::string> failures;

  for (int s = 0; s < config.n_starts; ++s) {
    RngStream start_stream = master.fork(static_cast<std::uint64_t>(s));
    try {
      MixtureParams init = make_init(data, config, start_stream.fork(0));
      FitResult result =
          run_one_start(data, config, start_stream.fork(1), init);
      result.start_index = s;
      if (!best || result.best_objective > best->best_objective)
        best = std::move(result);
    } catch (const Error& err) {
      failures.push_back("start " + std::to_string(s) + ": " + err.what());
    }
  }

  if (!best)
    throw DegenerateError(
        "fit: all starts failed [" +
        std::accumulate(failures.begin(), failures.end(), std::string(),
                        [](std::string acc, const std::string& f) {
                          return acc.empty() ? f : acc + "; " + f;
                        }) +
        "]");

  best->warnings = std::move(warnings);
  return *std::move(best);
}

}  // namespace mixshrink
