#include "mixshrink/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

namespace mixshrink {

std::string to_string(PredictRule rule) {
  switch (rule) {
    case PredictRule::MixtureMean:
      return "mixture-mean";
    case PredictRule::MaxComponent:
      return "max-component";
    case PredictRule::ComponentDraw:
      return "component-draw";
  }
  return "?";
}

PredictRule predict_rule_from_string(const std::string& name) {
  if (name == "mixture-mean") return PredictRule::MixtureMean;
  if (name == "max-component") return PredictRule::MaxComponent;
  if (name == "component-draw") return PredictRule::ComponentDraw;
  throw ConfigError("unknown predict rule '" + name + "'");
}

void ScenarioSpec::validate() const {
  if (n <= 0) throw ConfigError("scenario: need n > 0");
  if (rho < 0.0 || rho >= 1.0)
    throw ConfigError("scenario: need 0 <= rho < 1");
  if (n_covariates < 1) throw ConfigError("scenario: need n_covariates >= 1");
  if (n_replicates < 1) throw ConfigError("scenario: need n_replicates >= 1");
  if (k_folds < 2) throw ConfigError("scenario: need k_folds >= 2");
  if (k_folds > n) throw ConfigError("scenario: k_folds exceeds n");
  if (fit_configs.empty()) throw ConfigError("scenario: no fit configs");
  if (n_workers < 1) throw ConfigError("scenario: need n_workers >= 1");
  true_params.validate();
  const Eigen::Index expected = n_covariates + (intercept ? 1 : 0);
  if (true_params.n_coeffs() != expected)
    throw ConfigError("scenario: true coefficients have " +
                      std::to_string(true_params.n_coeffs()) +
                      " entries, expected " + std::to_string(expected));
  for (const auto& cfg : fit_configs) {
    cfg.validate();
    if (cfg.n_components != true_params.n_components())
      throw ConfigError("scenario: fit config component count mismatch");
  }
}

Matrix generate_collinear_design(int n, int n_covariates, double rho,
                                 RngStream& rng) {
  if (rho < 0.0 || rho >= 1.0)
    throw NumericError("design generator: need 0 <= rho < 1");
  const double indep = std::sqrt(1.0 - rho * rho);
  Matrix x(n, n_covariates);
  for (int i = 0; i < n; ++i) {
    // w_{i,1..nc} are covariate-specific, the last draw is the shared factor.
    double shared = 0.0;
    for (int j = 0; j < n_covariates; ++j) x(i, j) = rng.normal();
    shared = rng.normal();
    for (int j = 0; j < n_covariates; ++j)
      x(i, j) = indep * x(i, j) + rho * shared;
  }
  return x;
}

std::pair<Vector, std::vector<int>> generate_mixture_responses(
    const Matrix& X, const MixtureParams& true_params, RngStream& rng) {
  // Looser checks than MixtureParams::validate(): as a sampling population,
  // boundary proportions (pi_j = 0 or 1) are legitimate.
  if (std::abs(true_params.weights.sum() - 1.0) > 1e-10 ||
      (true_params.weights.array() < 0.0).any())
    throw NumericError("response generator: invalid mixing proportions");
  if ((true_params.variances.array() < 0.0).any())
    throw NumericError("response generator: negative variance");
  if (X.cols() != true_params.n_coeffs())
    throw DimensionError("response generator: design has " +
                         std::to_string(X.cols()) + " columns, coefficients " +
                         std::to_string(true_params.n_coeffs()));
  const Eigen::Index n = X.rows();
  const Eigen::Index J = true_params.n_components();

  std::vector<double> weights(J);
  for (Eigen::Index j = 0; j < J; ++j) weights[j] = true_params.weights[j];

  Vector y(n);
  std::vector<int> labels(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int j = static_cast<int>(rng.categorical(weights));
    labels[i] = j;
    const double mean = X.row(i).dot(true_params.coeffs[j]);
    y[i] = mean + std::sqrt(true_params.variances[j]) * rng.normal();
  }
  return {std::move(y), std::move(labels)};
}

MixtureParams align_components(const MixtureParams& estimated,
                               const MixtureParams& reference) {
  const Eigen::Index J = reference.n_components();
  if (estimated.n_components() != J ||
      estimated.n_coeffs() != reference.n_coeffs())
    throw DimensionError("align: component structure mismatch");
  if (J > 8) throw ConfigError("align: exhaustive search limited to J <= 8");

  std::vector<int> perm(J);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (Eigen::Index j = 0; j < J; ++j)
      cost += (estimated.coeffs[perm[j]] - reference.coeffs[j]).squaredNorm();
    if (cost < best_cost) {  // strict: keeps the lexicographically smallest
      best_cost = cost;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  return estimated.permuted(best);
}

SseValues sse_metrics(const MixtureParams& estimated,
                      const MixtureParams& reference) {
  const Eigen::Index J = reference.n_components();
  if (estimated.n_components() != J ||
      estimated.n_coeffs() != reference.n_coeffs())
    throw DimensionError("sse: component structure mismatch");

  SseValues out;
  for (Eigen::Index j = 0; j < J; ++j) {
    out.beta += (estimated.coeffs[j] - reference.coeffs[j]).squaredNorm();
    const double dv = estimated.variances[j] - reference.variances[j];
    out.sigma2 += dv * dv;
  }
  // pi_J is determined by the others; score the J-1 free proportions.
  for (Eigen::Index j = 0; j + 1 < J; ++j) {
    const double dp = estimated.weights[j] - reference.weights[j];
    out.pi += dp * dp;
  }
  return out;
}

Vector predict(const MixtureParams& params, const Matrix& X) {
  if (X.cols() != params.n_coeffs())
    throw DimensionError("predict: design has " + std::to_string(X.cols()) +
                         " columns, coefficients " +
                         std::to_string(params.n_coeffs()));
  Vector yhat = Vector::Zero(X.rows());
  for (Eigen::Index j = 0; j < params.n_components(); ++j)
    yhat += params.weights[j] * (X * params.coeffs[j]);
  return yhat;
}

Vector predict_with_rule(const MixtureParams& params, const Matrix& X,
                         PredictRule rule, RngStream& rng) {
  if (rule == PredictRule::MixtureMean) return predict(params, X);

  const Eigen::Index J = params.n_components();
  if (rule == PredictRule::MaxComponent) {
    Eigen::Index pick = 0;
    params.weights.maxCoeff(&pick);
    return X * params.coeffs[pick];
  }

  std::vector<double> weights(J);
  for (Eigen::Index j = 0; j < J; ++j) weights[j] = params.weights[j];
  Vector yhat(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const Eigen::Index j = rng.categorical(weights);
    yhat[i] = X.row(i).dot(params.coeffs[j]);
  }
  return yhat;
}

KfoldReport kfold_crossval(const Dataset& data, const FitConfig& config,
                           int k_folds, RngStream& rng, PredictRule rule) {
  data.validate();
  if (k_folds < 2) throw ConfigError("cross-validation: need k_folds >= 2");
  if (k_folds > data.n())
    throw ConfigError("cross-validation: k_folds = " + std::to_string(k_folds) +
                      " exceeds n = " + std::to_string(data.n()));

  const Eigen::Index n = data.n();
  RngStream shuffle_stream = rng.fork(0);
  RngStream draw_stream = rng.fork(1);

  // Seeded equal-size partition: Fisher-Yates shuffle, fold by position.
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (Eigen::Index i = n - 1; i > 0; --i) {
    const std::size_t j = shuffle_stream.uniform_below(i + 1);
    std::swap(order[i], order[j]);
  }
  std::vector<int> fold_of(n);
  for (Eigen::Index i = 0; i < n; ++i)
    fold_of[order[i]] = static_cast<int>(i % k_folds);

  Vector sq_err(n);
  KfoldReport report;
  for (int f = 0; f < k_folds; ++f) {
    Eigen::Index n_test = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (fold_of[i] == f) ++n_test;
    const Eigen::Index n_train = n - n_test;

    Dataset train;
    train.X.resize(n_train, data.p());
    train.y.resize(n_train);
    Matrix x_test(n_test, data.p());
    Vector y_test(n_test);
    std::vector<Eigen::Index> test_rows(n_test);
    Eigen::Index tr = 0;
    Eigen::Index te = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (fold_of[i] == f) {
        x_test.row(te) = data.X.row(i);
        y_test[te] = data.y[i];
        test_rows[te] = i;
        ++te;
      } else {
        train.X.row(tr) = data.X.row(i);
        train.y[tr] = data.y[i];
        ++tr;
      }
    }

    FitConfig fold_config = config;
    fold_config.seed = rng.fork(100 + static_cast<std::uint64_t>(f))
                           .creation_seed();
    const FitResult fold_fit = fit(train, fold_config);
    report.fold_stops.push_back(fold_fit.stop_reason);

    RngStream fold_draws = draw_stream.fork(static_cast<std::uint64_t>(f));
    const Vector yhat =
        predict_with_rule(fold_fit.params, x_test, rule, fold_draws);
    double fold_sse = 0.0;
    for (Eigen::Index t = 0; t < n_test; ++t) {
      const double e = y_test[t] - yhat[t];
      sq_err[test_rows[t]] = e * e;
      fold_sse += e * e;
    }
    report.fold_rmsep.push_back(
        std::sqrt(fold_sse / static_cast<double>(n_test)));
  }

  report.rmsep = std::sqrt(sq_err.sum() / static_cast<double>(n));
  return report;
}

double kfold_rmsep(const Dataset& data, const FitConfig& config, int k_folds,
                   RngStream& rng, PredictRule rule) {
  return kfold_crossval(data, config, k_folds, rng, rule).rmsep;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw DimensionError("percentile: empty sample");
  if (q < 0.0 || q > 100.0) throw ConfigError("percentile: q outside [0,100]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * q / 100.0;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const double frac = h - static_cast<double>(lo);
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

namespace {

MetricsSummary summarize(const std::vector<double>& values) {
  MetricsSummary s;
  s.median = percentile(values, 50.0);
  s.ci_low = percentile(values, 2.5);
  s.ci_high = percentile(values, 97.5);
  s.ci_length = s.ci_high - s.ci_low;
  return s;
}

ReplicateMetrics evaluate_one_config(const Dataset& data,
                                     const ScenarioSpec& spec,
                                     const FitConfig& base_config,
                                     RngStream fit_seed_stream,
                                     RngStream kfold_stream) {
  ReplicateMetrics metrics;
  try {
    FitConfig config = base_config;
    config.seed = fit_seed_stream.creation_seed();
    const FitResult result = fit(data, config);
    const MixtureParams aligned =
        align_components(result.params, spec.true_params);
    const SseValues sse = sse_metrics(aligned, spec.true_params);
    metrics.sse_beta = sse.beta;
    metrics.sse_pi = sse.pi;
    metrics.sse_sigma2 = sse.sigma2;
    metrics.fit_stop = result.stop_reason;
    metrics.rmsep = kfold_rmsep(data, config, spec.k_folds, kfold_stream,
                                spec.predict_rule);
    metrics.ok = true;
  } catch (const Error& err) {
    metrics.ok = false;
    metrics.error = err.what();
  }
  return metrics;
}

}  // namespace

ExperimentResult run_experiment(const ScenarioSpec& spec) {
  spec.validate();

  const std::size_t n_configs = spec.fit_configs.size();
  const int R = spec.n_replicates;

  // One row per replicate; filled by workers, reduced in replicate order.
  std::vector<std::vector<ReplicateMetrics>> all(
      R, std::vector<ReplicateMetrics>(n_configs));

  RngStream root(spec.seed);
  std::atomic<int> next_replicate{0};

  auto worker = [&]() {
    for (;;) {
      const int r = next_replicate.fetch_add(1);
      if (r >= R) return;

      RngStream rep = root.fork(static_cast<std::uint64_t>(r));
      RngStream design_stream = rep.fork(0);
      RngStream response_stream = rep.fork(1);

      Dataset data;
      const Matrix covariates = generate_collinear_design(
          spec.n, spec.n_covariates, spec.rho, design_stream);
      if (spec.intercept) {
        data.X.resize(spec.n, spec.n_covariates + 1);
        data.X.col(0) = Vector::Ones(spec.n);
        data.X.rightCols(spec.n_covariates) = covariates;
      } else {
        data.X = covariates;
      }
      auto [y, labels] =
          generate_mixture_responses(data.X, spec.true_params,
                                     response_stream);
      (void)labels;  // never passed to fitting
      data.y = std::move(y);

      for (std::size_t c = 0; c < n_configs; ++c) {
        all[r][c] = evaluate_one_config(
            data, spec, spec.fit_configs[c],
            rep.fork(10 + 3 * static_cast<std::uint64_t>(c)),
            rep.fork(11 + 3 * static_cast<std::uint64_t>(c)));
      }
    }
  };

  const int n_threads = std::min(spec.n_workers, R);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  ExperimentResult result;
  result.n_replicates = R;
  result.cells.resize(n_configs);
  for (std::size_t c = 0; c < n_configs; ++c) {
    CellSummary& cell = result.cells[c];
    cell.method = spec.fit_configs[c].method;
    cell.engine = spec.fit_configs[c].engine;

    std::vector<double> beta, pi, sigma2, rmsep;
    std::string first_error;
    for (int r = 0; r < R; ++r) {
      const ReplicateMetrics& m = all[r][c];
      if (!m.ok) {
        ++cell.n_failed;
        if (first_error.empty()) first_error = m.error;
        continue;
      }
      if (m.fit_stop == StopReason::DegeneratePartition) ++cell.n_degenerate;
      beta.push_back(m.sse_beta);
      pi.push_back(m.sse_pi);
      sigma2.push_back(m.sse_sigma2);
      rmsep.push_back(m.rmsep);
    }
    cell.n_used = static_cast<int>(beta.size());
    if (cell.n_failed * 10 > R)
      throw Error("experiment: " + to_string(cell.method) + "/" +
                  to_string(cell.engine) + " failed on " +
                  std::to_string(cell.n_failed) + " of " + std::to_string(R) +
                  " replicates (> 10%); first error: " + first_error);
    if (cell.n_used == 0)
      throw Error("experiment: no usable replicates for " +
                  to_string(cell.method) + "/" + to_string(cell.engine));
    cell.sse_beta = summarize(beta);
    cell.sse_pi = summarize(pi);
    cell.sse_sigma2 = summarize(sigma2);
    cell.rmsep = summarize(rmsep);
  }
  return result;
}

}  // namespace mixshrink
