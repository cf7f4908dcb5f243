#include "rglm/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

namespace rglm {

ModelKind parse_model_kind(const std::string& name) {
  if (name == "linear_highdim") return ModelKind::linear_highdim;
  if (name == "logistic_lowdim") return ModelKind::logistic_lowdim;
  if (name == "logistic_highdim") return ModelKind::logistic_highdim;
  fail(ErrorKind::invalid_parameter, "unknown model '" + name + "'");
}

const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::linear_highdim: return "linear_highdim";
    case ModelKind::logistic_lowdim: return "logistic_lowdim";
    case ModelKind::logistic_highdim: return "logistic_highdim";
  }
  return "?";
}

EstimatorKind parse_estimator_kind(const std::string& name) {
  if (name == "mle") return EstimatorKind::mle;
  if (name == "weighted_mle") return EstimatorKind::weighted_mle;
  if (name == "l1") return EstimatorKind::l1;
  if (name == "weighted_l1") return EstimatorKind::weighted_l1;
  fail(ErrorKind::invalid_parameter, "unknown estimator '" + name + "'");
}

const char* to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::mle: return "mle";
    case EstimatorKind::weighted_mle: return "weighted_mle";
    case EstimatorKind::l1: return "l1";
    case EstimatorKind::weighted_l1: return "weighted_l1";
  }
  return "?";
}

TauScale MethodSpec::resolved_tau_scale() const {
  if (tau_scale) return *tau_scale;
  return shrink.feature_mode == FeatureMode::elementwise_clip ? TauScale::log_d : TauScale::log_n;
}

bool MethodSpec::needs_cv() const {
  const bool t1 = shrink.feature_mode != FeatureMode::none && tau1_multipliers.size() > 1;
  const bool t2 = shrink.response_mode != ResponseMode::none && tau2_multipliers.size() > 1;
  const bool lam = uses_l1(estimator) && lambda_multipliers.size() > 1;
  return t1 || t2 || lam;
}

void ExperimentConfig::validate() const {
  if (n_grid.empty()) fail(ErrorKind::invalid_parameter, "n_grid must not be empty");
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    if (n_grid[i] < 2) fail(ErrorKind::invalid_parameter, "n_grid entries must be >= 2");
    if (i > 0 && n_grid[i] <= n_grid[i - 1]) fail(ErrorKind::invalid_parameter, "n_grid must be strictly ascending");
  }
  if (d < 1) fail(ErrorKind::invalid_parameter, "d must be positive");
  if (trials < 1) fail(ErrorKind::invalid_parameter, "trials must be >= 1");
  if (cv_folds < 2) fail(ErrorKind::invalid_parameter, "cv folds must be >= 2");
  if (!(beta_scale > 0)) fail(ErrorKind::invalid_parameter, "beta_scale must be positive");
  if (feature_dists.empty()) fail(ErrorKind::invalid_parameter, "feature_dists must not be empty");
  for (const auto& dist : feature_dists) dist.validate();
  corruption.validate();
  solver.validate();
  (void)beta_star();
  const bool linear = model == ModelKind::linear_highdim;
  if (linear && corruption.kind == CorruptionKind::label_flip)
    fail(ErrorKind::invalid_parameter, "label_flip corruption needs a logistic model");
  if (!linear && corruption.kind == CorruptionKind::additive_noise)
    fail(ErrorKind::invalid_parameter, "additive noise corruption needs the linear model");
  if (methods.empty()) fail(ErrorKind::invalid_parameter, "at least one method is required");
  for (const auto& m : methods) {
    if (m.id.empty()) fail(ErrorKind::invalid_parameter, "method id must not be empty");
    if (linear && uses_weights(m.estimator))
      fail(ErrorKind::invalid_parameter, "method " + m.id + ": weighted estimators need a logistic model");
    auto check_grid = [&](const std::vector<double>& grid, const char* what) {
      if (grid.empty()) fail(ErrorKind::invalid_parameter, "method " + m.id + ": empty " + what + " grid");
      for (double v : grid)
        if (!(v > 0)) fail(ErrorKind::invalid_parameter, "method " + m.id + ": " + what + " multipliers must be > 0");
    };
    check_grid(m.tau1_multipliers, "tau1");
    check_grid(m.tau2_multipliers, "tau2");
    check_grid(m.lambda_multipliers, "lambda");
    for (double v : m.lambda_multipliers)
      if (!std::isfinite(v)) fail(ErrorKind::invalid_parameter, "method " + m.id + ": lambda multipliers must be finite");
    if (m.resolved_tau_scale() == TauScale::log_d && d < 2)
      fail(ErrorKind::invalid_parameter, "method " + m.id + ": log_d threshold schedule needs d >= 2");
  }
  for (std::size_t i = 0; i < methods.size(); ++i)
    for (std::size_t j = i + 1; j < methods.size(); ++j)
      if (methods[i].id == methods[j].id) fail(ErrorKind::invalid_parameter, "duplicate method id " + methods[i].id);
}

GlmFamily ExperimentConfig::family() const {
  return model == ModelKind::linear_highdim ? GlmFamily::linear() : GlmFamily::logistic();
}

Vector<double> ExperimentConfig::beta_star() const { return beta_scale * make_beta(d, beta, beta_custom); }

const ErrorRow* ErrorTable::find(const std::string& method, const std::string& dist, int n) const {
  for (const auto& row : rows)
    if (row.method == method && row.feature_dist == dist && row.n == n) return &row;
  return nullptr;
}

double l2_error(const Vector<double>& beta_hat, const Vector<double>& beta_star) {
  if (beta_hat.size() != beta_star.size()) fail(ErrorKind::shape, "l2_error: dimension mismatch");
  return (beta_hat - beta_star).norm();
}

ShrinkSpec resolve_shrink(const ShrinkSpec& modes, double tau1, double tau2) {
  ShrinkSpec spec = modes;
  spec.tau1 = tau1;
  spec.tau2 = tau2;
  if (!std::isfinite(tau1)) spec.feature_mode = FeatureMode::none;
  if (!std::isfinite(tau2)) spec.response_mode = ResponseMode::none;
  return spec;
}

double heldout_loss(const GlmFamily& family, const Dataset& test, const Vector<double>& beta,
                    std::optional<double> weighted_p) {
  if (family.kind == FamilyKind::linear) return (test.z - test.X * beta).squaredNorm() / static_cast<double>(test.n());
  if (weighted_p) return weighted_nll(test, beta, *weighted_p);
  return nll(family, test, beta);
}

FitResult fit_estimator(const CvProblem& problem, const Dataset& shrunk, double lambda,
                        const Vector<double>* warm_start) {
  const std::optional<double> p =
      uses_weights(problem.estimator) ? std::optional<double>(problem.weighted_p) : std::nullopt;
  if (uses_l1(problem.estimator)) return fit_l1(problem.family, shrunk, lambda, problem.solver, p, warm_start);
  return fit_mle(problem.family, shrunk, problem.solver, p);
}

namespace {

std::vector<Eigen::Index> seeded_permutation(Eigen::Index n, std::uint64_t seed) {
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  Rng rng(seed);
  // Fisher-Yates with an explicit modulo draw so the order does not depend on
  // the standard library's distribution implementation.
  for (std::size_t i = perm.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

bool better(const CvPoint& a, const CvPoint& b) {
  if (a.mean_loss != b.mean_loss) return a.mean_loss < b.mean_loss;
  if (a.choice.tau1 != b.choice.tau1) return a.choice.tau1 > b.choice.tau1;
  if (a.choice.tau2 != b.choice.tau2) return a.choice.tau2 > b.choice.tau2;
  return a.choice.lambda > b.choice.lambda;
}

}  // namespace

CvResult cross_validate(const Dataset& data, const CvProblem& problem, const std::vector<double>& tau1_grid,
                        const std::vector<double>& tau2_grid, const std::vector<double>& lambda_grid, int folds,
                        std::uint64_t seed) {
  if (folds < 2) fail(ErrorKind::invalid_parameter, "cross-validation needs at least 2 folds");
  if (data.n() < folds)
    fail(ErrorKind::invalid_parameter, "cross-validation needs n >= folds (n = " + std::to_string(data.n()) + ")");
  if (tau1_grid.empty() || tau2_grid.empty() || lambda_grid.empty())
    fail(ErrorKind::invalid_parameter, "cross-validation grids must not be empty");
  for (double t : tau1_grid)
    if (!(t > 0)) fail(ErrorKind::invalid_parameter, "tau grid entries must be positive");
  for (double t : tau2_grid)
    if (!(t > 0)) fail(ErrorKind::invalid_parameter, "tau grid entries must be positive");
  if (uses_l1(problem.estimator))
    for (double l : lambda_grid)
      if (!(l > 0) || !std::isfinite(l)) fail(ErrorKind::invalid_parameter, "lambda grid entries must be positive");

  const auto perm = seeded_permutation(data.n(), seed);
  const Eigen::Index n = data.n();
  std::vector<std::vector<Eigen::Index>> fold_rows(static_cast<std::size_t>(folds));
  for (int k = 0; k < folds; ++k) {
    const Eigen::Index lo = n * k / folds, hi = n * (k + 1) / folds;
    fold_rows[static_cast<std::size_t>(k)].assign(perm.begin() + lo, perm.begin() + hi);
  }

  // Lambda path from the largest value down, warm-started within a fold.
  std::vector<std::size_t> lambda_order(lambda_grid.size());
  std::iota(lambda_order.begin(), lambda_order.end(), std::size_t{0});
  std::stable_sort(lambda_order.begin(), lambda_order.end(),
                   [&](std::size_t a, std::size_t b) { return lambda_grid[a] > lambda_grid[b]; });

  CvResult result;
  for (double tau1 : tau1_grid) {
    for (double tau2 : tau2_grid) {
      const Dataset shrunk = apply_shrink(data, resolve_shrink(problem.shrink, tau1, tau2));
      std::vector<double> total(lambda_grid.size(), 0.0);
      for (int k = 0; k < folds; ++k) {
        std::vector<Eigen::Index> train_rows;
        train_rows.reserve(static_cast<std::size_t>(n));
        for (int other = 0; other < folds; ++other)
          if (other != k)
            train_rows.insert(train_rows.end(), fold_rows[static_cast<std::size_t>(other)].begin(),
                              fold_rows[static_cast<std::size_t>(other)].end());
        const Dataset train = shrunk.subset(train_rows);
        const Dataset test = data.subset(fold_rows[static_cast<std::size_t>(k)]);
        std::optional<Vector<double>> warm;
        for (std::size_t li : lambda_order) {
          double loss = kInf;
          try {
            const FitResult fit = fit_estimator(problem, train, lambda_grid[li], warm ? &*warm : nullptr);
            loss = heldout_loss(problem.family, test, fit.beta_hat,
                                uses_weights(problem.estimator) ? std::optional<double>(problem.weighted_p)
                                                                : std::nullopt);
            if (uses_l1(problem.estimator)) warm = fit.beta_hat;
          } catch (const DivergedError&) {
            warm.reset();
          }
          total[li] += std::isfinite(loss) ? loss : kInf;
        }
      }
      for (std::size_t li = 0; li < lambda_grid.size(); ++li)
        result.grid.push_back({{tau1, tau2, lambda_grid[li]}, total[li] / folds});
    }
  }
  const CvPoint* best = &result.grid.front();
  for (const auto& point : result.grid)
    if (better(point, *best)) best = &point;
  result.selected = best->choice;
  return result;
}

namespace {

std::uint64_t cell_seed(const ExperimentConfig& config, int n, std::size_t dist_index, int trial_index) {
  std::uint64_t s = derive_seed(config.base_seed, "feature_dist", dist_index);
  s = derive_seed(s, "n", static_cast<std::uint64_t>(n));
  return derive_seed(s, "trial", static_cast<std::uint64_t>(trial_index));
}

std::vector<double> resolve_taus(const std::vector<double>& multipliers, bool active, double n, TauScale scale,
                                 double d) {
  if (!active) return {kInf};
  std::vector<double> out;
  for (double m : multipliers) out.push_back(std::isfinite(m) ? default_tau(n, scale, m, d) : kInf);
  return out;
}

}  // namespace

Dataset generate_trial_data(const ExperimentConfig& config, int n, std::size_t dist_index, int trial_index) {
  if (dist_index >= config.feature_dists.size()) fail(ErrorKind::invalid_parameter, "feature dist index out of range");
  const std::uint64_t cell = cell_seed(config, n, dist_index, trial_index);
  const Vector<double> beta_star = config.beta_star();
  const Matrix<double> X = gen_features(n, config.d, config.feature_dists[dist_index], derive_seed(cell, "features"));
  if (config.model == ModelKind::linear_highdim) return gen_linear(X, beta_star, config.corruption, derive_seed(cell, "noise"));
  Dataset data = gen_logistic(X, beta_star, derive_seed(cell, "labels"));
  if (config.corruption.kind == CorruptionKind::label_flip)
    data = flip_labels(data, config.corruption.flip_p, derive_seed(cell, "flips"));
  return data;
}

TrialResult run_method(const ExperimentConfig& config, const Dataset& data, std::size_t method_index,
                       std::uint64_t cv_seed) {
  const MethodSpec& method = config.methods.at(method_index);
  CvProblem problem;
  problem.family = config.family();
  problem.estimator = method.estimator;
  problem.weighted_p = config.corruption.kind == CorruptionKind::label_flip ? config.corruption.flip_p : 0.0;
  problem.shrink = method.shrink;
  problem.solver = config.solver;

  const double n = static_cast<double>(data.n());
  const double d = static_cast<double>(data.d());
  const TauScale scale = method.resolved_tau_scale();
  const auto tau1s = resolve_taus(method.tau1_multipliers, method.shrink.feature_mode != FeatureMode::none, n, scale, d);
  const auto tau2s = resolve_taus(method.tau2_multipliers, method.shrink.response_mode != ResponseMode::none, n, scale, d);
  std::vector<double> lambdas{0.0};
  if (uses_l1(method.estimator)) {
    lambdas.clear();
    for (double m : method.lambda_multipliers) lambdas.push_back(default_lambda(n, d, m));
  }

  TrialResult result;
  try {
    if (tau1s.size() * tau2s.size() * lambdas.size() > 1) {
      result.choice = cross_validate(data, problem, tau1s, tau2s, lambdas, config.cv_folds, cv_seed).selected;
    } else {
      result.choice = {tau1s.front(), tau2s.front(), lambdas.front()};
    }
    const Dataset shrunk = apply_shrink(data, resolve_shrink(method.shrink, result.choice.tau1, result.choice.tau2));
    const FitResult fit = fit_estimator(problem, shrunk, result.choice.lambda);
    result.converged = fit.converged;
    result.l2_error = l2_error(fit.beta_hat, config.beta_star());
  } catch (const DivergedError&) {
    result.l2_error.reset();
  }
  return result;
}

TrialResult run_trial(const ExperimentConfig& config, int n, std::size_t dist_index, std::size_t method_index,
                      int trial_index) {
  const Dataset data = generate_trial_data(config, n, dist_index, trial_index);
  return run_method(config, data, method_index, derive_seed(cell_seed(config, n, dist_index, trial_index), "cv"));
}

ExperimentSummary run_experiment(const ExperimentConfig& config, int workers) {
  config.validate();
  struct Task {
    std::size_t dist;
    std::size_t n_index;
    int trial;
  };
  std::vector<Task> tasks;
  for (std::size_t di = 0; di < config.feature_dists.size(); ++di)
    for (std::size_t ni = 0; ni < config.n_grid.size(); ++ni)
      for (int t = 0; t < config.trials; ++t) tasks.push_back({di, ni, t});

  const std::size_t num_methods = config.methods.size();
  std::vector<std::vector<std::optional<double>>> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        const Task& task = tasks[i];
        const int n = config.n_grid[task.n_index];
        const Dataset data = generate_trial_data(config, n, task.dist, task.trial);
        const std::uint64_t cv_seed = derive_seed(cell_seed(config, n, task.dist, task.trial), "cv");
        std::vector<std::optional<double>> row(num_methods);
        for (std::size_t m = 0; m < num_methods; ++m) row[m] = run_method(config, data, m, cv_seed).l2_error;
        errors[i] = std::move(row);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next = tasks.size();
      }
    }
  };

  const int num_workers = std::max(1, workers);
  if (num_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < num_workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  ExperimentSummary summary;
  std::size_t base = 0;
  for (std::size_t di = 0; di < config.feature_dists.size(); ++di) {
    for (std::size_t ni = 0; ni < config.n_grid.size(); ++ni) {
      for (std::size_t m = 0; m < num_methods; ++m) {
        ErrorRow row;
        row.method = config.methods[m].id;
        row.feature_dist = config.feature_dists[di].to_string();
        row.n = config.n_grid[ni];
        double sum = 0;
        std::vector<double> ok;
        for (int t = 0; t < config.trials; ++t) {
          const auto& e = errors[base + static_cast<std::size_t>(t)][m];
          if (e) {
            ok.push_back(*e);
            sum += *e;
          } else {
            ++row.failures;
          }
        }
        row.trials = static_cast<int>(ok.size());
        if (ok.empty()) {
          row.mean_l2_error = std::numeric_limits<double>::quiet_NaN();
          row.stderr_ = std::numeric_limits<double>::quiet_NaN();
        } else {
          row.mean_l2_error = sum / static_cast<double>(ok.size());
          double ss = 0;
          for (double e : ok) ss += (e - row.mean_l2_error) * (e - row.mean_l2_error);
          row.stderr_ = ok.size() > 1 ? std::sqrt(ss / static_cast<double>(ok.size() - 1)) /
                                            std::sqrt(static_cast<double>(ok.size()))
                                      : 0.0;
        }
        summary.total_trials += config.trials;
        summary.failures += row.failures;
        summary.table.rows.push_back(std::move(row));
      }
      base += static_cast<std::size_t>(config.trials);
    }
  }
  return summary;
}

LrscResult lrsc_probe(const GlmFamily& family, const Dataset& data, const Vector<double>& beta_star, double radius,
                      int num_directions, std::uint64_t seed, const std::optional<std::vector<Eigen::Index>>& support,
                      std::optional<double> weighted_p) {
  if (!(radius > 0)) fail(ErrorKind::invalid_parameter, "radius must be positive");
  if (num_directions < 1) fail(ErrorKind::invalid_parameter, "need at least one direction");
  if (beta_star.size() != data.d()) fail(ErrorKind::shape, "beta* dimension does not match data");
  const Eigen::Index d = data.d();
  std::vector<bool> on_support(static_cast<std::size_t>(d), false);
  if (support) {
    if (support->empty()) fail(ErrorKind::invalid_parameter, "support set must not be empty");
    for (Eigen::Index j : *support) {
      if (j < 0 || j >= d) fail(ErrorKind::invalid_parameter, "support index out of range");
      on_support[static_cast<std::size_t>(j)] = true;
    }
  }

  Rng rng(seed);
  std::normal_distribution<double> normal;
  LrscResult result;
  result.min_ratio = kInf;
  for (int k = 0; k < num_directions; ++k) {
    Vector<double> v(d);
    for (Eigen::Index j = 0; j < d; ++j) v[j] = normal(rng);
    if (support) {
      double on = 0, off = 0;
      for (Eigen::Index j = 0; j < d; ++j) (on_support[static_cast<std::size_t>(j)] ? on : off) += std::abs(v[j]);
      if (off > 3 * on) {
        const double scale = 3 * on / off;
        for (Eigen::Index j = 0; j < d; ++j)
          if (!on_support[static_cast<std::size_t>(j)]) v[j] *= scale;
      }
    }
    const double len = v.norm();
    if (len == 0) continue;
    const Vector<double> delta = v * (radius / len);
    const Vector<double> beta = beta_star + delta;
    const double ratio = taylor_remainder(family, data, beta, beta_star, weighted_p) / delta.squaredNorm();
    if (ratio < result.min_ratio) {
      result.min_ratio = ratio;
      result.min_direction = delta;
    }
  }
  return result;
}

double classification_error(const Matrix<double>& X, const Vector<double>& labels, const Vector<double>& beta) {
  if (X.rows() != labels.size() || X.cols() != beta.size()) fail(ErrorKind::shape, "classification_error: shape mismatch");
  const Vector<double> eta = X * beta;
  Eigen::Index wrong = 0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) wrong += ((eta[i] > 0 ? 1.0 : 0.0) != labels[i]);
  return static_cast<double>(wrong) / static_cast<double>(eta.size());
}

}  // namespace rglm
