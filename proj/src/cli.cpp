#include "rglm/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "rglm/bench.hpp"
#include "rglm/config.hpp"
#include "rglm/datagen.hpp"
#include "rglm/io.hpp"
#include "rglm/optimize.hpp"
#include "rglm/shrink.hpp"

namespace rglm {

namespace {

[[noreturn]] void usage(const std::string& msg) { fail(ErrorKind::usage, msg); }

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(text);
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  return out;
}

double parse_number(const std::string& text, const std::string& what) {
  try {
    return parse_double(text);
  } catch (const Error&) {
    usage(what + ": not a number '" + text + "'");
  }
}

// A threshold or penalty given as a number, `auto`, or `auto*M`.
struct Level {
  std::optional<double> value;
  double multiplier = 1.0;

  double resolve(double schedule_at_one) const { return value ? *value : multiplier * schedule_at_one; }
};

Level parse_level(const std::string& text, const std::string& what) {
  Level level;
  if (text == "auto") return level;
  if (text.rfind("auto*", 0) == 0) {
    level.multiplier = parse_number(text.substr(5), what);
    if (!(level.multiplier > 0)) usage(what + ": auto multiplier must be positive");
    return level;
  }
  level.value = parse_number(text, what);
  return level;
}

std::vector<Level> parse_grid(const std::string& text, const std::string& what) {
  std::vector<Level> grid;
  for (const auto& cell : split(text, ',')) grid.push_back(parse_level(cell, what));
  if (grid.empty()) usage(what + " must not be empty");
  return grid;
}

GlmFamily parse_family(const std::string& name) {
  if (name == "linear") return GlmFamily::linear();
  if (name == "logistic") return GlmFamily::logistic();
  usage("--family must be linear or logistic, got '" + name + "'");
}

struct Estimator {
  EstimatorKind kind = EstimatorKind::mle;
  double p = 0.0;
  std::optional<Level> lambda;  // l1 kinds only
};

// mle | weighted:P | l1[:LAMBDA] | weighted_l1:P[:LAMBDA]
Estimator parse_estimator(const std::string& text, bool need_lambda) {
  const auto parts = split(text, ':');
  Estimator e;
  if (parts.empty()) usage("--estimator must not be empty");
  auto lambda_at = [&](std::size_t i) {
    if (parts.size() > i) e.lambda = parse_level(parts[i], "--estimator lambda");
    else if (need_lambda) usage("--estimator " + text + " needs a penalty, e.g. l1:auto");
    if (parts.size() > i + 1) usage("--estimator: too many fields in '" + text + "'");
  };
  if (parts[0] == "mle" && parts.size() == 1) {
    e.kind = EstimatorKind::mle;
  } else if (parts[0] == "weighted" && parts.size() == 2) {
    e.kind = EstimatorKind::weighted_mle;
    e.p = parse_number(parts[1], "--estimator weighted");
  } else if (parts[0] == "l1") {
    e.kind = EstimatorKind::l1;
    lambda_at(1);
  } else if (parts[0] == "weighted_l1" && parts.size() >= 2) {
    e.kind = EstimatorKind::weighted_l1;
    e.p = parse_number(parts[1], "--estimator weighted_l1");
    lambda_at(2);
  } else {
    usage("--estimator must be mle, weighted:P, l1:LAMBDA or weighted_l1:P:LAMBDA, got '" + text + "'");
  }
  if (uses_weights(e.kind) && !(e.p >= 0 && e.p < 0.5)) usage("--estimator: flip probability must lie in [0, 0.5)");
  return e;
}

// none | l4[:TAU] | l2[:TAU] | clip[:TAU]
std::pair<FeatureMode, std::optional<Level>> parse_feature_shrink(const std::string& text, bool need_tau) {
  const auto parts = split(text, ':');
  if (parts.empty() || parts.size() > 2) usage("--shrink: malformed '" + text + "'");
  FeatureMode mode;
  if (parts[0] == "none") mode = FeatureMode::none;
  else if (parts[0] == "l4") mode = FeatureMode::norm_shrink_l4;
  else if (parts[0] == "l2") mode = FeatureMode::norm_shrink_l2;
  else if (parts[0] == "clip") mode = FeatureMode::elementwise_clip;
  else usage("--shrink must be none, l4:TAU, l2:TAU or clip:TAU, got '" + text + "'");
  if (mode == FeatureMode::none) {
    if (parts.size() != 1) usage("--shrink none takes no threshold");
    return {mode, std::nullopt};
  }
  if (parts.size() == 1) {
    if (need_tau) usage("--shrink " + text + " needs a threshold, e.g. " + parts[0] + ":auto");
    return {mode, std::nullopt};
  }
  return {mode, parse_level(parts[1], "--shrink")};
}

struct ResponseClip {
  ResponseMode mode = ResponseMode::none;
  bool preserve_sign = true;
  std::optional<Level> tau;
};

// none | TAU[:nosign]  (cv also takes `clip[:nosign]` with the grid elsewhere)
ResponseClip parse_response_clip(const std::string& text, bool grid_form) {
  ResponseClip rc;
  if (text == "none") return rc;
  auto parts = split(text, ':');
  if (parts.size() == 2 && parts[1] == "nosign") {
    rc.preserve_sign = false;
    parts.pop_back();
  }
  if (parts.size() != 1) usage("--clip-response: malformed '" + text + "'");
  rc.mode = ResponseMode::clip;
  if (grid_form) {
    if (parts[0] != "clip") usage("--clip-response must be none or clip[:nosign], got '" + text + "'");
  } else {
    rc.tau = parse_level(parts[0], "--clip-response");
  }
  return rc;
}

Dataset load_for(const GlmFamily& family, const std::string& path) {
  Dataset data = load_dataset(path);
  if (family.kind == FamilyKind::logistic && !data.has_binary_response())
    fail(ErrorKind::invalid_input, path + ": logistic family needs responses in {0, 1}");
  return data;
}

TauScale feature_scale(FeatureMode mode) {
  return mode == FeatureMode::elementwise_clip ? TauScale::log_d : TauScale::log_n;
}

double schedule(TauScale scale, const Dataset& data) {
  return default_tau(static_cast<double>(data.n()), scale, 1.0, static_cast<double>(data.d()));
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::usage:
    case ErrorKind::invalid_parameter: return exit_usage;
    case ErrorKind::diverged: return exit_not_converged;
    case ErrorKind::io:
    case ErrorKind::invalid_input:
    case ErrorKind::shape: return exit_data;
  }
  return exit_data;
}

class Printer {
 public:
  explicit Printer(std::ostream& out) : out_(out) {}
  void section(const char* name) { out_ << "# " << name << '\n'; }
  void kv(const std::string& key, const std::string& value) { out_ << key << " = " << value << '\n'; }
  void num(const std::string& key, double value) { kv(key, format_short(value)); }
  void integer(const std::string& key, long long value) { kv(key, std::to_string(value)); }
  std::ostream& raw() { return out_; }

 private:
  std::ostream& out_;
};

void print_shrink(Printer& pr, const ShrinkSpec& s) {
  pr.kv("feature_mode", to_string(s.feature_mode));
  pr.num("tau1", s.tau1);
  pr.kv("response_mode", to_string(s.response_mode));
  pr.num("tau2", s.tau2);
  pr.kv("preserve_sign", s.preserve_sign ? "true" : "false");
}

void record_shrink(KeyValueRecord& rec, const ShrinkSpec& s) {
  rec.add("feature_mode", to_string(s.feature_mode));
  rec.add("tau1", s.tau1);
  rec.add("response_mode", to_string(s.response_mode));
  rec.add("tau2", s.tau2);
  rec.add("preserve_sign", s.preserve_sign ? "true" : "false");
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string model, beta = "five_ones", feature_dist = "gaussian", noise_dist, out;
  int n = 0, d = 0;
  double noise_sd = 0, flip_p = 0, beta_scale = 1;
  std::uint64_t seed = 1;
  CLI::Option *noise_dist_opt = nullptr, *noise_sd_opt = nullptr, *flip_opt = nullptr;
};

int cmd_simulate(const SimulateArgs& a, Printer& pr) {
  const bool linear = a.model == "linear";
  if (!linear && a.model != "logistic") usage("--model must be linear or logistic");
  if (!linear && (a.noise_dist_opt->count() || a.noise_sd_opt->count()))
    usage("--noise-dist/--noise-sd apply to the linear model only");
  if (linear && a.flip_opt->count()) usage("--flip-p applies to the logistic model only");
  if (a.n < 1 || a.d < 1) usage("--n and --d must be positive");
  if (!(a.flip_p >= 0 && a.flip_p < 0.5)) usage("--flip-p must lie in [0, 0.5)");
  if (!(a.noise_sd >= 0)) usage("--noise-sd must be nonnegative");
  if (!(a.beta_scale > 0)) usage("--beta-scale must be positive");

  const FeatureDist fdist = FeatureDist::parse(a.feature_dist);
  const Vector<double> beta = a.beta_scale * make_beta(a.d, parse_beta_pattern(a.beta));
  CorruptionSpec noise;
  if (linear && a.noise_sd > 0) {
    noise.kind = CorruptionKind::additive_noise;
    noise.noise_dist = FeatureDist::parse(a.noise_dist.empty() ? "gaussian" : a.noise_dist);
    noise.target_sd = a.noise_sd;
    noise.validate();
  }
  const auto feature_seed = derive_seed(a.seed, "features");
  const auto response_seed = derive_seed(a.seed, linear ? "noise" : "labels");
  const auto flip_seed = derive_seed(a.seed, "flips");

  pr.section("resolved configuration");
  pr.kv("command", "simulate");
  pr.kv("model", a.model);
  pr.integer("n", a.n);
  pr.integer("d", a.d);
  pr.kv("beta", a.beta);
  pr.num("beta_scale", a.beta_scale);
  pr.kv("feature_dist", fdist.to_string());
  if (linear) {
    pr.kv("noise_dist", noise.noise_dist.to_string());
    pr.num("noise_sd", a.noise_sd);
  } else {
    pr.num("flip_p", a.flip_p);
  }
  pr.kv("seed", std::to_string(a.seed));
  pr.kv("seed.features", std::to_string(feature_seed));
  pr.kv("seed.responses", std::to_string(response_seed));
  if (!linear) pr.kv("seed.flips", std::to_string(flip_seed));
  pr.kv("out", a.out);

  const Matrix<double> X = gen_features(a.n, a.d, fdist, feature_seed);
  Dataset data = linear ? gen_linear(X, beta, noise, response_seed) : gen_logistic(X, beta, response_seed);
  if (!linear) data = flip_labels(data, a.flip_p, flip_seed);
  save_dataset(a.out, data);

  pr.section("result");
  pr.integer("n", data.n());
  pr.integer("d", data.d());
  if (linear) {
    pr.kv("corruption", noise.kind == CorruptionKind::none ? "none" : "additive_noise");
    pr.num("empirical_noise_sd",
           data.n() > 1 ? std::sqrt((data.z - *data.y_clean).array().square().sum() / static_cast<double>(data.n() - 1))
                        : 0.0);
  } else {
    const auto flipped = std::count(data.flip_mask->begin(), data.flip_mask->end(), true);
    pr.kv("corruption", "label_flip");
    pr.integer("flipped", flipped);
    pr.num("flipped_fraction", static_cast<double>(flipped) / static_cast<double>(data.n()));
  }
  return exit_ok;
}

// --------------------------------------------------------------------- fit

struct FitArgs {
  std::string family, data, shrink = "none", clip_response = "none", estimator = "mle", out;
  double tol = 1e-8;
  int max_iters = 10000;
};

ShrinkSpec resolve_fit_shrink(const std::string& shrink, const std::string& clip, const Dataset& data) {
  const auto [mode, tau1] = parse_feature_shrink(shrink, true);
  const ResponseClip rc = parse_response_clip(clip, false);
  ShrinkSpec spec;
  spec.feature_mode = mode;
  if (tau1) spec.tau1 = tau1->resolve(schedule(feature_scale(mode), data));
  spec.response_mode = rc.mode;
  spec.preserve_sign = rc.preserve_sign;
  if (rc.tau) spec.tau2 = rc.tau->resolve(schedule(feature_scale(mode), data));
  spec.validate();
  return spec;
}

int cmd_fit(const FitArgs& a, Printer& pr) {
  const GlmFamily family = parse_family(a.family);
  const Estimator est = parse_estimator(a.estimator, true);
  if (uses_weights(est.kind) && family.kind != FamilyKind::logistic)
    usage("weighted estimators need --family logistic");
  SolverOpts opts;
  opts.grad_tol = a.tol;
  opts.max_iters = a.max_iters;
  opts.validate();

  parse_feature_shrink(a.shrink, true);
  parse_response_clip(a.clip_response, false);
  const Dataset raw = load_for(family, a.data);
  const ShrinkSpec spec = resolve_fit_shrink(a.shrink, a.clip_response, raw);
  const double lambda =
      est.lambda ? est.lambda->resolve(default_lambda(static_cast<double>(raw.n()), static_cast<double>(raw.d())))
                 : 0.0;
  if (uses_l1(est.kind) && !(lambda >= 0 && std::isfinite(lambda))) usage("lambda must be finite and >= 0");

  pr.section("resolved configuration");
  pr.kv("command", "fit");
  pr.kv("family", to_string(family.kind));
  pr.kv("data", a.data);
  pr.integer("n", raw.n());
  pr.integer("d", raw.d());
  print_shrink(pr, spec);
  pr.kv("estimator", to_string(est.kind));
  if (uses_weights(est.kind)) pr.num("weighted_p", est.p);
  if (uses_l1(est.kind)) pr.num("lambda", lambda);
  pr.num("tol", opts.grad_tol);
  pr.integer("max_iters", opts.max_iters);
  if (!a.out.empty()) pr.kv("out", a.out);

  const Dataset shrunk = apply_shrink(raw, spec);
  CvProblem problem{family, est.kind, est.p, spec, opts};
  FitResult fit;
  std::string failure;
  try {
    fit = fit_estimator(problem, shrunk, lambda);
  } catch (const DivergedError& e) {
    fit.beta_hat = e.last_iterate();
    fit.converged = false;
    fit.final_residual = kInf;
    fit.objective = kInf;
    failure = e.what();
  }

  if (!a.out.empty()) {
    KeyValueRecord rec;
    rec.add("family", to_string(family.kind));
    rec.add("data", a.data);
    rec.add("n", std::to_string(raw.n()));
    rec.add("d", std::to_string(raw.d()));
    record_shrink(rec, spec);
    rec.add("estimator", to_string(est.kind));
    rec.add("weighted_p", uses_weights(est.kind) ? est.p : 0.0);
    rec.add("lambda", lambda);
    rec.add("tol", opts.grad_tol);
    rec.add("max_iters", std::to_string(opts.max_iters));
    rec.add("converged", fit.converged ? "true" : "false");
    rec.add("iterations", std::to_string(fit.iterations));
    rec.add("final_residual", fit.final_residual);
    rec.add("objective", fit.objective);
    rec.beta = fit.beta_hat;
    save_record(a.out, rec);
  }

  pr.section("result");
  pr.num("beta_hat_l2_norm", fit.beta_hat.norm());
  pr.integer("iterations", fit.iterations);
  pr.num("residual", fit.final_residual);
  pr.num("objective", fit.objective);
  pr.kv("converged", fit.converged ? "true" : "false");
  if (!failure.empty()) pr.kv("failure", failure);
  return fit.converged ? exit_ok : exit_not_converged;
}

// ---------------------------------------------------------------------- cv

struct CvArgs {
  std::string family, data, estimator = "mle", shrink = "none", clip_response = "none", tau_grid = "inf",
                          tau2_grid = "inf", lambda_grid = "auto", out;
  int folds = 5, max_iters = 10000;
  double tol = 1e-8;
  std::uint64_t seed = 1;
};

int cmd_cv(const CvArgs& a, Printer& pr) {
  const GlmFamily family = parse_family(a.family);
  const Estimator est = parse_estimator(a.estimator, false);
  if (est.lambda) usage("cv takes penalties from --lambda-grid; give --estimator without a lambda");
  if (uses_weights(est.kind) && family.kind != FamilyKind::logistic)
    usage("weighted estimators need --family logistic");
  const auto [mode, fixed_tau] = parse_feature_shrink(a.shrink, false);
  if (fixed_tau) usage("cv takes thresholds from --tau-grid; give --shrink without a threshold");
  const ResponseClip rc = parse_response_clip(a.clip_response, true);
  if (a.folds < 2) usage("--folds must be >= 2");
  SolverOpts opts;
  opts.grad_tol = a.tol;
  opts.max_iters = a.max_iters;
  opts.validate();

  const auto tau_grid = parse_grid(a.tau_grid, "--tau-grid");
  const auto tau2_grid = parse_grid(a.tau2_grid, "--tau2-grid");
  const auto lambda_grid = parse_grid(a.lambda_grid, "--lambda-grid");
  const Dataset raw = load_for(family, a.data);
  if (raw.n() < a.folds) usage("--folds " + std::to_string(a.folds) + " exceeds n = " + std::to_string(raw.n()));
  const double s = schedule(feature_scale(mode), raw);
  auto resolve = [](const std::vector<Level>& grid, double at_one) {
    std::vector<double> out;
    for (const auto& g : grid) out.push_back(g.resolve(at_one));
    return out;
  };
  std::vector<double> tau1 = mode == FeatureMode::none ? std::vector<double>{kInf} : resolve(tau_grid, s);
  std::vector<double> tau2 =
      rc.mode == ResponseMode::none ? std::vector<double>{kInf} : resolve(tau2_grid, s);
  std::vector<double> lambda = uses_l1(est.kind)
                                   ? resolve(lambda_grid,
                                             default_lambda(static_cast<double>(raw.n()), static_cast<double>(raw.d())))
                                   : std::vector<double>{0.0};
  for (double t : tau1)
    if (!(t > 0)) usage("--tau-grid entries must be positive");
  for (double t : tau2)
    if (!(t > 0)) usage("--tau2-grid entries must be positive");
  for (double l : lambda)
    if (!(l >= 0 && std::isfinite(l))) usage("--lambda-grid entries must be finite and >= 0");

  ShrinkSpec modes;
  modes.feature_mode = mode;
  modes.response_mode = rc.mode;
  modes.preserve_sign = rc.preserve_sign;
  const auto cv_seed = derive_seed(a.seed, "cv");

  auto list = [](const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_short(v[i]);
    return s;
  };
  pr.section("resolved configuration");
  pr.kv("command", "cv");
  pr.kv("family", to_string(family.kind));
  pr.kv("data", a.data);
  pr.integer("n", raw.n());
  pr.integer("d", raw.d());
  pr.kv("estimator", to_string(est.kind));
  if (uses_weights(est.kind)) pr.num("weighted_p", est.p);
  pr.kv("feature_mode", to_string(mode));
  pr.kv("response_mode", to_string(rc.mode));
  pr.kv("preserve_sign", rc.preserve_sign ? "true" : "false");
  pr.kv("tau1_grid", list(tau1));
  pr.kv("tau2_grid", list(tau2));
  pr.kv("lambda_grid", list(lambda));
  pr.integer("folds", a.folds);
  pr.num("tol", opts.grad_tol);
  pr.integer("max_iters", opts.max_iters);
  pr.kv("seed", std::to_string(a.seed));
  pr.kv("seed.cv", std::to_string(cv_seed));

  const CvProblem problem{family, est.kind, est.p, modes, opts};
  const CvResult cv = cross_validate(raw, problem, tau1, tau2, lambda, a.folds, cv_seed);

  pr.section("selected");
  pr.num("tau1", cv.selected.tau1);
  pr.num("tau2", cv.selected.tau2);
  pr.num("lambda", cv.selected.lambda);
  pr.section("grid");
  pr.raw() << "tau1,tau2,lambda,mean_heldout_loss\n";
  for (const auto& pt : cv.grid)
    pr.raw() << format_short(pt.choice.tau1) << ',' << format_short(pt.choice.tau2) << ','
             << format_short(pt.choice.lambda) << ',' << format_short(pt.mean_loss) << '\n';

  if (!a.out.empty()) {
    KeyValueRecord rec;
    rec.add("family", to_string(family.kind));
    rec.add("data", a.data);
    rec.add("estimator", to_string(est.kind));
    rec.add("folds", std::to_string(a.folds));
    rec.add("seed", std::to_string(a.seed));
    record_shrink(rec, resolve_shrink(modes, cv.selected.tau1, cv.selected.tau2));
    rec.add("lambda", cv.selected.lambda);
    for (std::size_t i = 0; i < cv.grid.size(); ++i) {
      const auto& pt = cv.grid[i];
      rec.add("grid." + std::to_string(i), format_double(pt.choice.tau1) + "," + format_double(pt.choice.tau2) + "," +
                                               format_double(pt.choice.lambda) + "," + format_double(pt.mean_loss));
    }
    save_record(a.out, rec);
  }
  return exit_ok;
}

// ------------------------------------------------------------------- bench

struct BenchArgs {
  std::string config, out;
  int trials = 0, workers = 1;
  CLI::Option* trials_opt = nullptr;
};

int cmd_bench(const BenchArgs& a, Printer& pr) {
  ExperimentConfig config = load_experiment_config(a.config);
  if (a.trials_opt->count()) {
    if (a.trials < 1) usage("--trials must be >= 1");
    config.trials = a.trials;
  }
  if (a.workers < 1) usage("--workers must be >= 1");

  pr.section("resolved configuration");
  pr.kv("command", "bench");
  pr.kv("config", a.config);
  pr.integer("workers", a.workers);
  pr.kv("out", a.out);
  pr.raw() << to_yaml(config);

  const auto start = std::chrono::steady_clock::now();
  const ExperimentSummary summary = run_experiment(config, a.workers);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  std::ofstream os(a.out);
  if (!os) fail(ErrorKind::io, "cannot open '" + a.out + "' for writing");
  write_error_table_csv(os, summary.table);
  os.close();
  if (!os) fail(ErrorKind::io, "write to '" + a.out + "' failed");

  pr.section("result");
  pr.integer("cells", static_cast<long long>(summary.table.rows.size()));
  pr.integer("total_trials", summary.total_trials);
  pr.integer("failures", summary.failures);
  pr.num("wall_seconds", wall);
  return exit_ok;
}

// -------------------------------------------------------------------- lrsc

struct LrscArgs {
  std::string family, data, beta_star, shrink = "none", clip_response = "none", support;
  double radius = 0.5, beta_scale = 1, weighted_p = 0, kappa_floor = 0;
  int dirs = 500;
  std::uint64_t seed = 1;
  CLI::Option *weighted_opt = nullptr, *kappa_opt = nullptr;
};

Vector<double> read_beta_star(const std::string& spec, Eigen::Index d) {
  if (std::filesystem::exists(spec)) {
    std::ifstream is(spec);
    if (!is) fail(ErrorKind::io, "cannot open '" + spec + "'");
    std::stringstream text;
    text << is.rdbuf();
    if (text.str().find("beta_hat = ") != std::string::npos) {
      std::istringstream rs(text.str());
      return read_record(rs).beta;
    }
    std::vector<double> values;
    std::string tok;
    std::string body = text.str();
    std::replace(body.begin(), body.end(), ',', ' ');
    std::istringstream ws(body);
    while (ws >> tok) {
      try {
        values.push_back(parse_double(tok));
      } catch (const Error&) {
        fail(ErrorKind::invalid_input, spec + ": not a number '" + tok + "'");
      }
    }
    return Eigen::Map<Vector<double>>(values.data(), static_cast<Eigen::Index>(values.size()));
  }
  return make_beta(d, parse_beta_pattern(spec));
}

int cmd_lrsc(const LrscArgs& a, Printer& pr) {
  const GlmFamily family = parse_family(a.family);
  if (a.dirs < 1) usage("--dirs must be >= 1");
  if (!(a.radius > 0)) usage("--radius must be positive");
  if (!(a.beta_scale > 0)) usage("--beta-scale must be positive");
  std::optional<double> p;
  if (a.weighted_opt->count()) {
    if (family.kind != FamilyKind::logistic) usage("--weighted needs --family logistic");
    if (!(a.weighted_p >= 0 && a.weighted_p < 0.5)) usage("--weighted must lie in [0, 0.5)");
    p = a.weighted_p;
  }
  std::optional<std::vector<Eigen::Index>> support;
  if (!a.support.empty()) {
    support.emplace();
    for (const auto& cell : split(a.support, ',')) {
      const double v = parse_number(cell, "--support");
      if (v < 0 || v != std::floor(v)) usage("--support entries must be nonnegative integers");
      support->push_back(static_cast<Eigen::Index>(v));
    }
  }

  parse_feature_shrink(a.shrink, true);
  parse_response_clip(a.clip_response, false);
  const Dataset raw = load_for(family, a.data);
  const ShrinkSpec spec = resolve_fit_shrink(a.shrink, a.clip_response, raw);
  const Vector<double> beta_star = a.beta_scale * read_beta_star(a.beta_star, raw.d());
  if (beta_star.size() != raw.d())
    fail(ErrorKind::invalid_input, "beta* has " + std::to_string(beta_star.size()) + " entries, data has d = " +
                                       std::to_string(raw.d()));
  if (support)
    for (auto j : *support)
      if (j >= raw.d()) usage("--support index " + std::to_string(j) + " out of range");

  pr.section("resolved configuration");
  pr.kv("command", "lrsc");
  pr.kv("family", to_string(family.kind));
  pr.kv("data", a.data);
  pr.integer("n", raw.n());
  pr.integer("d", raw.d());
  print_shrink(pr, spec);
  pr.kv("beta_star", a.beta_star);
  pr.num("beta_scale", a.beta_scale);
  pr.num("beta_star_l2_norm", beta_star.norm());
  if (p) pr.num("weighted_p", *p);
  pr.num("radius", a.radius);
  pr.integer("dirs", a.dirs);
  pr.kv("support", a.support.empty() ? "none" : a.support);
  pr.kv("seed", std::to_string(a.seed));
  if (a.kappa_opt->count()) pr.num("kappa_floor", a.kappa_floor);

  const Dataset shrunk = apply_shrink(raw, spec);
  const LrscResult res = lrsc_probe(family, shrunk, beta_star, a.radius, a.dirs, a.seed, support, p);

  pr.section("result");
  pr.num("min_ratio", res.min_ratio);
  const Vector<double>& v = res.min_direction;
  pr.num("direction_l2", v.norm());
  pr.num("direction_l1", v.lpNorm<1>());
  pr.num("direction_linf", v.lpNorm<Eigen::Infinity>());
  std::vector<Eigen::Index> order(static_cast<std::size_t>(v.size()));
  for (Eigen::Index j = 0; j < v.size(); ++j) order[static_cast<std::size_t>(j)] = j;
  std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return std::abs(v[i]) > std::abs(v[j]); });
  std::string top;
  for (std::size_t k = 0; k < std::min<std::size_t>(5, order.size()); ++k)
    top += (k ? "," : "") + std::to_string(order[k]) + ":" + format_short(v[order[k]]);
  pr.kv("direction_top", top);
  if (a.kappa_opt->count()) pr.kv("kappa_check", res.min_ratio > a.kappa_floor ? "pass" : "fail");
  return exit_ok;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Robust estimation for corrupted GLMs with heavy-tailed features", "rglm"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Generate a synthetic dataset CSV");
  s->add_option("--model", sim.model, "linear | logistic")->required();
  s->add_option("--n", sim.n, "Sample size")->required();
  s->add_option("--d", sim.d, "Dimension")->required();
  s->add_option("--beta", sim.beta, "five_ones | half_pm_half | sparse_pm1");
  s->add_option("--beta-scale", sim.beta_scale, "Multiplier applied to the beta pattern");
  s->add_option("--feature-dist", sim.feature_dist, "gaussian | t:NU");
  sim.noise_dist_opt = s->add_option("--noise-dist", sim.noise_dist, "gaussian | t:NU (linear)");
  sim.noise_sd_opt = s->add_option("--noise-sd", sim.noise_sd, "Noise standard deviation (linear)");
  sim.flip_opt = s->add_option("--flip-p", sim.flip_p, "Label flip probability (logistic)");
  s->add_option("--seed", sim.seed, "Base seed");
  s->add_option("--out", sim.out, "Output CSV")->required();

  FitArgs fit;
  auto* f = app.add_subcommand("fit", "Fit one estimator");
  f->add_option("--family", fit.family, "linear | logistic")->required();
  f->add_option("--data", fit.data, "Dataset CSV")->required();
  f->add_option("--shrink", fit.shrink, "none | l4:TAU | l2:TAU | clip:TAU (TAU may be auto)");
  f->add_option("--clip-response", fit.clip_response, "none | TAU[:nosign]");
  f->add_option("--estimator", fit.estimator, "mle | weighted:P | l1:LAMBDA | weighted_l1:P:LAMBDA");
  f->add_option("--tol", fit.tol, "Gradient / KKT tolerance");
  f->add_option("--max-iters", fit.max_iters, "Iteration cap");
  f->add_option("--out", fit.out, "Fit record path");

  CvArgs cv;
  auto* c = app.add_subcommand("cv", "Cross-validate thresholds and penalty");
  c->add_option("--family", cv.family, "linear | logistic")->required();
  c->add_option("--data", cv.data, "Dataset CSV")->required();
  c->add_option("--estimator", cv.estimator, "mle | weighted:P | l1 | weighted_l1:P");
  c->add_option("--shrink", cv.shrink, "none | l4 | l2 | clip");
  c->add_option("--clip-response", cv.clip_response, "none | clip[:nosign]");
  c->add_option("--tau-grid", cv.tau_grid, "Comma list of feature thresholds (number, inf, auto, auto*M)");
  c->add_option("--tau2-grid", cv.tau2_grid, "Comma list of response thresholds");
  c->add_option("--lambda-grid", cv.lambda_grid, "Comma list of penalties (number, auto, auto*M)");
  c->add_option("--folds", cv.folds, "Number of folds");
  c->add_option("--tol", cv.tol, "Gradient / KKT tolerance");
  c->add_option("--max-iters", cv.max_iters, "Iteration cap");
  c->add_option("--seed", cv.seed, "Base seed");
  c->add_option("--out", cv.out, "Record path");

  BenchArgs bench;
  auto* b = app.add_subcommand("bench", "Run a Monte Carlo experiment");
  b->add_option("--config", bench.config, "Experiment YAML")->required();
  bench.trials_opt = b->add_option("--trials", bench.trials, "Override trials per cell");
  b->add_option("--workers", bench.workers, "Worker threads");
  b->add_option("--out", bench.out, "ErrorTable CSV")->required();

  LrscArgs lr;
  auto* l = app.add_subcommand("lrsc", "Probe local restricted strong convexity");
  l->add_option("--family", lr.family, "linear | logistic")->required();
  l->add_option("--data", lr.data, "Dataset CSV")->required();
  l->add_option("--beta-star", lr.beta_star, "File with beta values, fit record, or pattern name")->required();
  l->add_option("--beta-scale", lr.beta_scale, "Multiplier applied to beta*");
  l->add_option("--shrink", lr.shrink, "Preprocessing as in fit");
  l->add_option("--clip-response", lr.clip_response, "Response clipping as in fit");
  lr.weighted_opt = l->add_option("--weighted", lr.weighted_p, "Use the noisy-label weighted loss with this p");
  l->add_option("--radius", lr.radius, "Probe radius");
  l->add_option("--dirs", lr.dirs, "Number of directions");
  l->add_option("--support", lr.support, "Comma list of support indices (0-based)");
  l->add_option("--seed", lr.seed, "Direction seed");
  lr.kappa_opt = l->add_option("--kappa-floor", lr.kappa_floor, "Report pass/fail against this floor");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return exit_ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return exit_usage;
  }

  Printer pr(out);
  try {
    if (*s) return cmd_simulate(sim, pr);
    if (*f) return cmd_fit(fit, pr);
    if (*c) return cmd_cv(cv, pr);
    if (*b) return cmd_bench(bench, pr);
    if (*l) return cmd_lrsc(lr, pr);
  } catch (const Error& e) {
    err << to_string(e.kind()) << ": " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_data;
  }
  return exit_usage;
}

}  // namespace rglm
