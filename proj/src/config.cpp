#include "rglm/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "rglm/io.hpp"

namespace rglm {

FeatureMode parse_feature_mode(const std::string& name) {
  if (name == "none") return FeatureMode::none;
  if (name == "norm_shrink_l4") return FeatureMode::norm_shrink_l4;
  if (name == "norm_shrink_l2") return FeatureMode::norm_shrink_l2;
  if (name == "elementwise_clip") return FeatureMode::elementwise_clip;
  fail(ErrorKind::invalid_parameter, "unknown feature_mode '" + name + "'");
}

const char* to_string(FeatureMode mode) {
  switch (mode) {
    case FeatureMode::none: return "none";
    case FeatureMode::norm_shrink_l4: return "norm_shrink_l4";
    case FeatureMode::norm_shrink_l2: return "norm_shrink_l2";
    case FeatureMode::elementwise_clip: return "elementwise_clip";
  }
  return "none";
}

ResponseMode parse_response_mode(const std::string& name) {
  if (name == "none") return ResponseMode::none;
  if (name == "clip") return ResponseMode::clip;
  fail(ErrorKind::invalid_parameter, "unknown response_mode '" + name + "'");
}

const char* to_string(ResponseMode mode) { return mode == ResponseMode::clip ? "clip" : "none"; }

TauScale parse_tau_scale(const std::string& name) {
  if (name == "log_n") return TauScale::log_n;
  if (name == "log_d") return TauScale::log_d;
  fail(ErrorKind::invalid_parameter, "unknown tau_scale '" + name + "'");
}

const char* to_string(TauScale scale) { return scale == TauScale::log_d ? "log_d" : "log_n"; }

const char* to_string(CorruptionKind kind) {
  switch (kind) {
    case CorruptionKind::none: return "none";
    case CorruptionKind::additive_noise: return "additive_noise";
    case CorruptionKind::label_flip: return "label_flip";
  }
  return "none";
}

namespace {

CorruptionKind parse_corruption_kind(const std::string& name) {
  if (name == "none") return CorruptionKind::none;
  if (name == "additive_noise") return CorruptionKind::additive_noise;
  if (name == "label_flip") return CorruptionKind::label_flip;
  fail(ErrorKind::invalid_parameter, "unknown corruption kind '" + name + "'");
}

[[noreturn]] void config_fail(const std::string& path, const std::string& msg) {
  fail(ErrorKind::usage, "config key '" + path + "': " + msg);
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

// Runs f and re-raises any library error against the key path.
template <typename F>
auto at(const std::string& path, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::usage) throw;
    config_fail(path, e.what());
  }
}

void check_map(const YAML::Node& node, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!node.IsMap()) config_fail(path.empty() ? "<root>" : path, "expected a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      config_fail(join(path, key), "unknown key");
  }
}

std::string scalar(const YAML::Node& node, const std::string& path) {
  if (!node.IsScalar()) config_fail(path, "expected a scalar");
  return node.Scalar();
}

double get_double(const YAML::Node& node, const std::string& path) {
  return at(path, [&] { return parse_double(scalar(node, path)); });
}

long long get_int(const YAML::Node& node, const std::string& path) {
  const auto text = scalar(node, path);
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) config_fail(path, "expected an integer, got '" + text + "'");
  return v;
}

int get_small_int(const YAML::Node& node, const std::string& path) {
  const long long v = get_int(node, path);
  if (v < -2147483647LL || v > 2147483647LL) config_fail(path, "integer out of range");
  return static_cast<int>(v);
}

std::uint64_t get_u64(const YAML::Node& node, const std::string& path) {
  const auto text = scalar(node, path);
  std::size_t used = 0;
  std::uint64_t v = 0;
  try {
    if (!text.empty() && text[0] != '-') v = std::stoull(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) config_fail(path, "expected an unsigned integer, got '" + text + "'");
  return v;
}

bool get_bool(const YAML::Node& node, const std::string& path) {
  const auto text = scalar(node, path);
  if (text == "true") return true;
  if (text == "false") return false;
  config_fail(path, "expected true or false, got '" + text + "'");
}

// A scalar or a sequence of scalars.
std::vector<double> get_double_list(const YAML::Node& node, const std::string& path) {
  std::vector<double> out;
  if (node.IsSequence()) {
    for (std::size_t i = 0; i < node.size(); ++i)
      out.push_back(get_double(node[i], path + "[" + std::to_string(i) + "]"));
    if (out.empty()) config_fail(path, "list must not be empty");
  } else {
    out.push_back(get_double(node, path));
  }
  return out;
}

std::string list_text(const std::vector<double>& values) {
  std::string s = "[";
  for (std::size_t i = 0; i < values.size(); ++i) s += (i ? ", " : "") + format_double(values[i]);
  return s + "]";
}

YAML::Node load_text(const std::string& text) {
  try {
    return YAML::Load(text);
  } catch (const YAML::Exception& e) {
    fail(ErrorKind::usage, std::string("config is not valid YAML: ") + e.what());
  }
}

ShrinkSpec shrink_from_node(const YAML::Node& node, const std::string& path) {
  check_map(node, path, {"feature_mode", "tau1", "response_mode", "tau2", "preserve_sign"});
  ShrinkSpec spec;
  if (node["feature_mode"])
    spec.feature_mode = at(join(path, "feature_mode"), [&] { return parse_feature_mode(node["feature_mode"].Scalar()); });
  if (node["tau1"]) spec.tau1 = get_double(node["tau1"], join(path, "tau1"));
  if (node["response_mode"])
    spec.response_mode =
        at(join(path, "response_mode"), [&] { return parse_response_mode(node["response_mode"].Scalar()); });
  if (node["tau2"]) spec.tau2 = get_double(node["tau2"], join(path, "tau2"));
  if (node["preserve_sign"]) spec.preserve_sign = get_bool(node["preserve_sign"], join(path, "preserve_sign"));
  at(path.empty() ? "<root>" : path, [&] { spec.validate(); });
  return spec;
}

SolverOpts solver_from_node(const YAML::Node& node, const std::string& path) {
  check_map(node, path, {"max_iters", "grad_tol", "step_init", "backtrack_factor", "backtrack_c"});
  SolverOpts opts;
  if (node["max_iters"]) opts.max_iters = get_small_int(node["max_iters"], join(path, "max_iters"));
  if (node["grad_tol"]) opts.grad_tol = get_double(node["grad_tol"], join(path, "grad_tol"));
  if (node["step_init"]) opts.step_init = get_double(node["step_init"], join(path, "step_init"));
  if (node["backtrack_factor"])
    opts.backtrack_factor = get_double(node["backtrack_factor"], join(path, "backtrack_factor"));
  if (node["backtrack_c"]) opts.backtrack_c = get_double(node["backtrack_c"], join(path, "backtrack_c"));
  at(path.empty() ? "<root>" : path, [&] { opts.validate(); });
  return opts;
}

std::string solver_body(const SolverOpts& opts, const std::string& indent) {
  std::ostringstream os;
  os << indent << "max_iters: " << opts.max_iters << '\n'
     << indent << "grad_tol: " << format_double(opts.grad_tol) << '\n'
     << indent << "step_init: " << format_double(opts.step_init) << '\n'
     << indent << "backtrack_factor: " << format_double(opts.backtrack_factor) << '\n'
     << indent << "backtrack_c: " << format_double(opts.backtrack_c) << '\n';
  return os.str();
}

MethodSpec method_from_node(const YAML::Node& node, const std::string& path) {
  check_map(node, path, {"id", "estimator", "shrink", "lambda"});
  MethodSpec m;
  if (!node["id"]) config_fail(join(path, "id"), "missing required key");
  m.id = scalar(node["id"], join(path, "id"));
  if (!node["estimator"]) config_fail(join(path, "estimator"), "missing required key");
  m.estimator = at(join(path, "estimator"), [&] { return parse_estimator_kind(node["estimator"].Scalar()); });
  if (const auto sh = node["shrink"]) {
    const auto sp = join(path, "shrink");
    check_map(sh, sp, {"feature_mode", "response_mode", "preserve_sign", "tau_scale", "tau1", "tau2"});
    if (sh["feature_mode"])
      m.shrink.feature_mode =
          at(join(sp, "feature_mode"), [&] { return parse_feature_mode(sh["feature_mode"].Scalar()); });
    if (sh["response_mode"])
      m.shrink.response_mode =
          at(join(sp, "response_mode"), [&] { return parse_response_mode(sh["response_mode"].Scalar()); });
    if (sh["preserve_sign"]) m.shrink.preserve_sign = get_bool(sh["preserve_sign"], join(sp, "preserve_sign"));
    if (sh["tau_scale"])
      m.tau_scale = at(join(sp, "tau_scale"), [&] { return parse_tau_scale(sh["tau_scale"].Scalar()); });
    if (sh["tau1"]) m.tau1_multipliers = get_double_list(sh["tau1"], join(sp, "tau1"));
    if (sh["tau2"]) m.tau2_multipliers = get_double_list(sh["tau2"], join(sp, "tau2"));
  }
  if (node["lambda"]) m.lambda_multipliers = get_double_list(node["lambda"], join(path, "lambda"));
  return m;
}

}  // namespace

std::string to_yaml(const ShrinkSpec& spec) {
  std::ostringstream os;
  os << "feature_mode: " << to_string(spec.feature_mode) << '\n'
     << "tau1: " << format_double(spec.tau1) << '\n'
     << "response_mode: " << to_string(spec.response_mode) << '\n'
     << "tau2: " << format_double(spec.tau2) << '\n'
     << "preserve_sign: " << (spec.preserve_sign ? "true" : "false") << '\n';
  return os.str();
}

ShrinkSpec parse_shrink_spec(const std::string& yaml) { return shrink_from_node(load_text(yaml), ""); }

std::string to_yaml(const SolverOpts& opts) { return solver_body(opts, ""); }

SolverOpts parse_solver_opts(const std::string& yaml) { return solver_from_node(load_text(yaml), ""); }

std::string to_yaml(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "name: \"" << c.name << "\"\n"
     << "model: " << to_string(c.model) << '\n'
     << "n_grid: [";
  for (std::size_t i = 0; i < c.n_grid.size(); ++i) os << (i ? ", " : "") << c.n_grid[i];
  os << "]\n"
     << "d: " << c.d << '\n'
     << "beta: " << to_string(c.beta) << '\n';
  if (c.beta == BetaPattern::custom) os << "beta_custom: " << list_text(c.beta_custom) << '\n';
  os << "beta_scale: " << format_double(c.beta_scale) << '\n' << "feature_dists: [";
  for (std::size_t i = 0; i < c.feature_dists.size(); ++i)
    os << (i ? ", " : "") << '"' << c.feature_dists[i].to_string() << '"';
  os << "]\n"
     << "corruption:\n"
     << "  kind: " << to_string(c.corruption.kind) << '\n';
  if (c.corruption.kind == CorruptionKind::additive_noise)
    os << "  noise_dist: \"" << c.corruption.noise_dist.to_string() << "\"\n"
       << "  target_sd: " << format_double(c.corruption.target_sd) << '\n';
  if (c.corruption.kind == CorruptionKind::label_flip) os << "  flip_p: " << format_double(c.corruption.flip_p) << '\n';
  os << "trials: " << c.trials << '\n'
     << "base_seed: " << c.base_seed << '\n'
     << "cv_folds: " << c.cv_folds << '\n'
     << "solver:\n"
     << solver_body(c.solver, "  ") << "methods:\n";
  for (const auto& m : c.methods) {
    os << "  - id: \"" << m.id << "\"\n"
       << "    estimator: " << to_string(m.estimator) << '\n'
       << "    shrink:\n"
       << "      feature_mode: " << to_string(m.shrink.feature_mode) << '\n'
       << "      response_mode: " << to_string(m.shrink.response_mode) << '\n'
       << "      preserve_sign: " << (m.shrink.preserve_sign ? "true" : "false") << '\n'
       << "      tau_scale: " << to_string(m.resolved_tau_scale()) << '\n'
       << "      tau1: " << list_text(m.tau1_multipliers) << '\n'
       << "      tau2: " << list_text(m.tau2_multipliers) << '\n'
       << "    lambda: " << list_text(m.lambda_multipliers) << '\n';
  }
  return os.str();
}

ExperimentConfig parse_experiment_config(const std::string& yaml) {
  const YAML::Node root = load_text(yaml);
  check_map(root, "",
            {"name", "model", "n_grid", "d", "beta", "beta_custom", "beta_scale", "feature_dists", "corruption",
             "methods", "trials", "base_seed", "cv_folds", "solver"});
  for (const char* key : {"model", "n_grid", "d", "methods"})
    if (!root[key]) config_fail(key, "missing required key");

  ExperimentConfig c;
  if (root["name"]) c.name = scalar(root["name"], "name");
  c.model = at("model", [&] { return parse_model_kind(scalar(root["model"], "model")); });
  const auto ng = root["n_grid"];
  if (!ng.IsSequence() || ng.size() == 0) config_fail("n_grid", "expected a nonempty list");
  c.n_grid.clear();
  for (std::size_t i = 0; i < ng.size(); ++i) {
    const auto p = "n_grid[" + std::to_string(i) + "]";
    c.n_grid.push_back(get_small_int(ng[i], p));
    if (c.n_grid.back() < 2) config_fail(p, "sample sizes must be >= 2");
    if (i > 0 && c.n_grid[i] <= c.n_grid[i - 1]) config_fail(p, "n_grid must be strictly ascending");
  }
  c.d = get_small_int(root["d"], "d");
  if (c.d < 1) config_fail("d", "must be positive");
  if (root["beta"]) c.beta = at("beta", [&] { return parse_beta_pattern(scalar(root["beta"], "beta")); });
  if (root["beta_custom"]) c.beta_custom = get_double_list(root["beta_custom"], "beta_custom");
  if (root["beta_scale"]) c.beta_scale = get_double(root["beta_scale"], "beta_scale");
  if (!(c.beta_scale > 0)) config_fail("beta_scale", "must be positive");
  at("beta", [&] { (void)c.beta_star(); });

  if (const auto fd = root["feature_dists"]) {
    if (!fd.IsSequence() || fd.size() == 0) config_fail("feature_dists", "expected a nonempty list");
    c.feature_dists.clear();
    for (std::size_t i = 0; i < fd.size(); ++i) {
      const auto p = "feature_dists[" + std::to_string(i) + "]";
      c.feature_dists.push_back(at(p, [&] { return FeatureDist::parse(scalar(fd[i], p)); }));
    }
  }

  if (const auto co = root["corruption"]) {
    check_map(co, "corruption", {"kind", "noise_dist", "target_sd", "flip_p"});
    if (!co["kind"]) config_fail("corruption.kind", "missing required key");
    c.corruption.kind = at("corruption.kind", [&] { return parse_corruption_kind(scalar(co["kind"], "corruption.kind")); });
    if (co["noise_dist"])
      c.corruption.noise_dist =
          at("corruption.noise_dist", [&] { return FeatureDist::parse(scalar(co["noise_dist"], "corruption.noise_dist")); });
    if (co["target_sd"]) c.corruption.target_sd = get_double(co["target_sd"], "corruption.target_sd");
    if (co["flip_p"]) c.corruption.flip_p = get_double(co["flip_p"], "corruption.flip_p");
    at("corruption", [&] { c.corruption.validate(); });
  }
  const bool linear = c.model == ModelKind::linear_highdim;
  if (linear && c.corruption.kind == CorruptionKind::label_flip)
    config_fail("corruption.kind", "label_flip needs a logistic model");
  if (!linear && c.corruption.kind == CorruptionKind::additive_noise)
    config_fail("corruption.kind", "additive_noise needs the linear model");

  if (root["trials"]) c.trials = get_small_int(root["trials"], "trials");
  if (c.trials < 1) config_fail("trials", "must be >= 1");
  if (root["base_seed"]) c.base_seed = get_u64(root["base_seed"], "base_seed");
  if (root["cv_folds"]) c.cv_folds = get_small_int(root["cv_folds"], "cv_folds");
  if (c.cv_folds < 2) config_fail("cv_folds", "must be >= 2");
  if (root["solver"]) c.solver = solver_from_node(root["solver"], "solver");

  const auto ms = root["methods"];
  if (!ms.IsSequence() || ms.size() == 0) config_fail("methods", "expected a nonempty list");
  for (std::size_t i = 0; i < ms.size(); ++i) {
    const auto p = "methods[" + std::to_string(i) + "]";
    c.methods.push_back(method_from_node(ms[i], p));
    // Method-level checks, reported against this entry.
    ExperimentConfig probe = c;
    probe.methods = {c.methods.back()};
    at(p, [&] { probe.validate(); });
    for (std::size_t j = 0; j < i; ++j)
      if (c.methods[j].id == c.methods[i].id) config_fail(p + ".id", "duplicate method id '" + c.methods[i].id + "'");
  }
  at("<root>", [&] { c.validate(); });
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorKind::io, "cannot open config '" + path + "'");
  std::ostringstream text;
  text << is.rdbuf();
  return parse_experiment_config(text.str());
}

}  // namespace rglm
