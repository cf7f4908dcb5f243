#pragma once

#include <string>

#include "rglm/bench.hpp"
#include "rglm/optimize.hpp"
#include "rglm/shrink.hpp"

namespace rglm {

FeatureMode parse_feature_mode(const std::string& name);
const char* to_string(FeatureMode mode);
ResponseMode parse_response_mode(const std::string& name);
const char* to_string(ResponseMode mode);
TauScale parse_tau_scale(const std::string& name);
const char* to_string(TauScale scale);
const char* to_string(CorruptionKind kind);

// YAML text forms. Parse errors are ErrorKind::usage and name the offending
// key path, e.g. "methods[1].shrink.tau1".

std::string to_yaml(const ShrinkSpec& spec);
ShrinkSpec parse_shrink_spec(const std::string& yaml);

std::string to_yaml(const SolverOpts& opts);
SolverOpts parse_solver_opts(const std::string& yaml);

std::string to_yaml(const ExperimentConfig& config);
ExperimentConfig parse_experiment_config(const std::string& yaml);
ExperimentConfig load_experiment_config(const std::string& path);

}  // namespace rglm
