#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "rglm/datagen.hpp"
#include "rglm/dataset.hpp"
#include "rglm/glm.hpp"
#include "rglm/optimize.hpp"
#include "rglm/shrink.hpp"

namespace rglm {

enum class ModelKind { linear_highdim, logistic_lowdim, logistic_highdim };

/// weighted_l1 is the noisy-label weighted loss plus an l1 penalty, the
/// high-dimensional mislabeled-logistic estimator.
enum class EstimatorKind { mle, weighted_mle, l1, weighted_l1 };

ModelKind parse_model_kind(const std::string& name);
const char* to_string(ModelKind kind);
EstimatorKind parse_estimator_kind(const std::string& name);
const char* to_string(EstimatorKind kind);

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline bool uses_l1(EstimatorKind e) { return e == EstimatorKind::l1 || e == EstimatorKind::weighted_l1; }
inline bool uses_weights(EstimatorKind e) {
  return e == EstimatorKind::weighted_mle || e == EstimatorKind::weighted_l1;
}

/// One competing estimator: preprocessing modes plus the grids its
/// thresholds and penalty are chosen from. Grid entries are multipliers of
/// default_tau / default_lambda; `inf` disables that threshold. A grid with
/// one entry is a fixed choice; several entries trigger cross-validation.
struct MethodSpec {
  std::string id;
  EstimatorKind estimator = EstimatorKind::mle;
  ShrinkSpec shrink;  // modes and sign convention; thresholds come from the grids
  std::optional<TauScale> tau_scale;  // default: log_n for norm shrinkage, log_d for clipping
  std::vector<double> tau1_multipliers{1.0};
  std::vector<double> tau2_multipliers{1.0};
  std::vector<double> lambda_multipliers{1.0};

  bool needs_cv() const;
  TauScale resolved_tau_scale() const;
};

struct ExperimentConfig {
  std::string name = "experiment";
  ModelKind model = ModelKind::logistic_lowdim;
  std::vector<int> n_grid;
  int d = 10;
  BetaPattern beta = BetaPattern::half_pm_half;
  std::vector<double> beta_custom;
  double beta_scale = 1.0;
  std::vector<FeatureDist> feature_dists{FeatureDist::gaussian()};
  CorruptionSpec corruption;
  std::vector<MethodSpec> methods;
  int trials = 1;
  std::uint64_t base_seed = 1;
  int cv_folds = 5;
  SolverOpts solver;

  void validate() const;
  GlmFamily family() const;
  Vector<double> beta_star() const;
};

struct ErrorRow {
  std::string method;
  std::string feature_dist;
  int n = 0;
  double mean_l2_error = 0.0;
  double stderr_ = 0.0;
  int trials = 0;
  int failures = 0;
};

struct ErrorTable {
  std::vector<ErrorRow> rows;
  const ErrorRow* find(const std::string& method, const std::string& dist, int n) const;
};

double l2_error(const Vector<double>& beta_hat, const Vector<double>& beta_star);

/// Resolved thresholds and penalty for one fit (infinite tau = no shrinkage).
struct TuningChoice {
  double tau1 = kInf;
  double tau2 = kInf;
  double lambda = 0.0;
};

struct CvPoint {
  TuningChoice choice;
  double mean_loss = 0.0;
};

struct CvResult {
  TuningChoice selected;
  std::vector<CvPoint> grid;
};

/// What cross_validate tunes: the estimator and the preprocessing modes.
struct CvProblem {
  GlmFamily family;
  EstimatorKind estimator = EstimatorKind::mle;
  double weighted_p = 0.0;
  ShrinkSpec shrink;  // modes only
  SolverOpts solver;
};

/// K-fold selection over the Cartesian grid tau1 x tau2 x lambda (absolute
/// values; `inf` disables a threshold). Folds are contiguous blocks of a
/// seeded permutation. Training folds are preprocessed; held-out loss uses the
/// raw rows: squared error for linear, nll on observed labels for logistic.
/// Weighted estimators are scored with the weighted nll, whose expectation
/// over the flips is the clean-label nll. Ties go to larger tau1, then tau2,
/// then lambda.
CvResult cross_validate(const Dataset& data, const CvProblem& problem, const std::vector<double>& tau1_grid,
                        const std::vector<double>& tau2_grid, const std::vector<double>& lambda_grid, int folds,
                        std::uint64_t seed);

/// Held-out loss of beta on raw data; weighted nll when weighted_p is given.
double heldout_loss(const GlmFamily& family, const Dataset& test, const Vector<double>& beta,
                    std::optional<double> weighted_p = std::nullopt);

/// Fits one estimator on already preprocessed data.
FitResult fit_estimator(const CvProblem& problem, const Dataset& shrunk, double lambda,
                        const Vector<double>* warm_start = nullptr);

/// Spec with the thresholds filled in.
ShrinkSpec resolve_shrink(const ShrinkSpec& modes, double tau1, double tau2);

struct TrialResult {
  std::optional<double> l2_error;  // empty when the solver diverged
  TuningChoice choice;
  bool converged = false;
};

/// Data for one (feature dist, n, trial) cell; shared by every method.
Dataset generate_trial_data(const ExperimentConfig& config, int n, std::size_t dist_index, int trial_index);

/// One Monte Carlo replicate of one method. Deterministic in its arguments.
TrialResult run_trial(const ExperimentConfig& config, int n, std::size_t dist_index, std::size_t method_index,
                      int trial_index);

TrialResult run_method(const ExperimentConfig& config, const Dataset& data, std::size_t method_index,
                       std::uint64_t cv_seed);

struct ExperimentSummary {
  ErrorTable table;
  long total_trials = 0;
  long failures = 0;
};

/// Full grid, aggregated in trial-index order; identical for any worker count.
ExperimentSummary run_experiment(const ExperimentConfig& config, int workers = 1);

struct LrscResult {
  double min_ratio = 0.0;
  Vector<double> min_direction;
};

/// Samples directions on the radius-r sphere (pushed into the cone
/// ||v_Sc||_1 <= 3||v_S||_1 when a support is given) and returns the smallest
/// ratio taylor_remainder(beta* + delta; beta*) / ||delta||^2.
LrscResult lrsc_probe(const GlmFamily& family, const Dataset& data, const Vector<double>& beta_star, double radius,
                      int num_directions, std::uint64_t seed,
                      const std::optional<std::vector<Eigen::Index>>& support = std::nullopt,
                      std::optional<double> weighted_p = std::nullopt);

/// Fraction of rows where sign(x'beta) disagrees with the 0/1 label.
double classification_error(const Matrix<double>& X, const Vector<double>& labels, const Vector<double>& beta);

}  // namespace rglm
