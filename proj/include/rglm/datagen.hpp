#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "rglm/core.hpp"
#include "rglm/dataset.hpp"

namespace rglm {

/// Marginal law of each feature entry (and of additive noise).
struct FeatureDist {
  enum class Kind { gaussian_std, student_t };
  Kind kind = Kind::gaussian_std;
  double nu = 0.0;

  static FeatureDist gaussian() { return {Kind::gaussian_std, 0.0}; }
  static FeatureDist student_t(double nu) { return {Kind::student_t, nu}; }

  /// "gaussian" or "t:NU".
  static FeatureDist parse(const std::string& text);
  std::string to_string() const;
  void validate() const;
  /// Population standard deviation; infinite for t with nu <= 2.
  double stddev() const;

  friend bool operator==(const FeatureDist&, const FeatureDist&) = default;
};

enum class CorruptionKind { none, additive_noise, label_flip };

struct CorruptionSpec {
  CorruptionKind kind = CorruptionKind::none;
  FeatureDist noise_dist = FeatureDist::gaussian();
  double target_sd = 0.0;
  double flip_p = 0.0;

  void validate() const;
  friend bool operator==(const CorruptionSpec&, const CorruptionSpec&) = default;
};

enum class BetaPattern { five_ones, half_pm_half, sparse_pm1, custom };

BetaPattern parse_beta_pattern(const std::string& name);
const char* to_string(BetaPattern pattern);

using Rng = std::mt19937_64;

/// Sub-stream seed from a base seed, a stream label and an index
/// (splitmix64 finalizer over an FNV-1a hash of the label).
std::uint64_t derive_seed(std::uint64_t base, std::string_view label, std::uint64_t index = 0);

/// Draws variates of one law; keeps the distribution state between calls.
class VariateSampler {
 public:
  explicit VariateSampler(const FeatureDist& dist);
  double operator()(Rng& rng);

 private:
  FeatureDist dist_;
  std::normal_distribution<double> normal_;
  std::chi_squared_distribution<double> chi2_;
};

Matrix<double> gen_features(Eigen::Index n, Eigen::Index d, const FeatureDist& dist, std::uint64_t seed);

/// z = X·beta* + eps with eps rescaled to the requested standard deviation.
Dataset gen_linear(const Matrix<double>& X, const Vector<double>& beta_star, const CorruptionSpec& noise,
                   std::uint64_t seed);

/// y ~ Bernoulli(sigmoid(x'beta*)), observed without corruption.
Dataset gen_logistic(const Matrix<double>& X, const Vector<double>& beta_star, std::uint64_t seed);

/// Flips each binary label with probability p and records which rows flipped.
Dataset flip_labels(const Dataset& data, double p, std::uint64_t seed);

/// Flips the rows marked in mask; used to undo or replay a flip record.
Dataset apply_flip_mask(const Dataset& data, const std::vector<bool>& mask);

Vector<double> make_beta(Eigen::Index d, BetaPattern pattern, const std::vector<double>& custom = {});

}  // namespace rglm
