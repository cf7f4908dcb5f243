#include "rglm/datagen.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "rglm/glm.hpp"

namespace rglm {

FeatureDist FeatureDist::parse(const std::string& text) {
  if (text == "gaussian" || text == "gaussian_std") return gaussian();
  if (text.rfind("t:", 0) == 0) {
    std::size_t used = 0;
    double nu = 0;
    try {
      nu = std::stod(text.substr(2), &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != text.size() - 2)
      fail(ErrorKind::invalid_parameter, "bad degrees of freedom in '" + text + "'");
    FeatureDist dist = student_t(nu);
    dist.validate();
    return dist;
  }
  fail(ErrorKind::invalid_parameter, "unknown distribution '" + text + "' (expected gaussian or t:NU)");
}

std::string FeatureDist::to_string() const {
  if (kind == Kind::gaussian_std) return "gaussian";
  std::ostringstream os;
  os << "t:" << nu;
  return os.str();
}

void FeatureDist::validate() const {
  if (kind == Kind::student_t && !(nu > 0 && std::isfinite(nu)))
    fail(ErrorKind::invalid_parameter, "student-t degrees of freedom must be positive");
}

double FeatureDist::stddev() const {
  if (kind == Kind::gaussian_std) return 1.0;
  if (nu <= 2) return std::numeric_limits<double>::infinity();
  return std::sqrt(nu / (nu - 2));
}

void CorruptionSpec::validate() const {
  switch (kind) {
    case CorruptionKind::none: break;
    case CorruptionKind::additive_noise:
      noise_dist.validate();
      if (!(target_sd >= 0 && std::isfinite(target_sd)))
        fail(ErrorKind::invalid_parameter, "noise target_sd must be finite and nonnegative");
      if (!std::isfinite(noise_dist.stddev()))
        fail(ErrorKind::invalid_parameter, "additive noise needs finite variance (student-t nu > 2)");
      break;
    case CorruptionKind::label_flip:
      if (!(flip_p >= 0 && flip_p < 0.5)) fail(ErrorKind::invalid_parameter, "flip_p must lie in [0, 0.5)");
      break;
  }
}

BetaPattern parse_beta_pattern(const std::string& name) {
  if (name == "five_ones") return BetaPattern::five_ones;
  if (name == "half_pm_half") return BetaPattern::half_pm_half;
  if (name == "sparse_pm1") return BetaPattern::sparse_pm1;
  if (name == "custom") return BetaPattern::custom;
  fail(ErrorKind::invalid_parameter, "unknown beta pattern '" + name + "'");
}

const char* to_string(BetaPattern pattern) {
  switch (pattern) {
    case BetaPattern::five_ones: return "five_ones";
    case BetaPattern::half_pm_half: return "half_pm_half";
    case BetaPattern::sparse_pm1: return "sparse_pm1";
    case BetaPattern::custom: return "custom";
  }
  return "custom";
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::string_view label, std::uint64_t index) {
  return splitmix64(splitmix64(base ^ fnv1a(label)) + splitmix64(index));
}

VariateSampler::VariateSampler(const FeatureDist& dist)
    : dist_(dist), chi2_(dist.kind == FeatureDist::Kind::student_t ? dist.nu : 1.0) {
  dist.validate();
}

double VariateSampler::operator()(Rng& rng) {
  if (dist_.kind == FeatureDist::Kind::gaussian_std) return normal_(rng);
  // Gaussian over sqrt(chi-square / nu).
  const double z = normal_(rng);
  return z / std::sqrt(chi2_(rng) / dist_.nu);
}

Matrix<double> gen_features(Eigen::Index n, Eigen::Index d, const FeatureDist& dist, std::uint64_t seed) {
  if (n < 1 || d < 1) fail(ErrorKind::invalid_parameter, "gen_features needs n >= 1 and d >= 1");
  VariateSampler sample(dist);
  Rng rng(seed);
  Matrix<double> X(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) X(i, j) = sample(rng);
  return X;
}

namespace {

void check_design(const Matrix<double>& X, const Vector<double>& beta_star) {
  if (X.cols() != beta_star.size()) fail(ErrorKind::shape, "beta* dimension does not match feature columns");
  if (!all_finite(X) || !all_finite(beta_star)) fail(ErrorKind::invalid_input, "non-finite design or beta*");
}

}  // namespace

Dataset gen_linear(const Matrix<double>& X, const Vector<double>& beta_star, const CorruptionSpec& noise,
                   std::uint64_t seed) {
  check_design(X, beta_star);
  if (noise.kind == CorruptionKind::label_flip)
    fail(ErrorKind::invalid_parameter, "label flipping does not apply to linear responses");
  noise.validate();
  Dataset data;
  data.X = X;
  data.y_clean = X * beta_star;
  data.z = *data.y_clean;
  if (noise.kind == CorruptionKind::additive_noise && noise.target_sd > 0) {
    const double scale = noise.target_sd / noise.noise_dist.stddev();
    VariateSampler sample(noise.noise_dist);
    Rng rng(seed);
    for (Eigen::Index i = 0; i < data.n(); ++i) data.z[i] += scale * sample(rng);
  }
  return data;
}

Dataset gen_logistic(const Matrix<double>& X, const Vector<double>& beta_star, std::uint64_t seed) {
  check_design(X, beta_star);
  const GlmFamily logit = GlmFamily::logistic();
  const Vector<double> eta = X * beta_star;
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Dataset data;
  data.X = X;
  data.z.resize(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) data.z[i] = unif(rng) < logit.b_prime(eta[i]) ? 1.0 : 0.0;
  data.y_clean = data.z;
  return data;
}

Dataset apply_flip_mask(const Dataset& data, const std::vector<bool>& mask) {
  if (static_cast<Eigen::Index>(mask.size()) != data.n()) fail(ErrorKind::shape, "flip mask length mismatch");
  if (!data.has_binary_response()) fail(ErrorKind::invalid_input, "label flipping needs responses in {0, 1}");
  Dataset out = data;
  for (Eigen::Index i = 0; i < data.n(); ++i)
    if (mask[static_cast<std::size_t>(i)]) out.z[i] = 1.0 - data.z[i];
  out.flip_mask = mask;
  return out;
}

Dataset flip_labels(const Dataset& data, double p, std::uint64_t seed) {
  if (!(p >= 0 && p < 0.5)) fail(ErrorKind::invalid_parameter, "flip probability must lie in [0, 0.5)");
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<bool> mask(static_cast<std::size_t>(data.n()));
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = unif(rng) < p;
  Dataset out = apply_flip_mask(data, mask);
  if (!out.y_clean) out.y_clean = data.z;
  return out;
}

Vector<double> make_beta(Eigen::Index d, BetaPattern pattern, const std::vector<double>& custom) {
  auto need = [&](Eigen::Index min_d) {
    if (d < min_d)
      fail(ErrorKind::invalid_parameter, std::string("pattern ") + to_string(pattern) + " needs d >= " +
                                             std::to_string(min_d) + ", got " + std::to_string(d));
  };
  Vector<double> beta = Vector<double>::Zero(std::max<Eigen::Index>(d, 0));
  switch (pattern) {
    case BetaPattern::five_ones:
      need(5);
      beta.head(5).setOnes();
      break;
    case BetaPattern::half_pm_half:
      need(2);
      if (d % 2 != 0) fail(ErrorKind::invalid_parameter, "pattern half_pm_half needs an even d");
      beta.head(d / 2).setConstant(0.5);
      beta.tail(d / 2).setConstant(-0.5);
      break;
    case BetaPattern::sparse_pm1:
      need(3);
      beta.head(3) << 1, 1, -1;
      break;
    case BetaPattern::custom:
      if (static_cast<Eigen::Index>(custom.size()) != d)
        fail(ErrorKind::invalid_parameter, "custom beta has " + std::to_string(custom.size()) +
                                               " entries, expected " + std::to_string(d));
      for (Eigen::Index j = 0; j < d; ++j) beta[j] = custom[static_cast<std::size_t>(j)];
      break;
  }
  return beta;
}

}  // namespace rglm
