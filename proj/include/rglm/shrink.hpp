#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "rglm/core.hpp"
#include "rglm/dataset.hpp"

namespace rglm {

enum class FeatureMode { none, norm_shrink_l4, norm_shrink_l2, elementwise_clip };
enum class ResponseMode { none, clip };
enum class ShrinkNorm { l2, l4 };
enum class TauScale { log_n, log_d };

/// Which preprocessor to run on features and responses, with thresholds.
struct ShrinkSpec {
  FeatureMode feature_mode = FeatureMode::none;
  double tau1 = std::numeric_limits<double>::infinity();
  ResponseMode response_mode = ResponseMode::none;
  double tau2 = std::numeric_limits<double>::infinity();
  bool preserve_sign = true;

  void validate() const {
    if (feature_mode != FeatureMode::none && !(tau1 > 0))
      fail(ErrorKind::invalid_parameter, "tau1 must be positive");
    if (response_mode != ResponseMode::none && !(tau2 > 0))
      fail(ErrorKind::invalid_parameter, "tau2 must be positive");
  }

  friend bool operator==(const ShrinkSpec&, const ShrinkSpec&) = default;
};

namespace detail {

inline void check_tau(double tau) {
  if (!(tau > 0)) fail(ErrorKind::invalid_parameter, "threshold must be positive, got " + std::to_string(tau));
}

// Scaled so that huge entries do not overflow the fourth power.
template <typename Derived>
typename Derived::Scalar vector_norm(const Eigen::MatrixBase<Derived>& x, ShrinkNorm norm) {
  using Scalar = typename Derived::Scalar;
  const Scalar scale = x.cwiseAbs().maxCoeff();
  if (scale == Scalar(0)) return Scalar(0);
  if (norm == ShrinkNorm::l2) return x.norm();
  const Scalar s4 = (x.array() / scale).square().square().sum();
  return scale * std::sqrt(std::sqrt(s4));
}

}  // namespace detail

template <typename Derived>
typename Derived::Scalar lp_norm(const Eigen::MatrixBase<Derived>& x, ShrinkNorm norm) {
  return detail::vector_norm(x, norm);
}

/// Rescales x so that its l2 or l4 norm is at most tau, keeping direction.
/// Vectors already inside the ball (up to a few ulps) come back unchanged,
/// which makes the map exactly idempotent in floating point.
template <typename Derived>
Vector<typename Derived::Scalar> norm_shrink(const Eigen::MatrixBase<Derived>& x,
                                             typename Derived::Scalar tau, ShrinkNorm norm) {
  using Scalar = typename Derived::Scalar;
  detail::check_tau(static_cast<double>(tau));
  if (!all_finite(x)) fail(ErrorKind::invalid_input, "non-finite feature entry");
  const Scalar len = detail::vector_norm(x, norm);
  const Scalar slack = Scalar(1) + Scalar(8) * std::numeric_limits<Scalar>::epsilon();
  if (len <= tau * slack || !std::isfinite(static_cast<double>(tau))) return x;
  return x * (tau / len);
}

template <typename Derived>
Vector<typename Derived::Scalar> elementwise_clip(const Eigen::MatrixBase<Derived>& x,
                                                  typename Derived::Scalar tau) {
  detail::check_tau(static_cast<double>(tau));
  if (!all_finite(x)) fail(ErrorKind::invalid_input, "non-finite feature entry");
  return x.cwiseMax(-tau).cwiseMin(tau);
}

/// sign(z)·min(|z|, tau), or min(|z|, tau) when the sign is dropped.
template <typename Scalar>
Scalar clip_response(Scalar z, Scalar tau, bool preserve_sign = true) {
  detail::check_tau(static_cast<double>(tau));
  if (!std::isfinite(static_cast<double>(z))) fail(ErrorKind::invalid_input, "non-finite response");
  const Scalar mag = std::min(std::abs(z), tau);
  return preserve_sign ? sign(z) * mag : mag;
}

/// multiplier·(n / log n)^(1/4) or multiplier·(n / log d)^(1/4).
inline double default_tau(double n, TauScale scale, double multiplier = 1.0, double d = 0.0) {
  if (!(n >= 2)) fail(ErrorKind::invalid_parameter, "threshold schedule needs n >= 2");
  if (!(multiplier > 0)) fail(ErrorKind::invalid_parameter, "multiplier must be positive");
  double denom = std::log(n);
  if (scale == TauScale::log_d) {
    if (!(d >= 2)) fail(ErrorKind::invalid_parameter, "threshold schedule needs d >= 2");
    denom = std::log(d);
  }
  return multiplier * std::pow(n / denom, 0.25);
}

/// Row-wise transform of features and responses. Scoring fields pass through.
template <typename Scalar>
BasicDataset<Scalar> apply_shrink(const BasicDataset<Scalar>& data, const ShrinkSpec& spec) {
  spec.validate();
  BasicDataset<Scalar> out = data;
  const auto tau1 = static_cast<Scalar>(spec.tau1);
  const auto tau2 = static_cast<Scalar>(spec.tau2);
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    try {
      switch (spec.feature_mode) {
        case FeatureMode::none: break;
        case FeatureMode::norm_shrink_l4:
          out.X.row(i) = norm_shrink(data.X.row(i).transpose(), tau1, ShrinkNorm::l4).transpose();
          break;
        case FeatureMode::norm_shrink_l2:
          out.X.row(i) = norm_shrink(data.X.row(i).transpose(), tau1, ShrinkNorm::l2).transpose();
          break;
        case FeatureMode::elementwise_clip:
          out.X.row(i) = elementwise_clip(data.X.row(i).transpose(), tau1).transpose();
          break;
      }
      if (spec.response_mode == ResponseMode::clip)
        out.z[i] = clip_response(data.z[i], tau2, spec.preserve_sign);
    } catch (const Error& e) {
      fail(e.kind(), "row " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace rglm
