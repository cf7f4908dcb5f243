#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "rglm/core.hpp"
#include "rglm/dataset.hpp"

namespace rglm {

enum class FamilyKind { linear, logistic };

/// Canonical-link GLM family given by its cumulant function b and two
/// derivatives. The dispersion is kept at 1; it does not move the argmin.
struct GlmFamily {
  FamilyKind kind = FamilyKind::linear;
  double dispersion = 1.0;

  static GlmFamily linear() { return {FamilyKind::linear, 1.0}; }
  static GlmFamily logistic() { return {FamilyKind::logistic, 1.0}; }

  template <typename Scalar>
  Scalar b(Scalar eta) const {
    if (kind == FamilyKind::linear) return Scalar(0.5) * eta * eta;
    // log(1 + e^eta) without overflow
    return std::max(eta, Scalar(0)) + std::log1p(std::exp(-std::abs(eta)));
  }

  template <typename Scalar>
  Scalar b_prime(Scalar eta) const {
    if (kind == FamilyKind::linear) return eta;
    if (eta >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-eta));
    const Scalar e = std::exp(eta);
    return e / (Scalar(1) + e);
  }

  template <typename Scalar>
  Scalar b_double_prime(Scalar eta) const {
    if (kind == FamilyKind::linear) return Scalar(1);
    const Scalar mu = b_prime(eta);
    return mu * (Scalar(1) - mu);
  }

  friend bool operator==(const GlmFamily&, const GlmFamily&) = default;
};

inline const char* to_string(FamilyKind kind) {
  return kind == FamilyKind::linear ? "linear" : "logistic";
}

namespace detail {

template <typename Scalar, typename Derived>
void check_beta(const BasicDataset<Scalar>& data, const Eigen::MatrixBase<Derived>& beta) {
  if (beta.size() != data.d())
    fail(ErrorKind::shape, "beta has dimension " + std::to_string(beta.size()) + ", data has d = " +
                               std::to_string(data.d()));
  if (data.z.size() != data.n()) fail(ErrorKind::shape, "response length does not match rows");
}

inline void check_flip_p(double p) {
  if (!(p >= 0.0 && p < 0.5))
    fail(ErrorKind::invalid_parameter, "flip probability must lie in [0, 0.5), got " + std::to_string(p));
}

template <typename Scalar>
void check_binary(const BasicDataset<Scalar>& data) {
  if (!data.has_binary_response()) fail(ErrorKind::invalid_input, "weighted loss needs responses in {0, 1}");
}

/// Response that turns the noisy-label weighted loss into a plain GLM loss:
/// ((1-p)·l(z) - p·l(1-z)) / (1-2p) = b(eta) - eta·(z - p)/(1 - 2p).
template <typename Scalar>
Vector<Scalar> weighted_response(const Vector<Scalar>& z, double p) {
  const auto ps = static_cast<Scalar>(p);
  return (z.array() - ps) / (Scalar(1) - Scalar(2) * ps);
}

}  // namespace detail

/// Per-sample negative log-likelihood -z·eta + b(eta).
template <typename Scalar>
Scalar sample_loss(const GlmFamily& family, Scalar eta, Scalar z) {
  return -z * eta + family.b(eta);
}

/// Per-sample noisy-label weighted loss, evaluated literally.
template <typename Scalar>
Scalar sample_weighted_loss(Scalar eta, Scalar z, double p) {
  const GlmFamily logit = GlmFamily::logistic();
  const auto ps = static_cast<Scalar>(p);
  return ((Scalar(1) - ps) * sample_loss(logit, eta, z) - ps * sample_loss(logit, eta, Scalar(1) - z)) /
         (Scalar(1) - Scalar(2) * ps);
}

template <typename Scalar, typename Derived>
Scalar nll(const GlmFamily& family, const BasicDataset<Scalar>& data, const Eigen::MatrixBase<Derived>& beta) {
  detail::check_beta(data, beta);
  const Vector<Scalar> eta = data.X * beta;
  const auto b = eta.unaryExpr([&](Scalar e) { return family.b(e); });
  return (b.array() - data.z.array() * eta.array()).sum() / static_cast<Scalar>(data.n());
}

template <typename Scalar, typename Derived>
Vector<Scalar> grad_nll(const GlmFamily& family, const BasicDataset<Scalar>& data,
                        const Eigen::MatrixBase<Derived>& beta) {
  detail::check_beta(data, beta);
  const Vector<Scalar> eta = data.X * beta;
  const Vector<Scalar> resid = eta.unaryExpr([&](Scalar e) { return family.b_prime(e); }) - data.z;
  return data.X.transpose() * resid / static_cast<Scalar>(data.n());
}

template <typename Scalar, typename Derived>
Matrix<Scalar> hessian_nll(const GlmFamily& family, const BasicDataset<Scalar>& data,
                           const Eigen::MatrixBase<Derived>& beta) {
  detail::check_beta(data, beta);
  const Vector<Scalar> eta = data.X * beta;
  const Vector<Scalar> w = eta.unaryExpr([&](Scalar e) { return family.b_double_prime(e); });
  const Matrix<Scalar> Xw = data.X.array().colwise() * w.array().sqrt();
  Matrix<Scalar> H = Matrix<Scalar>::Zero(data.d(), data.d());
  H.template selfadjointView<Eigen::Lower>().rankUpdate(Xw.transpose());
  H.template triangularView<Eigen::StrictlyUpper>() = H.transpose();
  return H / static_cast<Scalar>(data.n());
}

template <typename Scalar, typename Derived>
Scalar weighted_nll(const BasicDataset<Scalar>& data, const Eigen::MatrixBase<Derived>& beta, double p) {
  detail::check_flip_p(p);
  detail::check_beta(data, beta);
  detail::check_binary(data);
  const Vector<Scalar> eta = data.X * beta;
  Scalar total = 0;
  for (Eigen::Index i = 0; i < data.n(); ++i) total += sample_weighted_loss(eta[i], data.z[i], p);
  return total / static_cast<Scalar>(data.n());
}

template <typename Scalar, typename Derived>
Vector<Scalar> weighted_grad(const BasicDataset<Scalar>& data, const Eigen::MatrixBase<Derived>& beta, double p) {
  detail::check_flip_p(p);
  detail::check_beta(data, beta);
  detail::check_binary(data);
  const GlmFamily logit = GlmFamily::logistic();
  const Vector<Scalar> eta = data.X * beta;
  const Vector<Scalar> resid =
      eta.unaryExpr([&](Scalar e) { return logit.b_prime(e); }) - detail::weighted_response(data.z, p);
  return data.X.transpose() * resid / static_cast<Scalar>(data.n());
}

/// The weights do not touch the curvature: equal to the logistic Hessian.
template <typename Scalar, typename Derived>
Matrix<Scalar> weighted_hessian(const BasicDataset<Scalar>& data, const Eigen::MatrixBase<Derived>& beta, double p) {
  detail::check_flip_p(p);
  detail::check_binary(data);
  return hessian_nll(GlmFamily::logistic(), data, beta);
}

/// f(beta) - f(beta*) - grad f(beta*)'(beta - beta*) for the plain or weighted
/// loss. The response terms are linear in beta and cancel exactly, so the
/// remainder is accumulated per sample from b alone.
template <typename Scalar, typename D1, typename D2>
Scalar taylor_remainder(const GlmFamily& family, const BasicDataset<Scalar>& data,
                        const Eigen::MatrixBase<D1>& beta, const Eigen::MatrixBase<D2>& beta_star,
                        std::optional<double> weighted_p = std::nullopt) {
  detail::check_beta(data, beta);
  detail::check_beta(data, beta_star);
  GlmFamily fam = family;
  if (weighted_p) {
    detail::check_flip_p(*weighted_p);
    detail::check_binary(data);
    fam = GlmFamily::logistic();
  }
  const Vector<Scalar> eta = data.X * beta;
  const Vector<Scalar> eta_star = data.X * beta_star;
  Scalar total = 0;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const Scalar diff = eta[i] - eta_star[i];
    if (fam.kind == FamilyKind::linear) {
      total += Scalar(0.5) * diff * diff;
    } else {
      total += fam.b(eta[i]) - fam.b(eta_star[i]) - fam.b_prime(eta_star[i]) * diff;
    }
  }
  return total / static_cast<Scalar>(data.n());
}

/// Objective used by the solvers: the plain family nll, or the noisy-label
/// weighted logistic loss when a flip probability is set.
template <typename Scalar>
class GlmLoss {
 public:
  GlmLoss(GlmFamily family, const BasicDataset<Scalar>& data, std::optional<double> weighted_p = std::nullopt)
      : family_(weighted_p ? GlmFamily::logistic() : family), data_(data), weighted_p_(weighted_p) {
    if (data.z.size() != data.n()) fail(ErrorKind::shape, "response length does not match rows");
    if (weighted_p) {
      detail::check_flip_p(*weighted_p);
      detail::check_binary(data);
      response_ = detail::weighted_response(data.z, *weighted_p);
    } else {
      response_ = data.z;
    }
  }

  const GlmFamily& family() const { return family_; }
  const BasicDataset<Scalar>& data() const { return data_; }
  std::optional<double> weighted_p() const { return weighted_p_; }
  Eigen::Index dim() const { return data_.d(); }

  /// Loss at a precomputed linear predictor X·beta.
  Scalar value_at_eta(const Vector<Scalar>& eta) const {
    Scalar total = 0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) total += family_.b(eta[i]) - response_[i] * eta[i];
    return total / static_cast<Scalar>(data_.n());
  }

  Vector<Scalar> gradient_at_eta(const Vector<Scalar>& eta) const {
    const Vector<Scalar> resid = eta.unaryExpr([&](Scalar e) { return family_.b_prime(e); }) - response_;
    return data_.X.transpose() * resid / static_cast<Scalar>(data_.n());
  }

  Scalar value(const Vector<Scalar>& beta) const {
    detail::check_beta(data_, beta);
    return value_at_eta(data_.X * beta);
  }

  Vector<Scalar> gradient(const Vector<Scalar>& beta) const {
    detail::check_beta(data_, beta);
    return gradient_at_eta(data_.X * beta);
  }

  Matrix<Scalar> hessian(const Vector<Scalar>& beta) const { return hessian_nll(family_, data_, beta); }

 private:
  GlmFamily family_;
  const BasicDataset<Scalar>& data_;
  std::optional<double> weighted_p_;
  Vector<Scalar> response_;
};

}  // namespace rglm
