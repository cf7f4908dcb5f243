#pragma once

#include <cassert>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "rglm/core.hpp"
#include "rglm/dataset.hpp"
#include "rglm/glm.hpp"

namespace rglm {

struct SolverOpts {
  int max_iters = 10000;
  double grad_tol = 1e-8;
  double step_init = 1.0;
  double backtrack_factor = 0.5;
  double backtrack_c = 1e-4;

  void validate() const {
    if (max_iters < 1) fail(ErrorKind::invalid_parameter, "max_iters must be positive");
    if (!(grad_tol > 0)) fail(ErrorKind::invalid_parameter, "grad_tol must be positive");
    if (!(step_init > 0)) fail(ErrorKind::invalid_parameter, "step_init must be positive");
    if (!(backtrack_factor > 0 && backtrack_factor < 1))
      fail(ErrorKind::invalid_parameter, "backtrack_factor must lie in (0, 1)");
    if (!(backtrack_c > 0 && backtrack_c < 1)) fail(ErrorKind::invalid_parameter, "backtrack_c must lie in (0, 1)");
  }

  friend bool operator==(const SolverOpts&, const SolverOpts&) = default;
};

template <typename Scalar>
struct BasicFitResult {
  Vector<Scalar> beta_hat;
  int iterations = 0;
  bool converged = false;
  Scalar final_residual = 0;
  Scalar objective = 0;
};

using FitResult = BasicFitResult<double>;

/// Thrown when an iterate produces a non-finite objective. Carries the last
/// finite iterate.
template <typename Scalar>
class BasicDivergedError : public Error {
 public:
  BasicDivergedError(const std::string& what, Vector<Scalar> last)
      : Error(ErrorKind::diverged, what), last_iterate_(std::move(last)) {}
  const Vector<Scalar>& last_iterate() const { return last_iterate_; }

 private:
  Vector<Scalar> last_iterate_;
};

using DivergedError = BasicDivergedError<double>;

/// sign(v)·max(|v| - t, 0), the proximal map of t·|.|.
template <typename Scalar>
Scalar soft_threshold(Scalar v, Scalar t) {
  const Scalar mag = std::abs(v) - t;
  return mag > Scalar(0) ? sign(v) * mag : Scalar(0);
}

template <typename Derived>
Vector<typename Derived::Scalar> soft_threshold(const Eigen::MatrixBase<Derived>& v, typename Derived::Scalar t) {
  using Scalar = typename Derived::Scalar;
  return v.unaryExpr([t](Scalar x) { return soft_threshold(x, t); });
}

/// Sup-norm violation of the l1 optimality conditions given the smooth
/// gradient g at beta.
template <typename Scalar>
Scalar kkt_residual_from_gradient(const Vector<Scalar>& beta, const Vector<Scalar>& g, Scalar lambda) {
  Scalar worst = 0;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    const Scalar r = beta[j] != Scalar(0) ? std::abs(g[j] + lambda * sign(beta[j]))
                                          : std::max(std::abs(g[j]) - lambda, Scalar(0));
    worst = std::max(worst, r);
  }
  return worst;
}

template <typename Scalar, typename Derived>
Scalar kkt_residual(const GlmFamily& family, const BasicDataset<Scalar>& data, const Eigen::MatrixBase<Derived>& beta,
                    Scalar lambda, std::optional<double> weighted_p = std::nullopt) {
  const Vector<Scalar> b = beta;
  const Vector<Scalar> g = GlmLoss<Scalar>(family, data, weighted_p).gradient(b);
  return kkt_residual_from_gradient(b, g, lambda);
}

namespace detail {

/// X·beta touching only the nonzero coefficients when beta is sparse.
template <typename Scalar>
Vector<Scalar> predictor(const Matrix<Scalar>& X, const Vector<Scalar>& beta) {
  const Eigen::Index nnz = (beta.array() != Scalar(0)).count();
  if (3 * nnz >= beta.size()) return X * beta;
  Vector<Scalar> eta = Vector<Scalar>::Zero(X.rows());
  for (Eigen::Index j = 0; j < beta.size(); ++j)
    if (beta[j] != Scalar(0)) eta.noalias() += beta[j] * X.col(j);
  return eta;
}

}  // namespace detail

/// Damped Newton with Armijo backtracking from beta = 0. Falls back to the
/// negative gradient when the Hessian is singular or the Newton direction is
/// not a descent direction.
template <typename Scalar>
BasicFitResult<Scalar> fit_mle(const GlmFamily& family, const BasicDataset<Scalar>& data, const SolverOpts& opts,
                               std::optional<double> weighted_p = std::nullopt) {
  opts.validate();
  if (data.n() < 1 || data.d() < 1) fail(ErrorKind::shape, "fit_mle needs n >= 1 and d >= 1");
  const GlmLoss<Scalar> loss(family, data, weighted_p);
  const Eigen::Index d = data.d();

  BasicFitResult<Scalar> res;
  Vector<Scalar> beta = Vector<Scalar>::Zero(d);
  Vector<Scalar> eta = data.X * beta;
  Scalar f = loss.value_at_eta(eta);
  Vector<Scalar> g = loss.gradient_at_eta(eta);
  Scalar gnorm = g.template lpNorm<Eigen::Infinity>();
  // Slack for accepting steps whose decrease is lost in rounding.
  const auto round_slack = [](Scalar v) { return Scalar(1e-13) * std::max(Scalar(1), std::abs(v)); };

  int it = 0;
  while (gnorm > opts.grad_tol && it < opts.max_iters) {
    ++it;
    const Matrix<Scalar> H = loss.hessian(beta);
    Vector<Scalar> dir;
    bool newton = false;
    Eigen::LDLT<Matrix<Scalar>> ldlt(H);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
      dir = -ldlt.solve(g);
      const Scalar slope = g.dot(dir);
      newton = all_finite(dir) && slope < Scalar(0) && (H * dir + g).norm() <= Scalar(1e-6) * (g.norm() + 1);
    }
    if (!newton) dir = -g;
    const Scalar slope = g.dot(dir);

    Scalar step = static_cast<Scalar>(opts.step_init);
    bool accepted = false;
    Vector<Scalar> beta_new, eta_new;
    Scalar f_new = f;
    for (int bt = 0; bt < 60; ++bt) {
      beta_new = beta + step * dir;
      eta_new = data.X * beta_new;
      f_new = loss.value_at_eta(eta_new);
      if (!std::isfinite(static_cast<double>(f_new)))
        throw BasicDivergedError<Scalar>("non-finite objective at iteration " + std::to_string(it), beta);
      if (f_new <= f + static_cast<Scalar>(opts.backtrack_c) * step * slope) {
        accepted = true;
        break;
      }
      step *= static_cast<Scalar>(opts.backtrack_factor);
    }
    if (!accepted) {
      // Sufficient decrease can be unreachable at rounding level; accept a full
      // step that keeps the objective flat and shrinks the gradient.
      beta_new = beta + static_cast<Scalar>(opts.step_init) * dir;
      eta_new = data.X * beta_new;
      f_new = loss.value_at_eta(eta_new);
      const Vector<Scalar> g_try = loss.gradient_at_eta(eta_new);
      if (!(f_new <= f + round_slack(f)) || !(g_try.template lpNorm<Eigen::Infinity>() < gnorm)) break;
    }
    assert(f_new <= f + round_slack(f));
    beta = std::move(beta_new);
    eta = std::move(eta_new);
    f = f_new;
    g = loss.gradient_at_eta(eta);
    gnorm = g.template lpNorm<Eigen::Infinity>();
    if (!all_finite(beta) || !std::isfinite(static_cast<double>(gnorm)))
      throw BasicDivergedError<Scalar>("non-finite iterate at iteration " + std::to_string(it), beta);
  }

  res.beta_hat = std::move(beta);
  res.iterations = it;
  res.final_residual = gnorm;
  res.converged = gnorm <= opts.grad_tol;
  res.objective = f;
  return res;
}

/// Accelerated proximal gradient for loss(beta) + lambda·||beta||_1 with
/// backtracking on the local Lipschitz estimate. Momentum is reset whenever
/// the composite objective would increase, so accepted iterates are
/// monotone. `warm_start` replaces the default start at zero.
template <typename Scalar>
BasicFitResult<Scalar> fit_l1(const GlmFamily& family, const BasicDataset<Scalar>& data, Scalar lambda,
                              const SolverOpts& opts, std::optional<double> weighted_p = std::nullopt,
                              const Vector<Scalar>* warm_start = nullptr) {
  opts.validate();
  if (!(lambda > Scalar(0))) fail(ErrorKind::invalid_parameter, "lambda must be positive");
  if (data.n() < 1 || data.d() < 1) fail(ErrorKind::shape, "fit_l1 needs n >= 1 and d >= 1");
  const GlmLoss<Scalar> loss(family, data, weighted_p);
  const Eigen::Index d = data.d();

  Vector<Scalar> beta = Vector<Scalar>::Zero(d);
  if (warm_start) {
    if (warm_start->size() != d) fail(ErrorKind::shape, "warm start has wrong dimension");
    beta = *warm_start;
  }
  auto composite = [&](Scalar smooth, const Vector<Scalar>& b) { return smooth + lambda * b.template lpNorm<1>(); };

  Vector<Scalar> eta = detail::predictor(data.X, beta);
  Scalar f_smooth = loss.value_at_eta(eta);
  Scalar F = composite(f_smooth, beta);
  Vector<Scalar> g = loss.gradient_at_eta(eta);
  Scalar resid = kkt_residual_from_gradient(beta, g, lambda);

  // Momentum point y and its cached predictor/gradient.
  Vector<Scalar> y = beta, eta_y = eta, g_y = g;
  Scalar f_y = f_smooth;
  Scalar t_mom = 1;
  Scalar step = static_cast<Scalar>(opts.step_init);
  const auto shrink = static_cast<Scalar>(opts.backtrack_factor);

  int it = 0;
  while (resid > opts.grad_tol && it < opts.max_iters) {
    ++it;
    Vector<Scalar> beta_new, eta_new;
    Scalar f_new = 0;
    // Backtracking: quadratic upper bound of the smooth part at y.
    for (int bt = 0; bt < 100; ++bt) {
      beta_new = soft_threshold(y - step * g_y, step * lambda);
      eta_new = detail::predictor(data.X, beta_new);
      f_new = loss.value_at_eta(eta_new);
      if (!std::isfinite(static_cast<double>(f_new)))
        throw BasicDivergedError<Scalar>("non-finite objective at iteration " + std::to_string(it), beta);
      const Vector<Scalar> diff = beta_new - y;
      const Scalar bound = f_y + g_y.dot(diff) + diff.squaredNorm() / (Scalar(2) * step);
      if (f_new <= bound + Scalar(1e-14) * std::max(Scalar(1), std::abs(f_y))) break;
      step *= shrink;
    }
    const Scalar F_new = composite(f_new, beta_new);
    if (F_new > F && t_mom > Scalar(1)) {
      // Restart from the current iterate without momentum.
      y = beta;
      eta_y = eta;
      g_y = g;
      f_y = f_smooth;
      t_mom = 1;
      --it;
      continue;
    }
    if (F_new > F + Scalar(1e-13) * std::max(Scalar(1), std::abs(F))) {
      // Rounding-level stall of a plain proximal step.
      break;
    }
    const Scalar t_next = (Scalar(1) + std::sqrt(Scalar(1) + Scalar(4) * t_mom * t_mom)) / Scalar(2);
    const Vector<Scalar> g_new = loss.gradient_at_eta(eta_new);
    const Scalar mom = (t_mom - Scalar(1)) / t_next;
    y = beta_new + mom * (beta_new - beta);
    if (mom == Scalar(0)) {
      eta_y = eta_new;
      g_y = g_new;
      f_y = f_new;
    } else {
      eta_y = eta_new + mom * (eta_new - eta);
      f_y = loss.value_at_eta(eta_y);
      // The linear-family gradient is affine in beta, so it extrapolates exactly.
      if (loss.family().kind == FamilyKind::linear)
        g_y = g_new + mom * (g_new - g);
      else
        g_y = loss.gradient_at_eta(eta_y);
    }
    t_mom = t_next;
    beta = std::move(beta_new);
    eta = std::move(eta_new);
    f_smooth = f_new;
    F = F_new;
    g = g_new;
    resid = kkt_residual_from_gradient(beta, g, lambda);
  }

  BasicFitResult<Scalar> res;
  res.beta_hat = std::move(beta);
  res.iterations = it;
  res.final_residual = resid;
  res.converged = resid <= opts.grad_tol;
  res.objective = F;
  return res;
}

/// lambda = 2·multiplier·sqrt(log d / n).
inline double default_lambda(double n, double d, double multiplier = 1.0) {
  if (!(n >= 1) || !(d >= 2)) fail(ErrorKind::invalid_parameter, "lambda schedule needs n >= 1 and d >= 2");
  if (!(multiplier > 0)) fail(ErrorKind::invalid_parameter, "lambda multiplier must be positive");
  return 2.0 * multiplier * std::sqrt(std::log(d) / n);
}

}  // namespace rglm
