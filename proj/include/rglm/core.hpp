#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace rglm {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Error categories shared by every module. The CLI maps them to exit codes.
enum class ErrorKind {
  invalid_input,
  invalid_parameter,
  shape,
  diverged,
  io,
  usage,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_input: return "invalid input";
    case ErrorKind::invalid_parameter: return "invalid parameter";
    case ErrorKind::shape: return "shape mismatch";
    case ErrorKind::diverged: return "solver diverged";
    case ErrorKind::io: return "i/o error";
    case ErrorKind::usage: return "usage error";
  }
  return "error";
}

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& x) {
  return x.derived().array().isFinite().all();
}

template <typename Scalar>
Scalar sign(Scalar v) {
  return static_cast<Scalar>((Scalar(0) < v) - (v < Scalar(0)));
}

}  // namespace rglm
