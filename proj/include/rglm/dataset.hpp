#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "rglm/core.hpp"

namespace rglm {

/// Design matrix and observed responses. The clean responses and the flip
/// record only exist for simulated data and are used for scoring.
template <typename Scalar>
struct BasicDataset {
  Matrix<Scalar> X;
  Vector<Scalar> z;
  std::optional<Vector<Scalar>> y_clean;
  std::optional<std::vector<bool>> flip_mask;

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index d() const { return X.cols(); }

  /// Throws on inconsistent sizes or non-finite entries.
  void validate() const {
    if (X.rows() < 1 || X.cols() < 1) fail(ErrorKind::shape, "dataset must have n >= 1 and d >= 1");
    if (z.size() != X.rows())
      fail(ErrorKind::shape, "response length " + std::to_string(z.size()) +
                                 " does not match " + std::to_string(X.rows()) + " rows");
    if (y_clean && y_clean->size() != X.rows()) fail(ErrorKind::shape, "y_clean length mismatch");
    if (flip_mask && static_cast<Eigen::Index>(flip_mask->size()) != X.rows())
      fail(ErrorKind::shape, "flip_mask length mismatch");
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      if (!all_finite(X.row(i)) || !std::isfinite(z[i]))
        fail(ErrorKind::invalid_input, "non-finite value in row " + std::to_string(i));
    }
  }

  bool has_binary_response() const {
    return (z.array() == Scalar(0) || z.array() == Scalar(1)).all();
  }

  /// Rows selected by index, in the given order.
  BasicDataset subset(const std::vector<Eigen::Index>& rows) const {
    BasicDataset out;
    const auto m = static_cast<Eigen::Index>(rows.size());
    out.X.resize(m, X.cols());
    out.z.resize(m);
    if (y_clean) out.y_clean = Vector<Scalar>(m);
    if (flip_mask) out.flip_mask = std::vector<bool>(rows.size());
    for (Eigen::Index k = 0; k < m; ++k) {
      const auto i = rows[static_cast<std::size_t>(k)];
      out.X.row(k) = X.row(i);
      out.z[k] = z[i];
      if (y_clean) (*out.y_clean)[k] = (*y_clean)[i];
      if (flip_mask) (*out.flip_mask)[static_cast<std::size_t>(k)] = (*flip_mask)[static_cast<std::size_t>(i)];
    }
    return out;
  }
};

using Dataset = BasicDataset<double>;

}  // namespace rglm
