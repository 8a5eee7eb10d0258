#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "entprof/error.hpp"
#include "entprof/matrix.hpp"

namespace entprof {

/// Per-column standardization fitted on a training group. Zero-variance
/// columns keep std = 1 so they map to 0 rather than NaN.
struct ZScaler {
  std::vector<double> mean;
  std::vector<double> std;

  bool operator==(const ZScaler&) const = default;
};

inline ZScaler fit_zscaler(const Matrix& x) {
  if (x.rows() < 2) fail(ErrorCode::kTooFewRows, "z-scaling needs at least 2 rows");
  ZScaler s;
  s.mean.assign(x.cols(), 0.0);
  s.std.assign(x.cols(), 0.0);
  const auto n = static_cast<double>(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) s.mean[c] += x(r, c);
  }
  for (auto& m : s.mean) m /= n;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) {
      double d = x(r, c) - s.mean[c];
      s.std[c] += d * d;
    }
  }
  for (std::size_t c = 0; c < x.cols(); ++c) {
    double sd = std::sqrt(s.std[c] / n);
    // Treat variance that is pure rounding noise as zero.
    bool flat = !(sd > 1e-12 * std::max(1.0, std::abs(s.mean[c])));
    s.std[c] = flat ? 1.0 : sd;
  }
  // Exactly constant columns center on their value so they map to exact 0.
  for (std::size_t c = 0; c < x.cols(); ++c) {
    bool constant = true;
    for (std::size_t r = 1; r < x.rows() && constant; ++r) constant = x(r, c) == x(0, c);
    if (constant) s.mean[c] = x(0, c);
  }
  return s;
}

inline void apply_zscaler_inplace(const ZScaler& s, std::span<double> row) {
  for (std::size_t c = 0; c < row.size(); ++c) row[c] = (row[c] - s.mean[c]) / s.std[c];
}

inline Matrix apply_zscaler(const ZScaler& s, const Matrix& x) {
  if (x.cols() != s.mean.size()) fail(ErrorCode::kDimensionMismatch, "scaler width differs from input");
  Matrix out = x;
  for (std::size_t r = 0; r < out.rows(); ++r) apply_zscaler_inplace(s, out.row(r));
  return out;
}

}  // namespace entprof
