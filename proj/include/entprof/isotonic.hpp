#pragma once

// Isotonic (monotone non-decreasing) least-squares fit by
// pool-adjacent-violators.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "entprof/error.hpp"

namespace entprof {

/// Piecewise-linear monotone map. Each pooled block contributes its lowest
/// and highest score as breakpoints carrying the block mean, so the map is
/// flat across a block and interpolates linearly between blocks. Inputs
/// outside the breakpoint range clamp to the boundary values.
struct IsotonicMap {
  std::vector<double> breakpoints;  // strictly increasing
  std::vector<double> values;       // non-decreasing

  double operator()(double score) const {
    if (breakpoints.empty()) return 0.5;
    if (score <= breakpoints.front()) return values.front();
    if (score >= breakpoints.back()) return values.back();
    auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), score);
    auto hi = static_cast<std::size_t>(it - breakpoints.begin());
    auto lo = hi - 1;
    double t = (score - breakpoints[lo]) / (breakpoints[hi] - breakpoints[lo]);
    return values[lo] + t * (values[hi] - values[lo]);
  }

  bool operator==(const IsotonicMap&) const = default;
};

struct IsotonicFit {
  IsotonicMap map;
  std::vector<double> fitted;  // per input, in input order
};

/// Weighted PAVA. Inputs need not be sorted; tied scores are merged into a
/// single point with summed weight before pooling.
inline IsotonicFit pava(std::span<const double> scores, std::span<const double> targets,
                        std::span<const double> weights = {}) {
  const std::size_t n = scores.size();
  if (n == 0) fail(ErrorCode::kEmptyInput, "isotonic fit of empty input");
  if (targets.size() != n || (!weights.empty() && weights.size() != n)) {
    fail(ErrorCode::kDimensionMismatch, "scores, targets and weights must have equal length");
  }
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w)) fail(ErrorCode::kDegenerateInput, "isotonic weights must be positive");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  struct Block {
    double sum_wy;
    double sum_w;
    double lo;  // lowest score in block
    double hi;  // highest score in block
    double mean() const { return sum_wy / sum_w; }
  };
  std::vector<Block> blocks;
  blocks.reserve(n);
  for (std::size_t k = 0; k < n;) {
    // One point per distinct score.
    double s = scores[order[k]];
    Block b{0.0, 0.0, s, s};
    for (; k < n && scores[order[k]] == s; ++k) {
      double w = weights.empty() ? 1.0 : weights[order[k]];
      b.sum_wy += w * targets[order[k]];
      b.sum_w += w;
    }
    blocks.push_back(b);
    // Pool while the previous block is not strictly below the last one.
    while (blocks.size() > 1 && blocks[blocks.size() - 2].mean() >= blocks.back().mean()) {
      Block top = blocks.back();
      blocks.pop_back();
      Block& prev = blocks.back();
      prev.sum_wy += top.sum_wy;
      prev.sum_w += top.sum_w;
      prev.hi = top.hi;
    }
  }

  IsotonicFit fit;
  for (const auto& b : blocks) {
    double v = b.mean();
    fit.map.breakpoints.push_back(b.lo);
    fit.map.values.push_back(v);
    if (b.hi > b.lo) {
      fit.map.breakpoints.push_back(b.hi);
      fit.map.values.push_back(v);
    }
  }
  fit.fitted.resize(n);
  for (std::size_t i = 0; i < n; ++i) fit.fitted[i] = fit.map(scores[i]);
  return fit;
}

}  // namespace entprof
