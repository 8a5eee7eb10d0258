#pragma once

// Entropy-profile summary of a trajectory: the fixed 11-statistic vector
// used as classifier input.

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "entprof/error.hpp"
#include "entprof/trace.hpp"

namespace entprof {

inline constexpr std::size_t kNumFeatures = 11;

enum Feature : std::size_t {
  kMax = 0,
  kMean,
  kStd,
  kQ10,
  kQ25,
  kQ50,
  kQ75,
  kQ90,
  kSkew,
  kKurt,
  kSea,
};

inline constexpr std::array<std::string_view, kNumFeatures> kFeatureNames = {
    "h_max", "h_mean", "h_std", "h_q10", "h_q25", "h_q50",
    "h_q75", "h_q90", "h_skew", "h_kurt", "h_sea"};

// Bumped whenever kFeatureNames or any statistic's definition changes.
inline constexpr int kFeatureVersion = 1;

struct EntropyProfile {
  std::array<double, kNumFeatures> values{};

  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
  bool operator==(const EntropyProfile&) const = default;
};

/// Linear interpolation between order statistics at rank (n-1)*q.
inline double quantile(std::span<const double> values, double q) {
  if (values.empty()) fail(ErrorCode::kEmptyInput, "quantile of empty sequence");
  if (!(q >= 0.0 && q <= 1.0)) fail(ErrorCode::kQOutOfRange, "q=" + std::to_string(q));
  std::vector<double> v(values.begin(), values.end());
  double pos = static_cast<double>(v.size() - 1) * q;
  auto lo = static_cast<std::size_t>(std::floor(pos));
  double frac = pos - static_cast<double>(lo);
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(lo), v.end());
  double a = v[lo];
  if (frac == 0.0 || lo + 1 >= v.size()) return a;
  double b = *std::min_element(v.begin() + static_cast<std::ptrdiff_t>(lo) + 1, v.end());
  return a + frac * (b - a);
}

namespace detail {

// Quantiles for an already sorted sequence.
inline double sorted_quantile(const std::vector<double>& sorted, double q) {
  double pos = static_cast<double>(sorted.size() - 1) * q;
  auto lo = static_cast<std::size_t>(std::floor(pos));
  double frac = pos - static_cast<double>(lo);
  if (frac == 0.0 || lo + 1 >= sorted.size()) return sorted[lo];
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace detail

/// Population moments; skew and kurtosis are the biased g1 and excess g2.
/// Shapeless inputs (zero variance, or too short for the moment) get 0.
inline EntropyProfile summarize(std::span<const double> trajectory) {
  if (trajectory.empty()) fail(ErrorCode::kEmptyTrajectory, "cannot summarize an empty trajectory");
  const auto n = static_cast<double>(trajectory.size());

  std::vector<double> sorted(trajectory.begin(), trajectory.end());
  std::sort(sorted.begin(), sorted.end());

  double sum = 0.0;
  for (double x : trajectory) sum += x;
  double mean = sum / n;

  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double x : trajectory) {
    double d = x - mean;
    double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;

  // Rounding in the mean leaves ~1e-32 variance on constant inputs.
  double scale = std::max(std::abs(sorted.front()), std::abs(sorted.back()));
  bool flat = m2 <= 1e-24 * std::max(1.0, scale * scale);

  EntropyProfile p;
  p[kMax] = sorted.back();
  p[kMean] = mean;
  p[kStd] = flat ? 0.0 : std::sqrt(m2);
  p[kQ10] = detail::sorted_quantile(sorted, 0.10);
  p[kQ25] = detail::sorted_quantile(sorted, 0.25);
  p[kQ50] = detail::sorted_quantile(sorted, 0.50);
  p[kQ75] = detail::sorted_quantile(sorted, 0.75);
  p[kQ90] = detail::sorted_quantile(sorted, 0.90);
  p[kSkew] = (flat || trajectory.size() < 3) ? 0.0 : m3 / std::pow(m2, 1.5);
  p[kKurt] = (flat || trajectory.size() < 4) ? 0.0 : m4 / (m2 * m2) - 3.0;
  p[kSea] = sum;
  return p;
}

struct FeatureSubset {
  std::string name;
  std::vector<std::size_t> indices;  // ascending, into kFeatureNames

  bool operator==(const FeatureSubset&) const = default;
};

inline void validate_subset(const FeatureSubset& s) {
  if (s.indices.empty()) fail(ErrorCode::kInvalidConfig, "feature subset '" + s.name + "' is empty");
  for (std::size_t i = 0; i < s.indices.size(); ++i) {
    if (s.indices[i] >= kNumFeatures) {
      fail(ErrorCode::kInvalidConfig, "feature subset '" + s.name + "' has index out of range");
    }
    if (i > 0 && s.indices[i] <= s.indices[i - 1]) {
      fail(ErrorCode::kInvalidConfig, "feature subset '" + s.name + "' indices must be strictly ascending");
    }
  }
}

inline std::vector<FeatureSubset> named_subsets() {
  return {
      {"full11", {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10}},
      {"max_only", {kMax}},
      {"sea_only", {kSea}},
      {"top2", {kMax, kSea}},
      {"baselines3", {kMax, kMean, kSea}},
  };
}

inline FeatureSubset subset_by_name(std::string_view name) {
  for (auto& s : named_subsets()) {
    if (s.name == name) return s;
  }
  fail(ErrorCode::kInvalidConfig, "unknown feature subset '" + std::string(name) + "'");
}

}  // namespace entprof
