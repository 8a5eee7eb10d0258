#pragma once

// White-box uncertainty baselines computed from the same decoding logs:
// Shannon-entropy aggregates, NLL aggregates, LNTP, MTP and perplexity.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "entprof/error.hpp"
#include "entprof/features.hpp"
#include "entprof/trace.hpp"

namespace entprof {

inline constexpr std::size_t kNumBaselines = 9;

inline constexpr std::array<std::string_view, kNumBaselines> kBaselineNames = {
    "se_avg", "se_max", "se_sum", "nll_avg", "nll_max", "nll_sum", "lntp", "mtp", "ppl"};

struct BaselineVector {
  double se_avg = 0.0;
  double se_max = 0.0;
  double se_sum = 0.0;
  double nll_avg = 0.0;
  double nll_max = 0.0;
  double nll_sum = 0.0;
  double lntp = 1.0;
  double mtp = 1.0;
  double ppl = 1.0;

  std::array<double, kNumBaselines> as_array() const {
    return {se_avg, se_max, se_sum, nll_avg, nll_max, nll_sum, lntp, mtp, ppl};
  }
  static BaselineVector from_array(const std::array<double, kNumBaselines>& a) {
    return {a[0], a[1], a[2], a[3], a[4], a[5], a[6], a[7], a[8]};
  }
  bool operator==(const BaselineVector&) const = default;
};

enum class Orientation { kHigherMeansIncorrect, kLowerMeansIncorrect };

inline std::string_view to_string(Orientation o) {
  return o == Orientation::kHigherMeansIncorrect ? "higher_means_incorrect" : "lower_means_incorrect";
}

/// Direction in which a metric signals an incorrect response. Accepts both
/// profile names (h_*) and baseline names; "eas" and "sea" alias se_sum.
inline Orientation orientation_of(std::string_view metric) {
  if (metric == "lntp" || metric == "mtp" || metric == "h_skew" || metric == "h_kurt") {
    return Orientation::kLowerMeansIncorrect;
  }
  return Orientation::kHigherMeansIncorrect;
}

inline std::string canonical_metric_name(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "sea" || s == "eas") return "se_sum";
  return s;
}

inline BaselineVector compute_baselines(const DecodingTrace& trace, const EntropyTrajectory& entropies) {
  if (trace.steps.empty()) fail(ErrorCode::kEmptyTrajectory, "trace '" + trace.instance_id + "' has no steps");
  if (entropies.size() != trace.steps.size()) {
    fail(ErrorCode::kDimensionMismatch, "entropy trajectory length differs from step count");
  }
  const auto n = static_cast<double>(trace.steps.size());
  BaselineVector b;
  double lp_sum = 0.0;
  double lp_min = 0.0;
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    double lp = trace.steps[i].chosen_logprob;
    if (!std::isfinite(lp) || lp > 0.0) {
      fail(ErrorCode::kMissingChosenLogprob, "step " + std::to_string(i));
    }
    lp_sum += lp;
    lp_min = std::min(lp_min, lp);
    b.se_sum += entropies[i];
    b.se_max = std::max(b.se_max, entropies[i]);
  }
  b.se_avg = b.se_sum / n;
  b.nll_sum = -lp_sum;
  b.nll_avg = b.nll_sum / n;
  b.nll_max = -lp_min;
  b.lntp = std::exp(-b.nll_avg);
  b.mtp = std::exp(lp_min);
  b.ppl = std::exp(b.nll_avg);
  return b;
}

inline BaselineVector compute_baselines(const DecodingTrace& trace) {
  return compute_baselines(trace, entropy_trajectory(trace));
}

}  // namespace entprof
