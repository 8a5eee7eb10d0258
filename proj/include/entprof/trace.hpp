#pragma once

// Decoding-trace types and truncated (top-k) entropy.
//
// All log-probabilities are natural logs. Entropy is computed over the
// entries present in a step with no renormalization of the retained mass,
// so a step that keeps k' atoms is bounded by ln(k').

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "entprof/error.hpp"

namespace entprof {

inline constexpr std::size_t kMaxTopK = 20;
inline constexpr double kProbabilitySumTolerance = 1e-6;

struct TopKEntry {
  std::string token;
  double logprob = 0.0;

  bool operator==(const TopKEntry&) const = default;
};

struct TopKStep {
  std::vector<TopKEntry> entries;  // sorted by logprob, descending
  double chosen_logprob = 0.0;

  bool operator==(const TopKStep&) const = default;
};

struct DecodingTrace {
  std::string instance_id;
  std::string domain_id;
  std::string model_id;
  std::optional<int> label;  // 1 = correct, 0 = incorrect
  std::vector<TopKStep> steps;

  bool operator==(const DecodingTrace&) const = default;
};

using EntropyTrajectory = std::vector<double>;

/// Returns an empty string when the step is valid, otherwise the name of
/// the offending field.
inline std::string check_step(const TopKStep& step) {
  if (step.entries.empty() || step.entries.size() > kMaxTopK) return "top";
  double mass = 0.0;
  for (std::size_t i = 0; i < step.entries.size(); ++i) {
    double lp = step.entries[i].logprob;
    if (!std::isfinite(lp) || lp > 0.0) return "logprob";
    if (i > 0 && lp > step.entries[i - 1].logprob) return "top";
    mass += std::exp(lp);
  }
  if (mass > 1.0 + kProbabilitySumTolerance) return "top";
  if (!std::isfinite(step.chosen_logprob) || step.chosen_logprob > 0.0) return "chosen_logprob";
  return {};
}

inline void validate_step(const TopKStep& step) {
  if (auto field = check_step(step); !field.empty()) {
    fail(ErrorCode::kInvalidStep, "field '" + field + "'");
  }
}

/// Returns an empty string when the trace is valid, otherwise a
/// description naming the offending field.
inline std::string check_trace(const DecodingTrace& trace) {
  if (trace.steps.empty()) return "steps";
  if (trace.label && *trace.label != 0 && *trace.label != 1) return "label";
  for (const auto& step : trace.steps) {
    if (auto field = check_step(step); !field.empty()) return field;
  }
  return {};
}

inline double truncated_entropy(const TopKStep& step) {
  validate_step(step);
  double h = 0.0;
  for (const auto& e : step.entries) {
    // p ln p with ln p taken directly from the logprob.
    h -= std::exp(e.logprob) * e.logprob;
  }
  return h;
}

inline EntropyTrajectory entropy_trajectory(const DecodingTrace& trace) {
  if (trace.steps.empty()) {
    fail(ErrorCode::kEmptyTrajectory, "trace '" + trace.instance_id + "' has no steps");
  }
  EntropyTrajectory out;
  out.reserve(trace.steps.size());
  for (std::size_t t = 0; t < trace.steps.size(); ++t) {
    try {
      out.push_back(truncated_entropy(trace.steps[t]));
    } catch (const Error& e) {
      fail(e.code(), "step " + std::to_string(t) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace entprof
