#pragma once

// Synthetic labeled trace corpora. Each step is a 20-atom distribution: a
// dominant atom with mass p1 and the remainder spread evenly over the other
// 19, with p1 chosen so the step's entropy hits a Gamma-distributed target
// whose mean depends on the instance's label.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "entprof/config.hpp"
#include "entprof/error.hpp"
#include "entprof/rng.hpp"
#include "entprof/trace.hpp"

namespace entprof {

inline constexpr int kSynthAtoms = 20;

struct SynthDomain {
  std::string domain_id;
  std::size_t n_instances = 0;
  double true_accuracy = 0.5;
};

struct SynthSpec {
  std::vector<SynthDomain> domains;
  double mu_correct = 0.6;
  double mu_incorrect = 1.4;
  double dispersion = 0.2;  // standard deviation of the per-step target entropy
  int t_min = 10;
  int t_max = 40;
  std::uint64_t seed = 42;
  std::string model_id = "synthetic";
};

/// Entropy of the dominant-plus-uniform-remainder distribution.
inline double two_level_entropy(double p1) {
  double h = p1 > 0.0 ? -p1 * std::log(p1) : 0.0;
  double rest = 1.0 - p1;
  if (rest > 0.0) h -= rest * std::log(rest / (kSynthAtoms - 1));
  return h;
}

/// Dominant mass whose two-level entropy equals the target. The map is
/// strictly decreasing on [1/20, 1].
inline double solve_p1(double target) {
  const double h_max = std::log(static_cast<double>(kSynthAtoms));
  if (!(target >= 0.0 && target <= h_max + 1e-12)) {
    fail(ErrorCode::kTargetOutOfRange, "target entropy outside [0, ln 20]");
  }
  if (target <= 0.0) return 1.0;
  if (target >= h_max) return 1.0 / kSynthAtoms;
  double lo = 1.0 / kSynthAtoms, hi = 1.0;
  while (hi - lo > 1e-13) {
    double mid = 0.5 * (lo + hi);
    if (two_level_entropy(mid) > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

inline void validate_synth_spec(const SynthSpec& s) {
  const double h_max = std::log(static_cast<double>(kSynthAtoms));
  if (s.domains.empty()) fail(ErrorCode::kInvalidConfig, "synth spec has no domains");
  for (const auto& d : s.domains) {
    if (d.domain_id.empty()) fail(ErrorCode::kInvalidConfig, "empty domain_id");
    if (d.n_instances == 0) fail(ErrorCode::kInvalidConfig, "domain '" + d.domain_id + "' has no instances");
    if (!(d.true_accuracy >= 0.0 && d.true_accuracy <= 1.0)) {
      fail(ErrorCode::kInvalidConfig, "true_accuracy of '" + d.domain_id + "' outside [0, 1]");
    }
  }
  for (double mu : {s.mu_correct, s.mu_incorrect}) {
    if (!(mu > 0.0 && mu < h_max)) fail(ErrorCode::kInfeasibleEntropy, "entropy means must lie in (0, ln 20)");
  }
  if (!(s.mu_incorrect > s.mu_correct)) fail(ErrorCode::kInvalidConfig, "mu_incorrect must exceed mu_correct");
  if (!(s.dispersion > 0.0)) fail(ErrorCode::kInvalidConfig, "dispersion must be positive");
  if (s.t_min < 1 || s.t_max < s.t_min) fail(ErrorCode::kInvalidConfig, "need 1 <= t_min <= t_max");
}

/// One step with the given entropy; the emitted token is drawn from the
/// step's own distribution.
inline TopKStep synth_step(double target_entropy, Rng& rng) {
  const double p1 = solve_p1(target_entropy);
  TopKStep step;
  step.entries.push_back({"t0", std::log(p1)});
  const double rest = (1.0 - p1) / (kSynthAtoms - 1);
  if (rest > 0.0) {
    // Keep entries sorted even when rounding puts the remainder above p1.
    const double lp = std::min(std::log(rest), step.entries[0].logprob);
    for (int i = 1; i < kSynthAtoms; ++i) step.entries.push_back({"t" + std::to_string(i), lp});
  }
  bool dominant = rest <= 0.0 || uniform01(rng) < p1;
  if (dominant) {
    step.chosen_logprob = step.entries[0].logprob;
  } else {
    std::size_t other = 1 + uniform_index(rng, kSynthAtoms - 1);
    step.chosen_logprob = step.entries[other].logprob;
  }
  return step;
}

inline std::vector<DecodingTrace> generate(const SynthSpec& spec) {
  validate_synth_spec(spec);
  const double h_max = std::log(static_cast<double>(kSynthAtoms));
  const double var = spec.dispersion * spec.dispersion;
  std::vector<DecodingTrace> out;
  for (const auto& d : spec.domains) {
    const int width = static_cast<int>(std::to_string(d.n_instances - 1).size());
    for (std::size_t i = 0; i < d.n_instances; ++i) {
      Rng rng(derive_seed(spec.seed, d.domain_id + "#" + std::to_string(i)));
      DecodingTrace t;
      std::string idx = std::to_string(i);
      t.instance_id = d.domain_id + "-" + std::string(static_cast<std::size_t>(width) - idx.size(), '0') + idx;
      t.domain_id = d.domain_id;
      t.model_id = spec.model_id;
      int label = uniform01(rng) < d.true_accuracy ? 1 : 0;
      t.label = label;
      int len = spec.t_min + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(spec.t_max - spec.t_min + 1)));
      double mu = label ? spec.mu_correct : spec.mu_incorrect;
      std::gamma_distribution<double> gamma(mu * mu / var, var / mu);
      for (int s = 0; s < len; ++s) {
        double target = std::clamp(gamma(rng), 0.0, h_max);
        t.steps.push_back(synth_step(target, rng));
      }
      out.push_back(std::move(t));
    }
  }
  return out;
}

inline SynthSpec synth_spec_from_json(const nlohmann::json& j) {
  const std::string ctx = "synth spec";
  detail::check_keys(j, {"version", "domains", "mu_correct", "mu_incorrect", "dispersion", "t_min", "t_max", "seed",
                         "model_id"},
                     ctx);
  detail::check_version(j, ctx);
  SynthSpec s;
  if (!j.contains("domains") || !j["domains"].is_array()) fail(ErrorCode::kInvalidConfig, ctx + ": 'domains' list required");
  for (const auto& d : j["domains"]) {
    detail::check_keys(d, {"domain_id", "n_instances", "true_accuracy"}, ctx + ".domains");
    s.domains.push_back({detail::get_or<std::string>(d, "domain_id", "", ctx),
                         detail::get_or<std::size_t>(d, "n_instances", 0, ctx),
                         detail::get_or(d, "true_accuracy", -1.0, ctx)});
  }
  s.mu_correct = detail::get_or(j, "mu_correct", s.mu_correct, ctx);
  s.mu_incorrect = detail::get_or(j, "mu_incorrect", s.mu_incorrect, ctx);
  s.dispersion = detail::get_or(j, "dispersion", s.dispersion, ctx);
  s.t_min = detail::get_or(j, "t_min", s.t_min, ctx);
  s.t_max = detail::get_or(j, "t_max", s.t_max, ctx);
  s.seed = detail::get_or<std::uint64_t>(j, "seed", s.seed, ctx);
  s.model_id = detail::get_or<std::string>(j, "model_id", s.model_id, ctx);
  validate_synth_spec(s);
  return s;
}

inline SynthSpec load_synth_spec(const std::filesystem::path& path) {
  return synth_spec_from_json(detail::parse_json_file(path));
}

}  // namespace entprof
