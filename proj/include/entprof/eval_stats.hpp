#pragma once

// Rank statistics and scoring: AUROC, Spearman rho, accuracy-estimation
// error, calibration error, and the per-domain single-statistic AUROC table.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "entprof/baselines.hpp"
#include "entprof/error.hpp"
#include "entprof/feature_cache.hpp"
#include "entprof/features.hpp"

namespace entprof {

/// 1-based ranks; tied values share the average of their positions.
inline std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && x[order[j]] == x[order[i]]) ++j;
    double avg = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t t = i; t < j; ++t) ranks[order[t]] = avg;
    i = j;
  }
  return ranks;
}

/// Mann-Whitney AUROC: probability that a random positive outscores a
/// random negative, ties counted as 1/2.
inline double auroc(std::span<const double> scores, std::span<const int> positive) {
  if (scores.size() != positive.size()) fail(ErrorCode::kDimensionMismatch, "scores and labels differ in length");
  std::size_t n_pos = 0;
  for (int p : positive) n_pos += p != 0;
  std::size_t n_neg = positive.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) fail(ErrorCode::kSingleClass, "AUROC needs both classes");
  auto ranks = average_ranks(scores);
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    if (positive[i] != 0) rank_sum += ranks[i];
  }
  double np = static_cast<double>(n_pos);
  double u = rank_sum - np * (np + 1.0) / 2.0;
  return u / (np * static_cast<double>(n_neg));
}

/// AUROC for detecting incorrect responses (label 0) from a metric,
/// after orienting the metric so that larger means "more likely wrong".
/// For lower-means-incorrect metrics this equals 1 - AUROC of the raw score.
inline double incorrectness_auroc(std::span<const double> scores, std::span<const int> correct_labels,
                                  Orientation orientation) {
  std::vector<double> s(scores.begin(), scores.end());
  if (orientation == Orientation::kLowerMeansIncorrect) {
    for (double& v : s) v = -v;
  }
  std::vector<int> incorrect(correct_labels.size());
  for (std::size_t i = 0; i < incorrect.size(); ++i) incorrect[i] = correct_labels[i] == 0;
  return auroc(s, incorrect);
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
  const auto n = static_cast<double>(x.size());
  double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) fail(ErrorCode::kDegenerateInput, "constant input to correlation");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

inline double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) fail(ErrorCode::kDimensionMismatch, "spearman inputs differ in length");
  if (x.size() < 2) fail(ErrorCode::kDegenerateInput, "spearman needs at least two points");
  auto rx = average_ranks(x);
  auto ry = average_ranks(y);
  return pearson(rx, ry);
}

/// Spearman rho, or nullopt where it is undefined (n < 2 or a constant side).
inline std::optional<double> try_spearman(std::span<const double> x, std::span<const double> y) {
  try {
    return spearman(x, y);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kDegenerateInput) return std::nullopt;
    throw;
  }
}

/// Mean absolute error between per-domain estimates and true accuracies.
inline double aee(std::span<const double> estimates, std::span<const double> truths) {
  if (estimates.empty() || estimates.size() != truths.size()) {
    fail(ErrorCode::kDomainMismatch, "estimates and truths must be aligned and non-empty");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) s += std::abs(estimates[i] - truths[i]);
  return s / static_cast<double>(estimates.size());
}

/// Expected calibration error over equal-width probability bins.
inline double expected_calibration_error(std::span<const double> probs, std::span<const int> labels,
                                         std::size_t bins = 10) {
  if (probs.empty() || probs.size() != labels.size()) {
    fail(ErrorCode::kDimensionMismatch, "probabilities and labels must be aligned and non-empty");
  }
  std::vector<double> p_sum(bins, 0.0), y_sum(bins, 0.0);
  std::vector<std::size_t> count(bins, 0);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    auto b = std::min(bins - 1, static_cast<std::size_t>(std::clamp(probs[i], 0.0, 1.0) * static_cast<double>(bins)));
    p_sum[b] += probs[i];
    y_sum[b] += labels[i];
    ++count[b];
  }
  double ece = 0.0;
  for (std::size_t b = 0; b < bins; ++b) {
    if (count[b] == 0) continue;
    ece += std::abs(p_sum[b] - y_sum[b]);
  }
  return ece / static_cast<double>(probs.size());
}

// ---------------------------------------------------------------------------
// Single-statistic diagnostic table.

struct DiagnosticTable {
  std::vector<std::string> statistics;
  std::vector<Orientation> orientations;
  std::vector<std::string> domains;
  // cells[statistic][domain]; nullopt where the domain has a single class.
  std::vector<std::vector<std::optional<double>>> cells;
};

/// The 20 diagnosed statistics: the profile followed by the baselines.
inline std::vector<std::string> diagnostic_statistics() {
  std::vector<std::string> names;
  for (auto n : kFeatureNames) names.emplace_back(n);
  for (auto n : kBaselineNames) names.emplace_back(n);
  return names;
}

inline double statistic_value(const FeatureRecord& r, std::size_t stat_index) {
  if (stat_index < kNumFeatures) return r.features[stat_index];
  return r.baselines.as_array()[stat_index - kNumFeatures];
}

/// Per-domain incorrectness AUROC of every statistic. Unlabeled records
/// are ignored; domains are sorted by id.
inline DiagnosticTable diagnose(std::span<const FeatureRecord> records) {
  std::map<std::string, std::vector<const FeatureRecord*>> by_domain;
  for (const auto& r : records) {
    if (r.label) by_domain[r.domain_id].push_back(&r);
  }
  if (by_domain.empty()) fail(ErrorCode::kEmptyInput, "no labeled records to diagnose");

  DiagnosticTable t;
  t.statistics = diagnostic_statistics();
  for (const auto& s : t.statistics) t.orientations.push_back(orientation_of(s));
  for (const auto& [d, _] : by_domain) t.domains.push_back(d);
  t.cells.assign(t.statistics.size(), std::vector<std::optional<double>>(t.domains.size()));

  std::size_t col = 0;
  for (const auto& [d, recs] : by_domain) {
    std::vector<int> labels;
    for (auto* r : recs) labels.push_back(*r->label);
    std::vector<double> scores(recs.size());
    for (std::size_t s = 0; s < t.statistics.size(); ++s) {
      for (std::size_t i = 0; i < recs.size(); ++i) scores[i] = statistic_value(*recs[i], s);
      try {
        t.cells[s][col] = incorrectness_auroc(scores, labels, t.orientations[s]);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kSingleClass) throw;
      }
    }
    ++col;
  }
  return t;
}

inline void write_diagnostic_csv(std::ostream& out, const DiagnosticTable& t) {
  out << "statistic,orientation";
  for (const auto& d : t.domains) out << ',' << csv_escape(d);
  out << '\n';
  for (std::size_t s = 0; s < t.statistics.size(); ++s) {
    out << t.statistics[s] << ',' << to_string(t.orientations[s]);
    for (const auto& cell : t.cells[s]) {
      out << ',';
      if (cell) {
        out << csv_number(*cell);
      } else {
        out << "n/a";
      }
    }
    out << '\n';
  }
}

}  // namespace entprof
