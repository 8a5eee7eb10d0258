#pragma once

// Domain-level accuracy estimation: the mean predicted probability of
// correctness over a domain's instances, scored against true accuracy.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "entprof/csv.hpp"
#include "entprof/error.hpp"
#include "entprof/eval_stats.hpp"
#include "entprof/feature_cache.hpp"
#include "entprof/matrix.hpp"
#include "entprof/model.hpp"

namespace entprof {

/// Profiles and labels of one domain, ready for training or prediction.
struct DomainData {
  std::string id;
  Matrix profiles{0, kNumFeatures};
  std::vector<std::optional<int>> labels;

  std::size_t size() const { return labels.size(); }
  bool fully_labeled() const {
    return std::all_of(labels.begin(), labels.end(), [](const auto& l) { return l.has_value(); });
  }
};

/// Feature records bucketed by domain; domains sorted by id, records kept
/// in input order.
struct Corpus {
  std::vector<DomainData> domains;

  static Corpus from_records(std::span<const FeatureRecord> records) {
    std::map<std::string, DomainData> by_id;
    for (const auto& r : records) {
      auto& d = by_id[r.domain_id];
      d.id = r.domain_id;
      d.profiles.push_row(r.features.values);
      d.labels.push_back(r.label);
    }
    Corpus c;
    for (auto& [_, d] : by_id) c.domains.push_back(std::move(d));
    return c;
  }

  std::vector<std::string> ids() const {
    std::vector<std::string> out;
    for (const auto& d : domains) out.push_back(d.id);
    return out;
  }

  const DomainData* find(const std::string& id) const {
    auto it = std::lower_bound(domains.begin(), domains.end(), id,
                               [](const DomainData& d, const std::string& k) { return d.id < k; });
    return it != domains.end() && it->id == id ? &*it : nullptr;
  }

  const DomainData& at(const std::string& id) const {
    if (auto* d = find(id)) return *d;
    fail(ErrorCode::kEmptyDomain, "domain '" + id + "' has no records");
  }
};

/// Sorted, '+'-joined domain ids.
inline std::string group_id(std::vector<std::string> domains) {
  std::sort(domains.begin(), domains.end());
  std::string s;
  for (std::size_t i = 0; i < domains.size(); ++i) s += (i ? "+" : "") + domains[i];
  return s;
}

inline std::vector<std::string> split_group_id(const std::string& id) {
  std::vector<std::string> out;
  if (id.empty()) return out;
  std::size_t start = 0;
  for (;;) {
    auto pos = id.find('+', start);
    out.push_back(id.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double estimate_domain(std::span<const double> probs) {
  if (probs.empty()) fail(ErrorCode::kEmptyDomain, "cannot estimate accuracy of an empty domain");
  double s = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0)) fail(ErrorCode::kDegenerateInput, "probability outside [0, 1]");
    s += p;
  }
  return s / static_cast<double>(probs.size());
}

struct DomainEstimate {
  std::string domain_id;
  std::size_t n_instances = 0;
  double estimated_accuracy = 0.0;
  std::optional<double> true_accuracy;

  std::optional<double> abs_error() const {
    if (!true_accuracy) return std::nullopt;
    return std::abs(estimated_accuracy - *true_accuracy);
  }
  bool operator==(const DomainEstimate&) const = default;
};

/// Fraction correct; nullopt unless every instance is labeled.
inline std::optional<double> true_accuracy(const DomainData& d) {
  if (d.size() == 0 || !d.fully_labeled()) return std::nullopt;
  double s = 0.0;
  for (const auto& l : d.labels) s += *l;
  return s / static_cast<double>(d.size());
}

/// Instance-count-weighted mean of true accuracies over the given domains.
inline double weighted_group_accuracy(const Corpus& corpus, const std::vector<std::string>& group) {
  double correct = 0.0, n = 0.0;
  for (const auto& id : group) {
    const auto& d = corpus.at(id);
    auto a = true_accuracy(d);
    if (!a) fail(ErrorCode::kSchemaViolation, "domain '" + id + "' is not fully labeled");
    correct += *a * static_cast<double>(d.size());
    n += static_cast<double>(d.size());
  }
  if (n == 0) fail(ErrorCode::kEmptyDomain, "empty training group");
  return correct / n;
}

template <class Predictor>
DomainEstimate estimate(const Predictor& model, const DomainData& d) {
  if (d.size() == 0) fail(ErrorCode::kEmptyDomain, "domain '" + d.id + "' has no instances");
  std::vector<double> probs(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) probs[i] = model.predict_proba(d.profiles.row(i));
  return {d.id, d.size(), estimate_domain(probs), true_accuracy(d)};
}

struct GroupSummary {
  std::vector<std::string> group;
  std::optional<double> weighted_group_accuracy;
  std::vector<DomainEstimate> estimates;
  std::optional<double> aee;
  std::optional<double> spearman;
};

/// AEE over labeled estimates and Spearman rho when at least two domains
/// with a non-constant truth vector are available.
inline void score_estimates(GroupSummary& s) {
  std::vector<double> est, truth;
  for (const auto& e : s.estimates) {
    if (!e.true_accuracy) {
      s.aee.reset();
      s.spearman.reset();
      return;
    }
    est.push_back(e.estimated_accuracy);
    truth.push_back(*e.true_accuracy);
  }
  s.aee = aee(est, truth);
  s.spearman = est.size() >= 2 ? try_spearman(est, truth) : std::nullopt;
}

/// Estimates every holdout domain with a model trained on `group`.
template <class Predictor>
GroupSummary evaluate_holdout(const Predictor& model, const Corpus& corpus, const std::vector<std::string>& group,
                              const std::vector<std::string>& holdout) {
  if (holdout.empty()) fail(ErrorCode::kEmptyHoldout, "no holdout domains");
  std::set<std::string> train(group.begin(), group.end());
  for (const auto& h : holdout) {
    if (train.count(h)) fail(ErrorCode::kDomainOverlap, "holdout domain '" + h + "' is in the training group");
  }
  GroupSummary s;
  s.group = group;
  std::sort(s.group.begin(), s.group.end());
  bool labeled = !group.empty();
  for (const auto& g : group) labeled = labeled && corpus.find(g) && true_accuracy(*corpus.find(g));
  if (labeled) s.weighted_group_accuracy = weighted_group_accuracy(corpus, group);
  for (const auto& h : holdout) s.estimates.push_back(estimate(model, corpus.at(h)));
  score_estimates(s);
  return s;
}

inline GroupSummary evaluate_holdout(const CorrectnessModel& model, const Corpus& corpus,
                                     const std::vector<std::string>& holdout) {
  return evaluate_holdout(model, corpus, split_group_id(model.metadata.group), holdout);
}

inline void write_estimate_report(std::ostream& out, const std::vector<DomainEstimate>& estimates) {
  write_csv_row(out, {"domain_id", "n", "estimated_accuracy", "true_accuracy", "abs_error"});
  for (const auto& e : estimates) {
    write_csv_row(out, {e.domain_id, std::to_string(e.n_instances), csv_number(e.estimated_accuracy),
                        e.true_accuracy ? csv_number(*e.true_accuracy) : "",
                        e.true_accuracy ? csv_number(*e.abs_error()) : ""});
  }
}

}  // namespace entprof
