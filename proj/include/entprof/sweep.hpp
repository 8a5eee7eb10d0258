#pragma once

// Exhaustive train/test composition sweep: every k-subset of domains trains
// each estimator configuration and is scored on the remaining domains.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "entprof/classifier.hpp"
#include "entprof/csv.hpp"
#include "entprof/error.hpp"
#include "entprof/estimation.hpp"
#include "entprof/features.hpp"
#include "entprof/model.hpp"

namespace entprof {

inline std::uint64_t binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  std::uint64_t r = 1;
  for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// All k-subsets of the sorted ids, in lexicographic order.
inline std::vector<std::vector<std::string>> enumerate_groups(std::vector<std::string> domains, int k) {
  std::sort(domains.begin(), domains.end());
  domains.erase(std::unique(domains.begin(), domains.end()), domains.end());
  const auto n = domains.size();
  if (k < 1 || static_cast<std::size_t>(k) > n) {
    fail(ErrorCode::kKOutOfRange, "k=" + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
  }
  std::vector<std::vector<std::string>> out;
  std::vector<std::size_t> idx(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  for (;;) {
    std::vector<std::string> g;
    for (auto i : idx) g.push_back(domains[i]);
    out.push_back(std::move(g));
    std::size_t i = idx.size();
    while (i > 0 && idx[i - 1] == n - idx.size() + (i - 1)) --i;
    if (i == 0) break;
    ++idx[i - 1];
    for (std::size_t j = i; j < idx.size(); ++j) idx[j] = idx[j - 1] + 1;
  }
  return out;
}

struct EstimatorConfig {
  Family family = Family::kRandomForest;
  bool balance = false;
  bool calibrate = false;

  bool operator==(const EstimatorConfig&) const = default;
};

/// The 12 configurations: family-major, then balance, then calibrate.
inline std::vector<EstimatorConfig> all_estimator_configs() {
  std::vector<EstimatorConfig> out;
  for (Family f : kAllFamilies) {
    for (bool b : {false, true}) {
      for (bool c : {false, true}) out.push_back({f, b, c});
    }
  }
  return out;
}

struct SweepConfig {
  std::vector<std::string> domains;  // empty: every domain in the corpus
  std::vector<int> ks = {1, 2, 3, 4};
  std::vector<EstimatorConfig> estimators = all_estimator_configs();
  std::vector<FeatureSubset> subsets = {subset_by_name("full11")};
  std::uint64_t seed = 42;
  int cv_folds = 5;
  bool include_leave_one_out = false;
  unsigned threads = 0;  // 0: hardware concurrency
};

struct SweepRow {
  std::vector<std::string> group;
  int k = 0;
  EstimatorConfig estimator;
  std::string subset;
  bool ok = false;
  std::string error;
  std::string hyperparameters;
  std::optional<double> weighted_group_accuracy;
  std::optional<double> aee;
  std::optional<double> spearman;
  std::vector<DomainEstimate> estimates;

  std::string group_key() const { return group_id(group); }
  bool operator==(const SweepRow&) const = default;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  bool operator==(const SweepResult&) const = default;
};

namespace detail {

inline void check_sweep_config(const SweepConfig& cfg, std::size_t n_domains) {
  if (n_domains == 0) fail(ErrorCode::kEmptyInput, "empty corpus");
  if (cfg.estimators.empty()) fail(ErrorCode::kInvalidConfig, "no estimator configurations");
  if (cfg.subsets.empty()) fail(ErrorCode::kInvalidConfig, "no feature subsets");
  for (const auto& s : cfg.subsets) validate_subset(s);
  if (cfg.cv_folds < 2) fail(ErrorCode::kInvalidConfig, "cv_folds must be at least 2");
  for (int k : cfg.ks) {
    if (k < 1 || static_cast<std::size_t>(k) >= n_domains) {
      fail(ErrorCode::kKOutOfRange, "k=" + std::to_string(k) + " must lie in [1, " + std::to_string(n_domains - 1) + "]");
    }
  }
}

inline Corpus sweep_corpus(const Corpus& corpus, const SweepConfig& cfg) {
  Corpus c;
  if (cfg.domains.empty()) {
    c = corpus;
  } else {
    std::vector<std::string> ids = cfg.domains;
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) fail(ErrorCode::kInvalidConfig, "duplicate domain ids");
    for (const auto& id : ids) c.domains.push_back(corpus.at(id));
  }
  for (const auto& d : c.domains) {
    if (d.size() == 0) fail(ErrorCode::kEmptyDomain, "domain '" + d.id + "' is empty");
    if (!d.fully_labeled()) fail(ErrorCode::kSchemaViolation, "domain '" + d.id + "' has unlabeled records");
  }
  return c;
}

/// Work unit: one group, family, balance flag and subset. Calibrated and
/// uncalibrated rows share its grid search.
struct WorkItem {
  std::size_t group;
  Family family;
  bool balance;
  std::size_t subset;
  bool want_uncalibrated = false;
  bool want_calibrated = false;
};

struct WorkOutput {
  std::optional<SweepRow> uncalibrated;
  std::optional<SweepRow> calibrated;
};

}  // namespace detail

/// Trains on `group` and scores on every other domain of the corpus. This
/// is the single row function shared by the sweep and leave-one-out.
inline detail::WorkOutput evaluate_group(const Corpus& corpus, const std::vector<std::string>& group, Family family,
                                         bool balance, const FeatureSubset& subset, std::uint64_t seed, int cv_folds,
                                         bool want_uncalibrated, bool want_calibrated) {
  detail::WorkOutput out;
  SweepRow proto;
  proto.group = group;
  std::sort(proto.group.begin(), proto.group.end());
  proto.k = static_cast<int>(group.size());
  proto.estimator = {family, balance, false};
  proto.subset = subset.name;
  std::vector<std::string> holdout;
  for (const auto& d : corpus.domains) {
    if (!std::binary_search(proto.group.begin(), proto.group.end(), d.id)) holdout.push_back(d.id);
  }

  try {
    proto.weighted_group_accuracy = weighted_group_accuracy(corpus, proto.group);
    Matrix x(0, kNumFeatures);
    std::vector<int> y;
    for (const auto& id : proto.group) {
      const auto& d = corpus.at(id);
      for (std::size_t i = 0; i < d.size(); ++i) {
        x.push_row(d.profiles.row(i));
        y.push_back(*d.labels[i]);
      }
    }
    const std::string gid = group_id(proto.group);
    auto trained = fit_estimators(x, y, family, balance, subset,
                                  estimator_seed(seed, gid, family, balance, subset.name), cv_folds,
                                  want_uncalibrated, want_calibrated, gid);
    auto finish = [&](const CorrectnessModel& m, bool calibrate) {
      SweepRow row = proto;
      row.estimator.calibrate = calibrate;
      row.hyperparameters = describe(family, m.metadata.hyperparameters);
      auto summary = evaluate_holdout(m, corpus, proto.group, holdout);
      row.estimates = std::move(summary.estimates);
      row.aee = summary.aee;
      row.spearman = summary.spearman;
      row.ok = true;
      return row;
    };
    if (trained.uncalibrated) out.uncalibrated = finish(*trained.uncalibrated, false);
    if (trained.calibrated) out.calibrated = finish(*trained.calibrated, true);
  } catch (const Error& e) {
    auto failed = [&](bool calibrate) {
      SweepRow row = proto;
      row.estimator.calibrate = calibrate;
      row.ok = false;
      row.error = std::string(to_string(e.code()));
      return row;
    };
    if (want_uncalibrated) out.uncalibrated = failed(false);
    if (want_calibrated) out.calibrated = failed(true);
  }
  return out;
}

namespace detail {

inline void run_parallel(std::size_t n_items, unsigned threads, const std::function<void(std::size_t)>& work) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n_items));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n_items; ++i) work(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n_items;) {
        try {
          work(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

/// Runs the given groups through every configuration; rows come out
/// ordered by (group, estimator config, subset) regardless of scheduling.
inline SweepResult sweep_groups(const Corpus& corpus, const std::vector<std::vector<std::string>>& groups,
                                const SweepConfig& cfg) {
  std::vector<WorkItem> items;
  std::map<std::tuple<std::size_t, int, bool, std::size_t>, std::size_t> item_of;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (const auto& est : cfg.estimators) {
      for (std::size_t s = 0; s < cfg.subsets.size(); ++s) {
        auto key = std::make_tuple(g, static_cast<int>(est.family), est.balance, s);
        auto [it, inserted] = item_of.emplace(key, items.size());
        if (inserted) items.push_back({g, est.family, est.balance, s});
        auto& item = items[it->second];
        (est.calibrate ? item.want_calibrated : item.want_uncalibrated) = true;
      }
    }
  }

  std::vector<WorkOutput> outputs(items.size());
  run_parallel(items.size(), cfg.threads, [&](std::size_t i) {
    const auto& it = items[i];
    outputs[i] = evaluate_group(corpus, groups[it.group], it.family, it.balance, cfg.subsets[it.subset], cfg.seed,
                                cfg.cv_folds, it.want_uncalibrated, it.want_calibrated);
  });

  SweepResult res;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (const auto& est : cfg.estimators) {
      for (std::size_t s = 0; s < cfg.subsets.size(); ++s) {
        auto& o = outputs[item_of.at(std::make_tuple(g, static_cast<int>(est.family), est.balance, s))];
        res.rows.push_back(est.calibrate ? *o.calibrated : *o.uncalibrated);
      }
    }
  }
  return res;
}

}  // namespace detail

inline SweepResult run_sweep(const Corpus& corpus, const SweepConfig& cfg) {
  Corpus c = detail::sweep_corpus(corpus, cfg);
  detail::check_sweep_config(cfg, c.domains.size());
  std::vector<std::vector<std::string>> groups;
  for (int k : cfg.ks) {
    for (auto& g : enumerate_groups(c.ids(), k)) groups.push_back(std::move(g));
  }
  return detail::sweep_groups(c, groups, cfg);
}

/// Per (estimator config, subset) view of a leave-one-out run: rho across
/// the held-out (estimate, truth) pairs of all n rows.
struct LeaveOneOutSummary {
  EstimatorConfig estimator;
  std::string subset;
  std::size_t n_rows = 0;
  std::size_t n_failed = 0;
  std::optional<double> median_aee;
  std::optional<double> spearman;
};

struct LeaveOneOutResult {
  SweepResult sweep;
  std::vector<LeaveOneOutSummary> summaries;
};

inline LeaveOneOutResult leave_one_out(const Corpus& corpus, SweepConfig cfg) {
  Corpus c = detail::sweep_corpus(corpus, cfg);
  if (c.domains.size() < 2) fail(ErrorCode::kKOutOfRange, "leave-one-out needs at least 2 domains");
  const int k = static_cast<int>(c.domains.size()) - 1;
  cfg.ks = {k};
  detail::check_sweep_config(cfg, c.domains.size());
  LeaveOneOutResult out;
  out.sweep = detail::sweep_groups(c, enumerate_groups(c.ids(), k), cfg);

  for (const auto& est : cfg.estimators) {
    for (const auto& sub : cfg.subsets) {
      LeaveOneOutSummary s{est, sub.name, 0, 0, std::nullopt, std::nullopt};
      std::vector<double> aees, estimates, truths;
      for (const auto& row : out.sweep.rows) {
        if (!(row.estimator == est) || row.subset != sub.name) continue;
        ++s.n_rows;
        if (!row.ok || !row.aee) {
          ++s.n_failed;
          continue;
        }
        aees.push_back(*row.aee);
        estimates.push_back(row.estimates.front().estimated_accuracy);
        truths.push_back(*row.estimates.front().true_accuracy);
      }
      if (!aees.empty()) s.median_aee = quantile(aees, 0.5);
      if (estimates.size() >= 2) s.spearman = try_spearman(estimates, truths);
      out.summaries.push_back(s);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Aggregation.

enum class GroupBy { kK, kClassifier, kCalibration, kBalance, kSubset };

inline std::string_view to_string(GroupBy g) {
  switch (g) {
    case GroupBy::kK: return "k";
    case GroupBy::kClassifier: return "classifier";
    case GroupBy::kCalibration: return "calibration";
    case GroupBy::kBalance: return "balance";
    case GroupBy::kSubset: return "subset";
  }
  return "unknown";
}

inline GroupBy group_by_from_string(std::string_view s) {
  for (GroupBy g : {GroupBy::kK, GroupBy::kClassifier, GroupBy::kCalibration, GroupBy::kBalance, GroupBy::kSubset}) {
    if (to_string(g) == s) return g;
  }
  fail(ErrorCode::kInvalidConfig, "unknown grouping '" + std::string(s) + "'");
}

inline std::string bucket_of(const SweepRow& r, GroupBy by) {
  switch (by) {
    case GroupBy::kK: return std::to_string(r.k);
    case GroupBy::kClassifier: return std::string(to_string(r.estimator.family));
    case GroupBy::kCalibration: return r.estimator.calibrate ? "true" : "false";
    case GroupBy::kBalance: return r.estimator.balance ? "true" : "false";
    case GroupBy::kSubset: return r.subset;
  }
  return {};
}

struct MedianIqr {
  double median = 0.0;
  double iqr = 0.0;
};

inline MedianIqr median_iqr(std::span<const double> v) {
  return {quantile(v, 0.5), quantile(v, 0.75) - quantile(v, 0.25)};
}

struct AggregateRow {
  std::string factor;
  std::string bucket;
  std::size_t n_rows = 0;
  std::size_t n_failed = 0;
  MedianIqr aee;
  std::size_t n_spearman = 0;
  std::size_t n_spearman_na = 0;
  std::optional<MedianIqr> spearman;
};

/// Median and IQR of AEE and rho per bucket. Failed rows are counted and
/// skipped; rows without rho are excluded from its statistics and counted.
inline std::vector<AggregateRow> aggregate(std::span<const SweepRow> rows, GroupBy by) {
  if (rows.empty()) fail(ErrorCode::kEmptyBucket, "no rows to aggregate");
  std::vector<std::string> order;
  std::map<std::string, std::vector<const SweepRow*>> buckets;
  for (const auto& r : rows) {
    auto b = bucket_of(r, by);
    auto [it, inserted] = buckets.try_emplace(b);
    if (inserted) order.push_back(b);
    it->second.push_back(&r);
  }
  if (by == GroupBy::kK) {
    std::sort(order.begin(), order.end(), [](const std::string& a, const std::string& b) { return std::stoi(a) < std::stoi(b); });
  }

  std::vector<AggregateRow> out;
  for (const auto& b : order) {
    AggregateRow a;
    a.factor = std::string(to_string(by));
    a.bucket = b;
    std::vector<double> aees, rhos;
    for (const SweepRow* r : buckets[b]) {
      ++a.n_rows;
      if (!r->ok || !r->aee) {
        ++a.n_failed;
        continue;
      }
      aees.push_back(*r->aee);
      if (r->spearman) {
        rhos.push_back(*r->spearman);
      } else {
        ++a.n_spearman_na;
      }
    }
    if (aees.empty()) fail(ErrorCode::kEmptyBucket, "bucket '" + b + "' has no successful rows");
    a.aee = median_iqr(aees);
    a.n_spearman = rhos.size();
    if (!rhos.empty()) a.spearman = median_iqr(rhos);
    out.push_back(std::move(a));
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV output and input.

namespace detail {

inline std::vector<std::string> row_key_fields(const SweepRow& r) {
  return {group_id(r.group), std::to_string(r.k), std::string(to_string(r.estimator.family)),
          r.estimator.balance ? "true" : "false", r.estimator.calibrate ? "true" : "false", r.subset};
}

inline bool parse_bool(const std::string& s) {
  if (s == "true") return true;
  if (s == "false") return false;
  fail(ErrorCode::kSchemaViolation, "expected true/false, got '" + s + "'");
}

inline std::optional<double> parse_optional(const std::string& s) {
  if (s.empty() || s == "n/a") return std::nullopt;
  return std::stod(s);
}

}  // namespace detail

inline void write_results_csv(std::ostream& out, const SweepResult& res) {
  write_csv_row(out, {"group", "k", "classifier", "balance", "calibrate", "subset", "status", "error",
                      "hyperparameters", "weighted_group_accuracy", "aee", "spearman", "n_holdout"});
  for (const auto& r : res.rows) {
    auto f = detail::row_key_fields(r);
    f.push_back(r.ok ? "ok" : "failed");
    f.push_back(r.error);
    f.push_back(r.hyperparameters);
    f.push_back(csv_number(r.weighted_group_accuracy));
    f.push_back(csv_number(r.aee));
    f.push_back(csv_number(r.spearman));
    f.push_back(std::to_string(r.estimates.size()));
    write_csv_row(out, f);
  }
}

inline void write_domain_estimates_csv(std::ostream& out, const SweepResult& res) {
  write_csv_row(out, {"group", "k", "classifier", "balance", "calibrate", "subset", "domain_id", "n",
                      "estimated_accuracy", "true_accuracy", "abs_error"});
  for (const auto& r : res.rows) {
    for (const auto& e : r.estimates) {
      auto f = detail::row_key_fields(r);
      f.push_back(e.domain_id);
      f.push_back(std::to_string(e.n_instances));
      f.push_back(csv_number(e.estimated_accuracy));
      f.push_back(csv_number(e.true_accuracy));
      f.push_back(csv_number(e.abs_error()));
      write_csv_row(out, f);
    }
  }
}

/// Plot-ready (weighted group accuracy, AEE) pairs of successful rows.
inline void write_difficulty_pairs_csv(std::ostream& out, std::span<const SweepRow> rows) {
  write_csv_row(out, {"group", "k", "classifier", "balance", "calibrate", "subset", "weighted_group_accuracy", "aee"});
  for (const auto& r : rows) {
    if (!r.ok || !r.aee || !r.weighted_group_accuracy) continue;
    auto f = detail::row_key_fields(r);
    f.push_back(csv_number(*r.weighted_group_accuracy));
    f.push_back(csv_number(*r.aee));
    write_csv_row(out, f);
  }
}

inline void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows) {
  write_csv_row(out, {"factor", "bucket", "n_rows", "n_failed", "median_aee", "iqr_aee", "n_spearman",
                      "n_spearman_na", "median_spearman", "iqr_spearman"});
  for (const auto& a : rows) {
    write_csv_row(out, {a.factor, a.bucket, std::to_string(a.n_rows), std::to_string(a.n_failed),
                        csv_number(a.aee.median), csv_number(a.aee.iqr), std::to_string(a.n_spearman),
                        std::to_string(a.n_spearman_na),
                        a.spearman ? csv_number(a.spearman->median) : "n/a",
                        a.spearman ? csv_number(a.spearman->iqr) : "n/a"});
  }
}

inline void write_leave_one_out_csv(std::ostream& out, const std::vector<LeaveOneOutSummary>& summaries) {
  write_csv_row(out, {"classifier", "balance", "calibrate", "subset", "n_rows", "n_failed", "median_aee", "spearman"});
  for (const auto& s : summaries) {
    write_csv_row(out, {std::string(to_string(s.estimator.family)), s.estimator.balance ? "true" : "false",
                        s.estimator.calibrate ? "true" : "false", s.subset, std::to_string(s.n_rows),
                        std::to_string(s.n_failed), csv_number(s.median_aee), csv_number(s.spearman)});
  }
}

/// Reads a results CSV back into rows (per-domain estimates are not part
/// of that file and stay empty).
inline std::vector<SweepRow> read_results_csv(std::istream& in) {
  CsvTable t = read_csv(in);
  const auto c_group = t.column("group"), c_k = t.column("k"), c_cls = t.column("classifier"),
             c_bal = t.column("balance"), c_cal = t.column("calibrate"), c_sub = t.column("subset"),
             c_status = t.column("status"), c_err = t.column("error"), c_hyp = t.column("hyperparameters"),
             c_wga = t.column("weighted_group_accuracy"), c_aee = t.column("aee"), c_rho = t.column("spearman");
  std::vector<SweepRow> rows;
  for (const auto& f : t.rows) {
    try {
      SweepRow r;
      r.group = split_group_id(f[c_group]);
      r.k = std::stoi(f[c_k]);
      r.estimator = {family_from_string(f[c_cls]), detail::parse_bool(f[c_bal]), detail::parse_bool(f[c_cal])};
      r.subset = f[c_sub];
      r.ok = f[c_status] == "ok";
      r.error = f[c_err];
      r.hyperparameters = f[c_hyp];
      r.weighted_group_accuracy = detail::parse_optional(f[c_wga]);
      r.aee = detail::parse_optional(f[c_aee]);
      r.spearman = detail::parse_optional(f[c_rho]);
      rows.push_back(std::move(r));
    } catch (const std::logic_error& e) {
      fail(ErrorCode::kSchemaViolation, std::string("results CSV: ") + e.what());
    }
  }
  return rows;
}

}  // namespace entprof
