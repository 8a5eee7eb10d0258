#pragma once

// CorrectnessModel: feature subset + z-scaler + one or more (calibrated)
// base models whose outputs are averaged into P(correct | profile).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "entprof/classifier.hpp"
#include "entprof/cv.hpp"
#include "entprof/error.hpp"
#include "entprof/features.hpp"
#include "entprof/matrix.hpp"
#include "entprof/rng.hpp"
#include "entprof/zscaler.hpp"

namespace entprof {

struct TrainConfig {
  Family family = Family::kRandomForest;
  bool balance = false;
  bool calibrate = false;
  FeatureSubset feature_subset = subset_by_name("full11");
  std::uint64_t seed = 42;
  int cv_folds = 5;
};

struct GridRow {
  std::string params;
  double mean_auroc = 0.0;
};

struct TrainingMetadata {
  std::string group;  // '+'-joined training domain ids
  std::uint64_t seed = 0;
  bool balance = false;
  bool calibrate = false;
  Hyperparameters hyperparameters;
  std::vector<GridRow> cv_table;
  std::size_t n_train = 0;
  std::size_t n_positive = 0;
};

struct CorrectnessModel {
  Family family = Family::kRandomForest;
  FeatureSubset feature_subset;
  ZScaler scaler;
  std::vector<CalibratedMember> members;
  TrainingMetadata metadata;

  /// P(correct) for one full 11-statistic profile.
  double predict_proba(std::span<const double> profile) const {
    if (profile.size() != kNumFeatures) {
      fail(ErrorCode::kDimensionMismatch, "expected " + std::to_string(kNumFeatures) + " features, got " +
                                              std::to_string(profile.size()));
    }
    double buf[kNumFeatures];
    const std::size_t d = feature_subset.indices.size();
    for (std::size_t j = 0; j < d; ++j) buf[j] = profile[feature_subset.indices[j]];
    std::span<double> row(buf, d);
    apply_zscaler_inplace(scaler, row);
    double p = predict_members<BaseModel>(members, row);
    if (std::isnan(p)) return 0.5;
    return std::clamp(p, 0.0, 1.0);
  }

  std::vector<double> predict_proba(const Matrix& profiles) const {
    std::vector<double> out(profiles.rows());
    for (std::size_t i = 0; i < profiles.rows(); ++i) out[i] = predict_proba(profiles.row(i));
    return out;
  }
};

/// Seed of one estimator within a training group. The calibration flag is
/// deliberately excluded so calibrated and uncalibrated variants share the
/// same grid search and base models.
inline std::uint64_t estimator_seed(std::uint64_t seed, const std::string& group, Family family, bool balance,
                                    const std::string& subset) {
  std::string key = group + "|" + std::string(to_string(family)) + "|" + (balance ? "b1" : "b0") + "|" + subset;
  return derive_seed(seed, key);
}

struct TrainingOutcome {
  GridSearchResult grid;
  std::optional<CorrectnessModel> uncalibrated;
  std::optional<CorrectnessModel> calibrated;
};

/// Trains one family on full 11-column profiles: subset selection,
/// z-scaling on the group, grid search, then the final uncalibrated fit
/// and/or the cross-fitted calibrated ensemble built from the grid-search
/// fold models.
inline TrainingOutcome fit_estimators(const Matrix& profiles, std::span<const int> y, Family family, bool balance,
                                      const FeatureSubset& subset, std::uint64_t seed, int cv_folds,
                                      bool want_uncalibrated, bool want_calibrated, const std::string& group = {}) {
  validate_subset(subset);
  if (profiles.cols() != kNumFeatures) fail(ErrorCode::kDimensionMismatch, "profiles must have 11 columns");
  if (profiles.rows() != y.size()) fail(ErrorCode::kDimensionMismatch, "profiles and labels differ in length");
  require_both_classes(y);

  Matrix x = select_columns(profiles, subset.indices);
  ZScaler scaler = fit_zscaler(x);
  x = apply_zscaler(scaler, x);

  TrainingOutcome out;
  out.grid = grid_search_cv(family, x, y, balance, seed, cv_folds);

  CorrectnessModel base;
  base.family = family;
  base.feature_subset = subset;
  base.scaler = scaler;
  base.metadata.group = group;
  base.metadata.seed = seed;
  base.metadata.balance = balance;
  base.metadata.hyperparameters = out.grid.best_params();
  for (std::size_t g = 0; g < out.grid.grid.size(); ++g) {
    base.metadata.cv_table.push_back({describe(family, out.grid.grid[g]), out.grid.mean_auroc[g]});
  }
  base.metadata.n_train = y.size();
  for (int v : y) base.metadata.n_positive += v != 0;

  if (want_uncalibrated) {
    CorrectnessModel m = base;
    m.members.push_back({train_base(family, out.grid.best_params(), x, y, balance, derive_seed(seed, "final")),
                         std::nullopt});
    out.uncalibrated = std::move(m);
  }
  if (want_calibrated) {
    CorrectnessModel m = base;
    m.metadata.calibrate = true;
    m.members = calibrate_from_folds(out.grid.best_fold_models, out.grid.best_oof, y, out.grid.fold_of);
    out.calibrated = std::move(m);
  }
  return out;
}

inline CorrectnessModel train_model(const Matrix& profiles, std::span<const int> y, const TrainConfig& cfg,
                                    const std::string& group = {}) {
  auto seed = estimator_seed(cfg.seed, group, cfg.family, cfg.balance, cfg.feature_subset.name);
  auto out = fit_estimators(profiles, y, cfg.family, cfg.balance, cfg.feature_subset, seed, cfg.cv_folds,
                            !cfg.calibrate, cfg.calibrate, group);
  return cfg.calibrate ? std::move(*out.calibrated) : std::move(*out.uncalibrated);
}

}  // namespace entprof
