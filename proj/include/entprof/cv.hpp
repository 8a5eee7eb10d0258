#pragma once

// Stratified k-fold cross-validation, AUROC-driven grid search and
// cross-fitted isotonic calibration.

#include <cstdint>
#include <type_traits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "entprof/classifier.hpp"
#include "entprof/error.hpp"
#include "entprof/eval_stats.hpp"
#include "entprof/isotonic.hpp"
#include "entprof/matrix.hpp"
#include "entprof/rng.hpp"

namespace entprof {

/// Fold index per row. Each class is shuffled and dealt round-robin, so
/// every fold holds both classes.
inline std::vector<int> stratified_folds(std::span<const int> y, int k, std::uint64_t seed) {
  if (k < 2) fail(ErrorCode::kInvalidConfig, "need at least 2 folds");
  std::vector<std::size_t> cls[2];
  for (std::size_t i = 0; i < y.size(); ++i) cls[y[i] ? 1 : 0].push_back(i);
  for (auto& c : cls) {
    if (c.size() < static_cast<std::size_t>(k)) {
      fail(ErrorCode::kTooFewRows, "stratified " + std::to_string(k) + "-fold split needs at least " +
                                       std::to_string(k) + " rows per class");
    }
  }
  Rng rng(derive_seed(seed, "folds"));
  std::vector<int> fold(y.size(), 0);
  int next = 0;
  for (auto& c : cls) {
    shuffle(c.begin(), c.end(), rng);
    for (auto i : c) {
      fold[i] = next;
      next = (next + 1) % k;
    }
  }
  return fold;
}

inline std::uint64_t fold_seed(std::uint64_t seed, int fold) {
  return derive_seed(seed, "fold:" + std::to_string(fold));
}

struct FoldSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> held_out;
};

inline FoldSplit split_fold(std::span<const int> fold_of, int f) {
  FoldSplit s;
  for (std::size_t i = 0; i < fold_of.size(); ++i) (fold_of[i] == f ? s.held_out : s.train).push_back(i);
  return s;
}

struct GridSearchResult {
  Family family = Family::kLogRegL1;
  std::vector<Hyperparameters> grid;
  std::vector<std::vector<double>> fold_auroc;  // [grid point][fold]
  std::vector<double> mean_auroc;               // [grid point]
  std::size_t best = 0;
  std::vector<int> fold_of;
  std::vector<BaseModel> best_fold_models;  // trained on each fold's complement
  std::vector<double> best_oof;             // out-of-fold predictions at best

  const Hyperparameters& best_params() const { return grid[best]; }
};

/// Stratified k-fold grid search maximizing mean out-of-fold AUROC. The
/// fold split and per-fold training seeds come from `seed`.
inline GridSearchResult grid_search_cv(Family family, const Matrix& x, std::span<const int> y, bool balance,
                                       std::uint64_t seed, int folds = 5,
                                       std::vector<Hyperparameters> grid = {}) {
  if (grid.empty()) grid = default_grid(family);
  GridSearchResult res;
  res.family = family;
  res.grid = grid;
  res.fold_of = stratified_folds(y, folds, seed);
  res.fold_auroc.assign(grid.size(), std::vector<double>(static_cast<std::size_t>(folds), 0.0));
  std::vector<std::vector<double>> oof(grid.size(), std::vector<double>(y.size(), 0.0));
  std::vector<std::vector<BaseModel>> models(grid.size());
  std::vector<ForestModel> deep_forests;

  for (int f = 0; f < folds; ++f) {
    auto split = split_fold(res.fold_of, f);
    Matrix x_tr = select_rows(x, split.train);
    auto y_tr = select<int>(y, split.train);
    auto y_ho = select<int>(y, split.held_out);
    std::uint64_t fs = fold_seed(seed, f);

    auto score = [&](std::size_t g, auto&& predict) {
      std::vector<double> pred(split.held_out.size());
      for (std::size_t i = 0; i < split.held_out.size(); ++i) {
        pred[i] = predict(x.row(split.held_out[i]));
        oof[g][split.held_out[i]] = pred[i];
      }
      res.fold_auroc[g][static_cast<std::size_t>(f)] = auroc(pred, y_ho);
    };

    if (family == Family::kRandomForest) {
      // Grow once at the loosest limits; every grid point is a truncation.
      int depth = 1, split_min = 1 << 30;
      for (const auto& h : grid) {
        depth = std::max(depth, h.max_depth);
        split_min = std::min(split_min, h.min_samples_split);
      }
      auto deep = train_random_forest(
          x_tr, y_tr, {.n_trees = kForestTrees, .max_depth = depth, .min_samples_split = split_min, .balance = balance},
          fs);
      for (std::size_t g = 0; g < grid.size(); ++g) {
        score(g, [&](std::span<const double> row) {
          return deep.predict_limited(row, grid[g].max_depth, grid[g].min_samples_split);
        });
      }
      deep_forests.push_back(std::move(deep));
    } else {
      for (std::size_t g = 0; g < grid.size(); ++g) {
        BaseModel m = train_base(family, grid[g], x_tr, y_tr, balance, fs);
        score(g, [&](std::span<const double> row) { return predict_base(m, row); });
        models[g].push_back(std::move(m));
      }
    }
  }

  res.mean_auroc.resize(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double s = 0.0;
    for (double a : res.fold_auroc[g]) s += a;
    res.mean_auroc[g] = s / static_cast<double>(folds);
    if (res.mean_auroc[g] > res.mean_auroc[res.best]) res.best = g;
  }
  res.best_oof = std::move(oof[res.best]);
  if (family == Family::kRandomForest) {
    const auto& h = grid[res.best];
    for (const auto& deep : deep_forests) res.best_fold_models.emplace_back(deep.truncated(h.max_depth, h.min_samples_split));
  } else {
    res.best_fold_models = std::move(models[res.best]);
  }
  return res;
}

inline double predict_one(const BaseModel& m, std::span<const double> x) { return predict_base(m, x); }

template <class Model>
double predict_one(const Model& m, std::span<const double> x) {
  return m.predict(x);
}

/// A fitted base model plus an optional isotonic map applied to its output.
template <class Model>
struct Calibrated {
  Model base;
  std::optional<IsotonicMap> calibrator;

  double predict(std::span<const double> x) const {
    double p = predict_one(base, x);
    return calibrator ? (*calibrator)(p) : p;
  }
  bool operator==(const Calibrated&) const = default;
};

using CalibratedMember = Calibrated<BaseModel>;

/// Builds calibrated members from per-fold models and their out-of-fold
/// predictions: member f pairs fold model f with an isotonic map fitted on
/// fold f's held-out (prediction, label) pairs.
template <class Model>
std::vector<Calibrated<Model>> calibrate_from_folds(std::vector<Model> fold_models, std::span<const double> oof,
                                                    std::span<const int> y, std::span<const int> fold_of) {
  std::vector<Calibrated<Model>> members;
  for (std::size_t f = 0; f < fold_models.size(); ++f) {
    auto split = split_fold(fold_of, static_cast<int>(f));
    auto scores = select<double>(oof, split.held_out);
    std::vector<double> targets;
    for (auto i : split.held_out) targets.push_back(y[i]);
    members.push_back({std::move(fold_models[f]), pava(scores, targets).map});
  }
  return members;
}

/// Cross-fitted isotonic calibration around an arbitrary training closure
/// `train(x, y, seed) -> model`. Predictions of the result are the mean of
/// the per-fold calibrated outputs (see predict_members).
template <class TrainFn>
auto calibrate(TrainFn&& train, const Matrix& x, std::span<const int> y, int folds, std::uint64_t seed) {
  using Model = std::decay_t<decltype(train(x, y, seed))>;
  auto fold_of = stratified_folds(y, folds, seed);
  std::vector<Model> models;
  std::vector<double> oof(y.size(), 0.0);
  for (int f = 0; f < folds; ++f) {
    auto split = split_fold(fold_of, f);
    Matrix x_tr = select_rows(x, split.train);
    auto y_tr = select<int>(y, split.train);
    Model m = train(x_tr, std::span<const int>(y_tr), fold_seed(seed, f));
    for (auto i : split.held_out) oof[i] = predict_one(m, x.row(i));
    models.push_back(std::move(m));
  }
  return calibrate_from_folds(std::move(models), oof, y, fold_of);
}

template <class Model>
double predict_members(std::span<const Calibrated<Model>> members, std::span<const double> x) {
  double s = 0.0;
  for (const auto& m : members) s += m.predict(x);
  return s / static_cast<double>(members.size());
}

}  // namespace entprof
