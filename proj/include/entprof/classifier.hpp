#pragma once

// The three classifier families behind one interface, with their
// hyperparameter grids.

#include <cstdint>
#include <cstdio>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "entprof/error.hpp"
#include "entprof/forest.hpp"
#include "entprof/logreg.hpp"
#include "entprof/matrix.hpp"
#include "entprof/mlp.hpp"

namespace entprof {

enum class Family { kLogRegL1, kRandomForest, kMlp };

inline constexpr Family kAllFamilies[] = {Family::kLogRegL1, Family::kRandomForest, Family::kMlp};

inline std::string_view to_string(Family f) {
  switch (f) {
    case Family::kLogRegL1: return "logreg_l1";
    case Family::kRandomForest: return "random_forest";
    case Family::kMlp: return "mlp";
  }
  return "unknown";
}

inline Family family_from_string(std::string_view s) {
  for (Family f : kAllFamilies) {
    if (to_string(f) == s) return f;
  }
  fail(ErrorCode::kInvalidConfig, "unknown classifier family '" + std::string(s) + "'");
}

/// One grid point. Only the fields of the owning family are meaningful.
struct Hyperparameters {
  double c = 1.0;
  int max_depth = 10;
  int min_samples_split = 2;
  std::vector<int> hidden;

  bool operator==(const Hyperparameters&) const = default;
};

inline std::string describe(Family f, const Hyperparameters& h) {
  switch (f) {
    case Family::kLogRegL1: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "C=%g", h.c);
      return buf;
    }
    case Family::kRandomForest:
      return "max_depth=" + std::to_string(h.max_depth) + ";min_samples_split=" + std::to_string(h.min_samples_split);
    case Family::kMlp: {
      std::string s = "hidden=(";
      for (std::size_t i = 0; i < h.hidden.size(); ++i) s += (i ? "," : "") + std::to_string(h.hidden[i]);
      return s + ")";
    }
  }
  return {};
}

/// Search grid in its documented order (ties resolve to the earliest).
inline std::vector<Hyperparameters> default_grid(Family f) {
  std::vector<Hyperparameters> g;
  switch (f) {
    case Family::kLogRegL1:
      for (double c : {0.5, 2.0, 10.0}) g.push_back({.c = c, .hidden = {}});
      break;
    case Family::kRandomForest:
      for (int depth : {3, 5, 10}) {
        for (int split : {2, 5, 10}) g.push_back({.max_depth = depth, .min_samples_split = split, .hidden = {}});
      }
      break;
    case Family::kMlp:
      for (auto h : std::vector<std::vector<int>>{{5}, {8}, {10}, {15}, {20}, {8, 4}, {10, 5}, {15, 8}}) {
        g.push_back({.hidden = h});
      }
      break;
  }
  return g;
}

inline constexpr int kForestTrees = 100;

using BaseModel = std::variant<LogRegModel, ForestModel, MlpModel>;

inline double predict_base(const BaseModel& m, std::span<const double> x) {
  return std::visit([&](const auto& model) { return model.predict(x); }, m);
}

inline Family family_of(const BaseModel& m) {
  switch (m.index()) {
    case 0: return Family::kLogRegL1;
    case 1: return Family::kRandomForest;
    default: return Family::kMlp;
  }
}

inline BaseModel train_base(Family f, const Hyperparameters& h, const Matrix& x, std::span<const int> y, bool balance,
                            std::uint64_t seed) {
  switch (f) {
    case Family::kLogRegL1:
      return train_logreg_l1(x, y, h.c, balance);
    case Family::kRandomForest:
      return train_random_forest(
          x, y, {.n_trees = kForestTrees, .max_depth = h.max_depth, .min_samples_split = h.min_samples_split, .balance = balance},
          seed);
    case Family::kMlp: {
      MlpParams p;
      p.hidden = h.hidden;
      p.balance = balance;
      return train_mlp(x, y, p, seed);
    }
  }
  fail(ErrorCode::kInvalidConfig, "unknown family");
}

}  // namespace entprof
