#pragma once

// Versioned JSON configuration files. Unknown keys are rejected so a typo
// cannot silently fall back to a default.

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "entprof/classifier.hpp"
#include "entprof/error.hpp"
#include "entprof/features.hpp"
#include "entprof/model.hpp"
#include "entprof/sweep.hpp"

namespace entprof {

inline constexpr int kConfigVersion = 1;

namespace detail {

inline void check_keys(const nlohmann::json& j, std::initializer_list<std::string_view> allowed,
                       const std::string& context) {
  if (!j.is_object()) fail(ErrorCode::kInvalidConfig, context + ": expected a JSON object");
  for (const auto& [key, _] : j.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) fail(ErrorCode::kInvalidConfig, context + ": unknown key '" + key + "'");
  }
}

inline void check_version(const nlohmann::json& j, const std::string& context) {
  if (!j.contains("version")) fail(ErrorCode::kInvalidConfig, context + ": missing 'version'");
  if (!j["version"].is_number_integer() || j["version"].get<int>() != kConfigVersion) {
    fail(ErrorCode::kInvalidConfig, context + ": unsupported version (expected " + std::to_string(kConfigVersion) + ")");
  }
}

template <class T>
T get_or(const nlohmann::json& j, const char* key, T fallback, const std::string& context) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(ErrorCode::kInvalidConfig, context + ": bad value for '" + key + "'");
  }
}

inline FeatureSubset subset_from_json(const nlohmann::json& j, const std::string& context) {
  if (j.is_string()) return subset_by_name(j.get<std::string>());
  check_keys(j, {"name", "indices"}, context + ".feature_subset");
  FeatureSubset s;
  s.name = get_or<std::string>(j, "name", "custom", context);
  s.indices = get_or<std::vector<std::size_t>>(j, "indices", {}, context);
  validate_subset(s);
  return s;
}

inline nlohmann::json parse_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::kInvalidConfig, path.string() + ": " + e.what());
  }
}

}  // namespace detail

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  const std::string ctx = "train config";
  detail::check_keys(j, {"version", "classifier", "balance", "calibrate", "feature_subset", "seed", "cv_folds"}, ctx);
  detail::check_version(j, ctx);
  TrainConfig c;
  c.family = family_from_string(detail::get_or<std::string>(j, "classifier", std::string(to_string(c.family)), ctx));
  c.balance = detail::get_or(j, "balance", c.balance, ctx);
  c.calibrate = detail::get_or(j, "calibrate", c.calibrate, ctx);
  if (j.contains("feature_subset")) c.feature_subset = detail::subset_from_json(j["feature_subset"], ctx);
  c.seed = detail::get_or<std::uint64_t>(j, "seed", c.seed, ctx);
  c.cv_folds = detail::get_or(j, "cv_folds", c.cv_folds, ctx);
  if (c.cv_folds < 2) fail(ErrorCode::kInvalidConfig, ctx + ": cv_folds must be at least 2");
  return c;
}

inline TrainConfig load_train_config(const std::filesystem::path& path) {
  return train_config_from_json(detail::parse_json_file(path));
}

/// Sweep manifest: feature caches to load (relative paths resolve against
/// the manifest's directory) plus the sweep settings.
struct RunManifest {
  std::vector<std::filesystem::path> features;
  std::filesystem::path output_dir;
  SweepConfig sweep;
};

inline RunManifest manifest_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  const std::string ctx = "manifest";
  detail::check_keys(j, {"version", "features", "domains", "output_dir", "ks", "estimators", "feature_subsets", "seed",
                         "cv_folds", "leave_one_out", "threads"},
                     ctx);
  detail::check_version(j, ctx);
  RunManifest m;
  auto paths = detail::get_or<std::vector<std::string>>(j, "features", {}, ctx);
  if (paths.empty()) fail(ErrorCode::kInvalidConfig, ctx + ": 'features' must list at least one file");
  for (const auto& p : paths) {
    std::filesystem::path path(p);
    if (path.is_relative()) path = base_dir / path;
    if (!std::filesystem::exists(path)) fail(ErrorCode::kIo, ctx + ": feature file not found: " + path.string());
    m.features.push_back(path);
  }
  if (j.contains("output_dir")) {
    m.output_dir = j["output_dir"].get<std::string>();
    if (m.output_dir.is_relative()) m.output_dir = base_dir / m.output_dir;
  }
  auto& s = m.sweep;
  s.domains = detail::get_or<std::vector<std::string>>(j, "domains", {}, ctx);
  s.ks = detail::get_or(j, "ks", s.ks, ctx);
  if (j.contains("estimators")) {
    const auto& e = j["estimators"];
    if (!(e.is_string() && e.get<std::string>() == "all")) {
      if (!e.is_array()) fail(ErrorCode::kInvalidConfig, ctx + ": 'estimators' must be \"all\" or a list");
      s.estimators.clear();
      for (const auto& item : e) {
        detail::check_keys(item, {"classifier", "balance", "calibrate"}, ctx + ".estimators");
        s.estimators.push_back({family_from_string(detail::get_or<std::string>(item, "classifier", "", ctx)),
                                detail::get_or(item, "balance", false, ctx),
                                detail::get_or(item, "calibrate", false, ctx)});
      }
    }
  }
  if (j.contains("feature_subsets")) {
    s.subsets.clear();
    for (const auto& sub : j["feature_subsets"]) s.subsets.push_back(detail::subset_from_json(sub, ctx));
  }
  s.seed = detail::get_or<std::uint64_t>(j, "seed", s.seed, ctx);
  s.cv_folds = detail::get_or(j, "cv_folds", s.cv_folds, ctx);
  s.include_leave_one_out = detail::get_or(j, "leave_one_out", s.include_leave_one_out, ctx);
  s.threads = detail::get_or(j, "threads", s.threads, ctx);
  return m;
}

inline RunManifest load_manifest(const std::filesystem::path& path) {
  return manifest_from_json(detail::parse_json_file(path), path.parent_path());
}

}  // namespace entprof
