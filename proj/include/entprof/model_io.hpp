#pragma once

// Self-describing JSON persistence for CorrectnessModel.

#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "entprof/classifier.hpp"
#include "entprof/error.hpp"
#include "entprof/features.hpp"
#include "entprof/model.hpp"

namespace entprof {

inline constexpr int kModelFormatVersion = 1;

namespace detail {

using ojson = nlohmann::ordered_json;

inline ojson tree_node_to_json(const Tree& t, std::size_t i) {
  const TreeNode& n = t.nodes[i];
  ojson j;
  j["value"] = n.value;
  j["n_samples"] = n.n_samples;
  if (n.feature >= 0) {
    j["feature"] = n.feature;
    j["threshold"] = n.threshold;
    j["left"] = tree_node_to_json(t, static_cast<std::size_t>(n.left));
    j["right"] = tree_node_to_json(t, static_cast<std::size_t>(n.right));
  }
  return j;
}

inline void tree_node_from_json(const nlohmann::json& j, int depth, Tree& t) {
  std::size_t id = t.nodes.size();
  t.nodes.emplace_back();
  t.nodes[id].value = j.at("value").get<double>();
  t.nodes[id].n_samples = j.at("n_samples").get<std::uint32_t>();
  t.nodes[id].depth = depth;
  if (j.contains("feature")) {
    int feature = j.at("feature").get<int>();
    double threshold = j.at("threshold").get<double>();
    int left = static_cast<int>(t.nodes.size());
    tree_node_from_json(j.at("left"), depth + 1, t);
    int right = static_cast<int>(t.nodes.size());
    tree_node_from_json(j.at("right"), depth + 1, t);
    t.nodes[id].feature = feature;
    t.nodes[id].threshold = threshold;
    t.nodes[id].left = left;
    t.nodes[id].right = right;
  }
}

inline ojson base_to_json(const BaseModel& m) {
  ojson j;
  if (auto* lr = std::get_if<LogRegModel>(&m)) {
    j["weights"] = lr->weights;
    j["intercept"] = lr->intercept;
  } else if (auto* rf = std::get_if<ForestModel>(&m)) {
    j["max_depth"] = rf->max_depth;
    j["min_samples_split"] = rf->min_samples_split;
    auto trees = ojson::array();
    for (const auto& t : rf->trees) trees.push_back(tree_node_to_json(t, 0));
    j["trees"] = std::move(trees);
  } else {
    const auto& mlp = std::get<MlpModel>(m);
    auto layers = ojson::array();
    for (const auto& L : mlp.layers) {
      ojson l;
      l["rows"] = L.outputs;
      l["cols"] = L.inputs;
      l["weights"] = L.weights;
      l["bias"] = L.bias;
      layers.push_back(std::move(l));
    }
    j["layers"] = std::move(layers);
  }
  return j;
}

inline BaseModel base_from_json(Family family, const nlohmann::json& j) {
  switch (family) {
    case Family::kLogRegL1: {
      LogRegModel m;
      m.weights = j.at("weights").get<std::vector<double>>();
      m.intercept = j.at("intercept").get<double>();
      return m;
    }
    case Family::kRandomForest: {
      ForestModel m;
      m.max_depth = j.at("max_depth").get<int>();
      m.min_samples_split = j.at("min_samples_split").get<int>();
      for (const auto& t : j.at("trees")) {
        Tree tree;
        tree_node_from_json(t, 0, tree);
        m.trees.push_back(std::move(tree));
      }
      return m;
    }
    case Family::kMlp: {
      MlpModel m;
      for (const auto& l : j.at("layers")) {
        DenseLayer L;
        L.outputs = l.at("rows").get<std::size_t>();
        L.inputs = l.at("cols").get<std::size_t>();
        L.weights = l.at("weights").get<std::vector<double>>();
        L.bias = l.at("bias").get<std::vector<double>>();
        if (L.weights.size() != L.inputs * L.outputs || L.bias.size() != L.outputs) {
          fail(ErrorCode::kSchemaViolation, "layer shape");
        }
        m.layers.push_back(std::move(L));
      }
      return m;
    }
  }
  fail(ErrorCode::kSchemaViolation, "family");
}

// Whether a base model reads exactly `width` inputs.
inline bool fits_width(const BaseModel& m, std::size_t width) {
  if (auto* lr = std::get_if<LogRegModel>(&m)) return lr->weights.size() == width;
  if (auto* rf = std::get_if<ForestModel>(&m)) {
    for (const auto& t : rf->trees) {
      for (const auto& n : t.nodes) {
        if (n.feature >= static_cast<int>(width)) return false;
      }
    }
    return true;
  }
  const auto& mlp = std::get<MlpModel>(m);
  if (mlp.layers.empty() || mlp.layers.front().inputs != width || mlp.layers.back().outputs != 1) return false;
  for (std::size_t l = 1; l < mlp.layers.size(); ++l) {
    if (mlp.layers[l].inputs != mlp.layers[l - 1].outputs) return false;
  }
  return true;
}

inline ojson hyper_to_json(Family f, const Hyperparameters& h) {
  ojson j;
  switch (f) {
    case Family::kLogRegL1: j["C"] = h.c; break;
    case Family::kRandomForest:
      j["n_estimators"] = kForestTrees;
      j["max_depth"] = h.max_depth;
      j["min_samples_split"] = h.min_samples_split;
      break;
    case Family::kMlp: j["hidden_layer_sizes"] = h.hidden; break;
  }
  return j;
}

inline Hyperparameters hyper_from_json(Family f, const nlohmann::json& j) {
  Hyperparameters h;
  switch (f) {
    case Family::kLogRegL1: h.c = j.at("C").get<double>(); break;
    case Family::kRandomForest:
      h.max_depth = j.at("max_depth").get<int>();
      h.min_samples_split = j.at("min_samples_split").get<int>();
      break;
    case Family::kMlp: h.hidden = j.at("hidden_layer_sizes").get<std::vector<int>>(); break;
  }
  return h;
}

}  // namespace detail

inline nlohmann::ordered_json model_to_json(const CorrectnessModel& m) {
  using detail::ojson;
  ojson j;
  j["format"] = "entprof-model";
  j["version"] = kModelFormatVersion;
  j["feature_version"] = kFeatureVersion;
  j["family"] = std::string(to_string(m.family));
  auto order = ojson::array();
  for (auto n : kFeatureNames) order.push_back(std::string(n));
  j["feature_order"] = std::move(order);
  j["feature_subset"] = {{"name", m.feature_subset.name}, {"indices", m.feature_subset.indices}};
  j["scaler"] = {{"mean", m.scaler.mean}, {"std", m.scaler.std}};
  auto members = ojson::array();
  for (const auto& mem : m.members) {
    ojson e;
    e["model"] = detail::base_to_json(mem.base);
    if (mem.calibrator) {
      e["calibrator"] = {{"breakpoints", mem.calibrator->breakpoints}, {"values", mem.calibrator->values}};
    } else {
      e["calibrator"] = nullptr;
    }
    members.push_back(std::move(e));
  }
  j["members"] = std::move(members);
  ojson meta;
  meta["group"] = m.metadata.group;
  meta["seed"] = m.metadata.seed;
  meta["balance"] = m.metadata.balance;
  meta["calibrate"] = m.metadata.calibrate;
  meta["hyperparameters"] = detail::hyper_to_json(m.family, m.metadata.hyperparameters);
  auto table = ojson::array();
  for (const auto& row : m.metadata.cv_table) table.push_back({{"params", row.params}, {"mean_auroc", row.mean_auroc}});
  meta["cv_table"] = std::move(table);
  meta["n_train"] = m.metadata.n_train;
  meta["n_positive"] = m.metadata.n_positive;
  j["metadata"] = std::move(meta);
  return j;
}

inline CorrectnessModel model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "entprof-model") fail(ErrorCode::kSchemaViolation, "format");
    if (j.at("version").get<int>() != kModelFormatVersion) fail(ErrorCode::kSchemaViolation, "version");
    if (j.at("feature_version").get<int>() != kFeatureVersion) fail(ErrorCode::kSchemaViolation, "feature_version");
    const auto& order = j.at("feature_order");
    if (order.size() != kNumFeatures) fail(ErrorCode::kSchemaViolation, "feature_order");
    for (std::size_t i = 0; i < kNumFeatures; ++i) {
      if (order[i].get<std::string>() != kFeatureNames[i]) fail(ErrorCode::kSchemaViolation, "feature_order");
    }
    CorrectnessModel m;
    m.family = family_from_string(j.at("family").get<std::string>());
    m.feature_subset.name = j.at("feature_subset").at("name").get<std::string>();
    m.feature_subset.indices = j.at("feature_subset").at("indices").get<std::vector<std::size_t>>();
    validate_subset(m.feature_subset);
    m.scaler.mean = j.at("scaler").at("mean").get<std::vector<double>>();
    m.scaler.std = j.at("scaler").at("std").get<std::vector<double>>();
    if (m.scaler.mean.size() != m.feature_subset.indices.size() || m.scaler.std.size() != m.scaler.mean.size()) {
      fail(ErrorCode::kSchemaViolation, "scaler");
    }
    for (const auto& e : j.at("members")) {
      CalibratedMember mem{detail::base_from_json(m.family, e.at("model")), std::nullopt};
      if (!detail::fits_width(mem.base, m.feature_subset.indices.size())) fail(ErrorCode::kSchemaViolation, "model width");
      const auto& c = e.at("calibrator");
      if (!c.is_null()) {
        IsotonicMap map;
        map.breakpoints = c.at("breakpoints").get<std::vector<double>>();
        map.values = c.at("values").get<std::vector<double>>();
        if (map.breakpoints.size() != map.values.size()) fail(ErrorCode::kSchemaViolation, "calibrator");
        mem.calibrator = std::move(map);
      }
      m.members.push_back(std::move(mem));
    }
    if (m.members.empty()) fail(ErrorCode::kSchemaViolation, "members");
    const auto& meta = j.at("metadata");
    m.metadata.group = meta.at("group").get<std::string>();
    m.metadata.seed = meta.at("seed").get<std::uint64_t>();
    m.metadata.balance = meta.at("balance").get<bool>();
    m.metadata.calibrate = meta.at("calibrate").get<bool>();
    m.metadata.hyperparameters = detail::hyper_from_json(m.family, meta.at("hyperparameters"));
    for (const auto& row : meta.at("cv_table")) {
      m.metadata.cv_table.push_back({row.at("params").get<std::string>(), row.at("mean_auroc").get<double>()});
    }
    m.metadata.n_train = meta.at("n_train").get<std::size_t>();
    m.metadata.n_positive = meta.at("n_positive").get<std::size_t>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kSchemaViolation, std::string("model file: ") + e.what());
  }
}

inline std::string serialize_model(const CorrectnessModel& m) { return model_to_json(m).dump(1) + "\n"; }

inline CorrectnessModel parse_model(std::istream& in) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::kMalformedLine, std::string("model file: ") + e.what());
  }
  return model_from_json(j);
}

inline CorrectnessModel parse_model(const std::string& text) {
  std::istringstream in(text);
  return parse_model(in);
}

}  // namespace entprof
