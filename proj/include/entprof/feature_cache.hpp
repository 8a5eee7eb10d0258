#pragma once

// Per-instance feature cache: profile + baselines + label, persisted as
// JSONL between pipeline stages (or exported as CSV).

#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "entprof/baselines.hpp"
#include "entprof/csv.hpp"
#include "entprof/error.hpp"
#include "entprof/features.hpp"
#include "entprof/trace.hpp"

namespace entprof {

struct FeatureRecord {
  std::string instance_id;
  std::string domain_id;
  std::string model_id;
  std::optional<int> label;
  EntropyProfile features;
  BaselineVector baselines;

  bool operator==(const FeatureRecord&) const = default;
};

inline FeatureRecord extract(const DecodingTrace& trace) {
  auto traj = entropy_trajectory(trace);
  FeatureRecord r;
  r.instance_id = trace.instance_id;
  r.domain_id = trace.domain_id;
  r.model_id = trace.model_id;
  r.label = trace.label;
  r.features = summarize(traj);
  r.baselines = compute_baselines(trace, traj);
  return r;
}

inline nlohmann::ordered_json record_to_json(const FeatureRecord& r) {
  nlohmann::ordered_json j;
  j["instance_id"] = r.instance_id;
  j["domain_id"] = r.domain_id;
  j["model_id"] = r.model_id;
  j["label"] = r.label ? nlohmann::ordered_json(*r.label) : nlohmann::ordered_json(nullptr);
  j["features"] = r.features.values;
  nlohmann::ordered_json b;
  auto arr = r.baselines.as_array();
  for (std::size_t i = 0; i < kNumBaselines; ++i) b[std::string(kBaselineNames[i])] = arr[i];
  j["baselines"] = std::move(b);
  return j;
}

inline void write_record(std::ostream& out, const FeatureRecord& r) {
  out << record_to_json(r).dump() << '\n';
}

inline FeatureRecord record_from_json(const nlohmann::json& j) {
  auto bad = [](const std::string& field) { fail(ErrorCode::kSchemaViolation, field); };
  if (!j.is_object()) bad("record");
  FeatureRecord r;
  for (const char* key : {"instance_id", "domain_id"}) {
    if (!j.contains(key) || !j[key].is_string()) bad(key);
  }
  r.instance_id = j["instance_id"].get<std::string>();
  r.domain_id = j["domain_id"].get<std::string>();
  if (j.contains("model_id") && j["model_id"].is_string()) r.model_id = j["model_id"].get<std::string>();
  if (j.contains("label") && !j["label"].is_null()) {
    const auto& l = j["label"];
    if (!l.is_number_integer() || (l.get<long long>() != 0 && l.get<long long>() != 1)) bad("label");
    r.label = l.get<int>();
  }
  if (!j.contains("features") || !j["features"].is_array() || j["features"].size() != kNumFeatures) {
    bad("features");
  }
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    if (!j["features"][i].is_number()) bad("features");
    r.features[i] = j["features"][i].get<double>();
  }
  std::array<double, kNumBaselines> b{};
  if (!j.contains("baselines") || !j["baselines"].is_object()) bad("baselines");
  for (std::size_t i = 0; i < kNumBaselines; ++i) {
    std::string name(kBaselineNames[i]);
    const auto& obj = j["baselines"];
    auto it = obj.find(name);
    if (it == obj.end() && name == "se_sum") {
      it = obj.find("eas");
      if (it == obj.end()) it = obj.find("sea");
    }
    if (it == obj.end() || !it->is_number()) bad("baselines." + name);
    b[i] = it->get<double>();
  }
  r.baselines = BaselineVector::from_array(b);
  return r;
}

inline std::vector<FeatureRecord> read_records(std::istream& in, const std::string& source = "<stream>") {
  std::vector<FeatureRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    auto where = source + ":" + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      fail(ErrorCode::kMalformedLine, where + ": " + e.what());
    }
    try {
      out.push_back(record_from_json(j));
    } catch (const Error& e) {
      fail(e.code(), where + ": " + e.what());
    }
  }
  return out;
}

inline void write_records_csv(std::ostream& out, const std::vector<FeatureRecord>& records) {
  std::vector<std::string> row = {"instance_id", "domain_id", "model_id", "label"};
  for (auto n : kFeatureNames) row.emplace_back(n);
  for (auto n : kBaselineNames) row.emplace_back(n);
  write_csv_row(out, row);
  for (const auto& r : records) {
    row = {r.instance_id, r.domain_id, r.model_id, r.label ? std::to_string(*r.label) : ""};
    for (double v : r.features.values) row.push_back(csv_number(v));
    for (double v : r.baselines.as_array()) row.push_back(csv_number(v));
    write_csv_row(out, row);
  }
}

}  // namespace entprof
