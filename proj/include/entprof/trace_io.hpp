#pragma once

// JSON Lines reader/writer for decoding traces.
//
// Record layout, one per line:
//   {"instance_id": str, "domain_id": str, "model_id": str, "label": 0|1|null,
//    "steps": [{"top": [[token, logprob], ...], "chosen_logprob": float}, ...]}

#include <algorithm>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "entprof/error.hpp"
#include "entprof/trace.hpp"

namespace entprof {

struct LineRejection {
  std::size_t line_no = 0;  // 1-based
  ErrorCode code = ErrorCode::kMalformedLine;
  std::string cause;
};

struct ParseReport {
  std::vector<DecodingTrace> traces;
  std::vector<LineRejection> rejections;
  std::size_t lines_read = 0;
};

namespace detail {

struct SchemaError {
  std::string field;
};

inline const nlohmann::json& require(const nlohmann::json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError{key};
  return *it;
}

inline std::string require_string(const nlohmann::json& obj, const char* key) {
  const auto& v = require(obj, key);
  if (!v.is_string()) throw SchemaError{key};
  return v.get<std::string>();
}

inline double require_number(const nlohmann::json& v, const char* field) {
  if (!v.is_number()) throw SchemaError{field};
  return v.get<double>();
}

inline DecodingTrace trace_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw SchemaError{"record"};
  DecodingTrace trace;
  trace.instance_id = require_string(j, "instance_id");
  trace.domain_id = require_string(j, "domain_id");
  if (auto it = j.find("model_id"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw SchemaError{"model_id"};
    trace.model_id = it->get<std::string>();
  }
  if (auto it = j.find("label"); it != j.end() && !it->is_null()) {
    if (!it->is_number_integer()) throw SchemaError{"label"};
    auto v = it->get<long long>();
    if (v != 0 && v != 1) throw SchemaError{"label"};
    trace.label = static_cast<int>(v);
  }
  const auto& steps = require(j, "steps");
  if (!steps.is_array() || steps.empty()) throw SchemaError{"steps"};
  trace.steps.reserve(steps.size());
  for (const auto& s : steps) {
    if (!s.is_object()) throw SchemaError{"steps"};
    TopKStep step;
    const auto& top = require(s, "top");
    if (!top.is_array() || top.empty() || top.size() > kMaxTopK) throw SchemaError{"top"};
    step.entries.reserve(top.size());
    for (const auto& pair : top) {
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string()) throw SchemaError{"top"};
      step.entries.push_back({pair[0].get<std::string>(), require_number(pair[1], "logprob")});
    }
    step.chosen_logprob = require_number(require(s, "chosen_logprob"), "chosen_logprob");
    // Normalize entry order; stable so equal logprobs keep file order.
    std::stable_sort(step.entries.begin(), step.entries.end(),
                     [](const TopKEntry& a, const TopKEntry& b) { return a.logprob > b.logprob; });
    trace.steps.push_back(std::move(step));
  }
  if (auto field = check_trace(trace); !field.empty()) throw SchemaError{field};
  return trace;
}

}  // namespace detail

inline nlohmann::ordered_json trace_to_json(const DecodingTrace& trace) {
  nlohmann::ordered_json j;
  j["instance_id"] = trace.instance_id;
  j["domain_id"] = trace.domain_id;
  j["model_id"] = trace.model_id;
  j["label"] = trace.label ? nlohmann::ordered_json(*trace.label) : nlohmann::ordered_json(nullptr);
  auto steps = nlohmann::ordered_json::array();
  for (const auto& step : trace.steps) {
    auto top = nlohmann::ordered_json::array();
    for (const auto& e : step.entries) top.push_back({e.token, e.logprob});
    nlohmann::ordered_json s;
    s["top"] = std::move(top);
    s["chosen_logprob"] = step.chosen_logprob;
    steps.push_back(std::move(s));
  }
  j["steps"] = std::move(steps);
  return j;
}

inline void write_trace(std::ostream& out, const DecodingTrace& trace) {
  out << trace_to_json(trace).dump() << '\n';
}

/// Parses one JSONL record. Throws Error(kMalformedLine | kSchemaViolation).
inline DecodingTrace parse_trace_line(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::kMalformedLine, e.what());
  }
  try {
    return detail::trace_from_json(j);
  } catch (const detail::SchemaError& e) {
    fail(ErrorCode::kSchemaViolation, e.field);
  }
}

/// Reads a JSONL trace stream. In strict mode the first bad record throws
/// with its line number; otherwise bad records are skipped and reported.
/// Blank lines are ignored.
inline ParseReport parse_traces(std::istream& in, bool strict) {
  ParseReport report;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    ++report.lines_read;
    try {
      report.traces.push_back(parse_trace_line(line));
    } catch (const Error& e) {
      if (strict) fail(e.code(), "line " + std::to_string(line_no) + ": " + e.what());
      report.rejections.push_back({line_no, e.code(), e.what()});
    }
  }
  return report;
}

}  // namespace entprof
