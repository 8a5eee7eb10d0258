// entprof command-line interface.
//
// Exit codes: 0 success, 1 internal error, 2 input rejected, 3 training
// infeasible.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "entprof/entprof.hpp"

namespace fs = std::filesystem;
using namespace entprof;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitRejected = 2;
constexpr int kExitInfeasible = 3;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kSingleClass:
    case ErrorCode::kTooFewRows:
    case ErrorCode::kNonConvergence:
      return kExitInfeasible;
    case ErrorCode::kInvalidStep:
    case ErrorCode::kEmptyTrajectory:
    case ErrorCode::kMalformedLine:
    case ErrorCode::kSchemaViolation:
    case ErrorCode::kMissingChosenLogprob:
    case ErrorCode::kEmptyInput:
    case ErrorCode::kDomainOverlap:
    case ErrorCode::kEmptyHoldout:
    case ErrorCode::kEmptyDomain:
    case ErrorCode::kKOutOfRange:
    case ErrorCode::kInvalidConfig:
    case ErrorCode::kInfeasibleEntropy:
    case ErrorCode::kTargetOutOfRange:
    case ErrorCode::kIo:
      return kExitRejected;
    default:
      return kExitInternal;
  }
}

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  return in;
}

/// Writes through a temporary file so a failed run never leaves a partial
/// output behind.
void write_output(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
    body(out);
    out.flush();
    if (!out) fail(ErrorCode::kIo, "write failed: " + path.string());
  }
  fs::rename(tmp, path);
}

std::vector<FeatureRecord> load_features(const std::vector<std::string>& paths) {
  std::vector<FeatureRecord> all;
  for (const auto& p : paths) {
    auto in = open_input(p);
    auto recs = read_records(in, p);
    all.insert(all.end(), std::make_move_iterator(recs.begin()), std::make_move_iterator(recs.end()));
  }
  if (all.empty()) fail(ErrorCode::kEmptyInput, "no feature records");
  return all;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string format_optional(const std::optional<double>& v) { return v ? csv_number(*v) : "n/a"; }

// ---------------------------------------------------------------------------

int cmd_extract(const std::vector<std::string>& inputs, const std::string& out_path, bool strict,
                const std::string& csv_path) {
  std::vector<FeatureRecord> records;
  std::size_t rejected = 0;
  for (const auto& path : inputs) {
    auto in = open_input(path);
    ParseReport report;
    try {
      report = parse_traces(in, strict);
    } catch (const Error& e) {
      std::cerr << path << ": " << e.what() << "\n";
      return kExitRejected;
    }
    for (const auto& r : report.rejections) {
      std::cerr << path << ":" << r.line_no << ": rejected: " << r.cause << "\n";
    }
    rejected += report.rejections.size();
    for (const auto& t : report.traces) records.push_back(extract(t));
  }
  write_output(out_path, [&](std::ostream& out) {
    for (const auto& r : records) write_record(out, r);
  });
  if (!csv_path.empty()) write_output(csv_path, [&](std::ostream& out) { write_records_csv(out, records); });
  std::cerr << "extracted " << records.size() << " records, rejected " << rejected << "\n";
  return kExitOk;
}

int cmd_diagnose(const std::vector<std::string>& inputs, const std::string& out_path) {
  auto records = load_features(inputs);
  auto table = diagnose(records);
  if (out_path.empty()) {
    write_diagnostic_csv(std::cout, table);
  } else {
    write_output(out_path, [&](std::ostream& out) { write_diagnostic_csv(out, table); });
  }
  return kExitOk;
}

int cmd_train(const std::vector<std::string>& inputs, const std::string& group_list, const std::string& config_path,
              const std::string& out_path, std::optional<std::uint64_t> seed) {
  TrainConfig cfg = config_path.empty() ? TrainConfig{} : load_train_config(config_path);
  if (seed) cfg.seed = *seed;
  auto group = split_list(group_list);
  if (group.empty()) fail(ErrorCode::kInvalidConfig, "--group lists no domains");
  std::sort(group.begin(), group.end());
  group.erase(std::unique(group.begin(), group.end()), group.end());

  auto corpus = Corpus::from_records(load_features(inputs));
  Matrix x(0, kNumFeatures);
  std::vector<int> y;
  for (const auto& id : group) {
    const auto& d = corpus.at(id);
    if (!d.fully_labeled()) fail(ErrorCode::kSchemaViolation, "training domain '" + id + "' has unlabeled records");
    for (std::size_t i = 0; i < d.size(); ++i) {
      x.push_row(d.profiles.row(i));
      y.push_back(*d.labels[i]);
    }
  }
  auto model = train_model(x, y, cfg, group_id(group));
  write_output(out_path, [&](std::ostream& out) { out << serialize_model(model); });
  std::cerr << "trained " << to_string(model.family) << " on " << model.metadata.group << " ("
            << model.metadata.n_train << " rows): " << describe(model.family, model.metadata.hyperparameters) << "\n";
  return kExitOk;
}

int cmd_estimate(const std::string& model_path, const std::vector<std::string>& inputs,
                 const std::string& holdout_list, const std::string& out_path) {
  auto model_in = open_input(model_path);
  auto model = parse_model(model_in);
  auto corpus = Corpus::from_records(load_features(inputs));
  auto holdout = holdout_list.empty() ? corpus.ids() : split_list(holdout_list);
  auto summary = evaluate_holdout(model, corpus, holdout);
  if (out_path.empty()) {
    write_estimate_report(std::cout, summary.estimates);
  } else {
    write_output(out_path, [&](std::ostream& out) { write_estimate_report(out, summary.estimates); });
  }
  std::cerr << "domains " << summary.estimates.size() << " aee " << format_optional(summary.aee) << " spearman "
            << format_optional(summary.spearman) << "\n";
  return kExitOk;
}

int cmd_sweep(const std::string& manifest_path, const std::string& out_dir_flag, bool loo_flag,
              std::optional<std::uint64_t> seed, std::optional<unsigned> threads) {
  auto manifest = load_manifest(manifest_path);
  if (seed) manifest.sweep.seed = *seed;
  if (threads) manifest.sweep.threads = *threads;
  if (loo_flag) manifest.sweep.include_leave_one_out = true;
  fs::path out_dir = out_dir_flag.empty() ? manifest.output_dir : fs::path(out_dir_flag);
  if (out_dir.empty()) fail(ErrorCode::kInvalidConfig, "no output directory (use --out or output_dir)");

  std::vector<std::string> paths;
  for (const auto& p : manifest.features) paths.push_back(p.string());
  auto corpus = Corpus::from_records(load_features(paths));

  auto result = run_sweep(corpus, manifest.sweep);
  write_output(out_dir / "results.csv", [&](std::ostream& out) { write_results_csv(out, result); });
  write_output(out_dir / "domain_estimates.csv", [&](std::ostream& out) { write_domain_estimates_csv(out, result); });
  write_output(out_dir / "difficulty_pairs.csv",
               [&](std::ostream& out) { write_difficulty_pairs_csv(out, result.rows); });
  write_output(out_dir / "aggregate.csv", [&](std::ostream& out) {
    std::vector<AggregateRow> agg;
    for (GroupBy by : {GroupBy::kK, GroupBy::kClassifier, GroupBy::kCalibration, GroupBy::kBalance}) {
      auto part = aggregate(result.rows, by);
      agg.insert(agg.end(), part.begin(), part.end());
    }
    write_aggregate_csv(out, agg);
  });
  std::size_t failed = 0;
  for (const auto& r : result.rows) failed += !r.ok;
  std::cerr << "sweep rows " << result.rows.size() << " failed " << failed << "\n";

  if (manifest.sweep.include_leave_one_out) {
    auto loo = leave_one_out(corpus, manifest.sweep);
    write_output(out_dir / "loo_results.csv", [&](std::ostream& out) { write_results_csv(out, loo.sweep); });
    write_output(out_dir / "loo_domain_estimates.csv",
                 [&](std::ostream& out) { write_domain_estimates_csv(out, loo.sweep); });
    write_output(out_dir / "loo_summary.csv", [&](std::ostream& out) { write_leave_one_out_csv(out, loo.summaries); });
    std::cerr << "leave-one-out rows " << loo.sweep.rows.size() << "\n";
  }
  return kExitOk;
}

int cmd_synth(const std::string& spec_path, const std::string& out_path, std::optional<std::uint64_t> seed) {
  auto spec = load_synth_spec(spec_path);
  if (seed) spec.seed = *seed;
  auto traces = generate(spec);
  write_output(out_path, [&](std::ostream& out) {
    for (const auto& t : traces) write_trace(out, t);
  });
  std::cerr << "generated " << traces.size() << " traces\n";
  return kExitOk;
}

int cmd_report(const std::string& results_path, const std::vector<std::string>& by, const std::string& out_path,
               const std::string& pairs_path) {
  auto in = open_input(results_path);
  auto rows = read_results_csv(in);
  std::vector<AggregateRow> agg;
  for (const auto& b : by) {
    auto part = aggregate(rows, group_by_from_string(b));
    agg.insert(agg.end(), part.begin(), part.end());
  }
  if (out_path.empty()) {
    write_aggregate_csv(std::cout, agg);
  } else {
    write_output(out_path, [&](std::ostream& out) { write_aggregate_csv(out, agg); });
  }
  if (!pairs_path.empty()) {
    write_output(pairs_path, [&](std::ostream& out) { write_difficulty_pairs_csv(out, rows); });
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entropy-profile correctness estimation from decoding logs"};
  app.require_subcommand(1);
  std::uint64_t seed_value = 42;
  auto* seed_opt = app.add_option("--seed", seed_value, "Random seed (default 42)");
  auto seed = [&]() -> std::optional<std::uint64_t> {
    return seed_opt->count() ? std::optional<std::uint64_t>(seed_value) : std::nullopt;
  };

  std::vector<std::string> inputs;
  std::string out, csv, group, config, model, holdout, pairs, manifest, spec, results;
  std::vector<std::string> by;
  bool strict = false, loo = false;
  unsigned threads = 0;

  auto* extract_cmd = app.add_subcommand("extract", "Trace JSONL -> feature cache");
  extract_cmd->add_option("traces", inputs, "Trace JSONL files")->required()->check(CLI::ExistingFile);
  extract_cmd->add_option("--out", out, "Feature cache (JSONL)")->required();
  extract_cmd->add_option("--csv", csv, "Also write a flat CSV");
  extract_cmd->add_flag("--strict", strict, "Abort on the first invalid record (exit 2)");

  auto* diagnose_cmd = app.add_subcommand("diagnose", "Per-domain AUROC of every single statistic");
  diagnose_cmd->add_option("features", inputs, "Feature caches")->required()->check(CLI::ExistingFile);
  diagnose_cmd->add_option("--out", out, "Output CSV (default stdout)");

  auto* train_cmd = app.add_subcommand("train", "Train a correctness model on a group of domains");
  train_cmd->add_option("features", inputs, "Feature caches")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--group", group, "Comma-separated training domains")->required();
  train_cmd->add_option("--config", config, "Training config JSON")->check(CLI::ExistingFile);
  train_cmd->add_option("--out", out, "Model file")->required();

  auto* estimate_cmd = app.add_subcommand("estimate", "Estimate per-domain accuracy with a trained model");
  estimate_cmd->add_option("model", model, "Model file")->required()->check(CLI::ExistingFile);
  estimate_cmd->add_option("features", inputs, "Feature caches")->required()->check(CLI::ExistingFile);
  estimate_cmd->add_option("--holdout", holdout, "Comma-separated domains (default: all present)");
  estimate_cmd->add_option("--out", out, "Report CSV (default stdout)");

  auto* sweep_cmd = app.add_subcommand("sweep", "Exhaustive train/test composition sweep");
  sweep_cmd->add_option("manifest", manifest, "Run manifest JSON")->required()->check(CLI::ExistingFile);
  sweep_cmd->add_option("--out", out, "Output directory");
  sweep_cmd->add_flag("--leave-one-out", loo, "Also run the leave-one-out protocol");
  auto* threads_opt = sweep_cmd->add_option("--threads", threads, "Worker threads (0: all cores)");

  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic labeled trace corpus");
  synth_cmd->add_option("spec", spec, "Synth spec JSON")->required()->check(CLI::ExistingFile);
  synth_cmd->add_option("--out", out, "Trace JSONL")->required();

  auto* report_cmd = app.add_subcommand("report", "Aggregate sweep results");
  report_cmd->add_option("results", results, "results.csv from a sweep")->required()->check(CLI::ExistingFile);
  report_cmd->add_option("--by", by, "k, classifier, calibration, balance or subset (repeatable)")
      ->required()
      ->check(CLI::IsMember({"k", "classifier", "calibration", "balance", "subset"}));
  report_cmd->add_option("--out", out, "Aggregate CSV (default stdout)");
  report_cmd->add_option("--pairs", pairs, "Write (weighted_group_accuracy, aee) pairs here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kExitRejected;
  }

  try {
    if (*extract_cmd) return cmd_extract(inputs, out, strict, csv);
    if (*diagnose_cmd) return cmd_diagnose(inputs, out);
    if (*train_cmd) return cmd_train(inputs, group, config, out, seed());
    if (*estimate_cmd) return cmd_estimate(model, inputs, holdout, out);
    if (*sweep_cmd) {
      return cmd_sweep(manifest, out, loo, seed(),
                       threads_opt->count() ? std::optional<unsigned>(threads) : std::nullopt);
    }
    if (*synth_cmd) return cmd_synth(spec, out, seed());
    if (*report_cmd) return cmd_report(results, by, out, pairs);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}
