#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

const fs::path& work() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "entprof_test_cli";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int run(const std::string& args) {
  std::string cmd = std::string(ENTPROF_CLI) + " " + args + " 2>" + (work() / "stderr.txt").string();
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_lines(const fs::path& p) {
  auto s = slurp(p);
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

std::string path(const std::string& name) { return (work() / name).string(); }

void write(const std::string& name, const std::string& text) { std::ofstream(work() / name) << text; }

// A small labeled corpus shared by the tests below.
void ensure_corpus() {
  if (fs::exists(work() / "features.jsonl")) return;
  write("spec.json", R"({"version":1,"domains":[
      {"domain_id":"easy","n_instances":80,"true_accuracy":0.85},
      {"domain_id":"mid","n_instances":80,"true_accuracy":0.5},
      {"domain_id":"hard","n_instances":80,"true_accuracy":0.2}],"seed":3})");
  ASSERT_EQ(run("synth " + path("spec.json") + " --out " + path("traces.jsonl")), 0);
  ASSERT_EQ(run("extract " + path("traces.jsonl") + " --out " + path("features.jsonl")), 0);
}

}  // namespace

TEST(Cli, SynthThenExtractKeepsEveryRecord) {
  ensure_corpus();
  EXPECT_EQ(count_lines(work() / "traces.jsonl"), 240u);
  EXPECT_EQ(count_lines(work() / "features.jsonl"), 240u);
  ASSERT_EQ(run("extract " + path("traces.jsonl") + " --out " + path("f2.jsonl") + " --csv " + path("f2.csv")), 0);
  EXPECT_EQ(count_lines(work() / "f2.csv"), 241u);
}

TEST(Cli, ExtractLenientAndStrict) {
  ensure_corpus();
  auto traces = slurp(work() / "traces.jsonl");
  write("corrupt.jsonl", traces.substr(0, traces.find('\n') + 1) + "{broken\n" + traces.substr(traces.find('\n') + 1));
  EXPECT_EQ(run("extract " + path("corrupt.jsonl") + " --out " + path("lenient.jsonl")), 0);
  EXPECT_EQ(count_lines(work() / "lenient.jsonl"), 240u);
  EXPECT_NE(slurp(work() / "stderr.txt").find(":2: rejected"), std::string::npos);
  EXPECT_NE(slurp(work() / "stderr.txt").find("rejected 1"), std::string::npos);
  EXPECT_EQ(run("extract " + path("corrupt.jsonl") + " --out " + path("strict.jsonl") + " --strict"), 2);
  EXPECT_FALSE(fs::exists(work() / "strict.jsonl"));
}

TEST(Cli, TrainIsReproducibleAndEstimateWorks) {
  ensure_corpus();
  write("train.json", R"({"version":1,"classifier":"logreg_l1","balance":true,"calibrate":true})");
  std::string train = "train " + path("features.jsonl") + " --group easy,hard --config " + path("train.json");
  ASSERT_EQ(run(train + " --out " + path("m1.json")), 0);
  ASSERT_EQ(run(train + " --out " + path("m2.json")), 0);
  EXPECT_EQ(slurp(work() / "m1.json"), slurp(work() / "m2.json"));
  ASSERT_EQ(run("--seed 9 " + train + " --out " + path("m3.json")), 0);
  EXPECT_NE(slurp(work() / "m1.json"), slurp(work() / "m3.json"));

  ASSERT_EQ(run("estimate " + path("m1.json") + " " + path("features.jsonl") + " --holdout mid --out " +
                path("est.csv")),
            0);
  auto report = slurp(work() / "est.csv");
  EXPECT_EQ(report.rfind("domain_id,n,estimated_accuracy,true_accuracy,abs_error\nmid,80,", 0), 0u) << report;
  EXPECT_NE(slurp(work() / "stderr.txt").find("aee"), std::string::npos);

  EXPECT_EQ(run("estimate " + path("m1.json") + " " + path("features.jsonl") + " --holdout mid,hard"), 2);
  EXPECT_NE(slurp(work() / "stderr.txt").find("DomainOverlap"), std::string::npos);
}

TEST(Cli, TrainingInfeasibility) {
  write("allright.json", R"({"version":1,"domains":[{"domain_id":"solo","n_instances":30,"true_accuracy":1.0}]})");
  ASSERT_EQ(run("synth " + path("allright.json") + " --out " + path("solo_traces.jsonl")), 0);
  ASSERT_EQ(run("extract " + path("solo_traces.jsonl") + " --out " + path("solo.jsonl")), 0);
  EXPECT_EQ(run("train " + path("solo.jsonl") + " --group solo --out " + path("solo_model.json")), 3);
  EXPECT_NE(slurp(work() / "stderr.txt").find("SingleClass"), std::string::npos);
}

TEST(Cli, RejectsBadConfigAndMissingDomain) {
  ensure_corpus();
  write("typo.json", R"({"version":1,"clasifier":"mlp"})");
  EXPECT_EQ(run("train " + path("features.jsonl") + " --group easy --config " + path("typo.json") + " --out " +
                path("x.json")),
            2);
  EXPECT_EQ(run("train " + path("features.jsonl") + " --group nowhere --out " + path("x.json")), 2);
  EXPECT_EQ(run("frobnicate"), 2);
}

TEST(Cli, DiagnoseWritesTable) {
  ensure_corpus();
  ASSERT_EQ(run("diagnose " + path("features.jsonl") + " --out " + path("diag.csv")), 0);
  EXPECT_EQ(count_lines(work() / "diag.csv"), 21u);
  EXPECT_EQ(slurp(work() / "diag.csv").rfind("statistic,orientation,easy,hard,mid\n", 0), 0u);
}

TEST(Cli, SweepAndReport) {
  ensure_corpus();
  write("manifest.json", R"({"version":1,"features":["features.jsonl"],"ks":[1,2],
      "estimators":[{"classifier":"logreg_l1","balance":true,"calibrate":false},
                    {"classifier":"logreg_l1","balance":true,"calibrate":true}],
      "leave_one_out":true})");
  ASSERT_EQ(run("sweep " + path("manifest.json") + " --out " + path("sweep1") + " --threads 1"), 0);
  ASSERT_EQ(run("sweep " + path("manifest.json") + " --out " + path("sweep2") + " --threads 3"), 0);
  for (auto f : {"results.csv", "domain_estimates.csv", "difficulty_pairs.csv", "aggregate.csv", "loo_results.csv",
                 "loo_summary.csv"}) {
    ASSERT_TRUE(fs::exists(work() / "sweep1" / f)) << f;
    EXPECT_EQ(slurp(work() / "sweep1" / f), slurp(work() / "sweep2" / f)) << f;
  }
  EXPECT_EQ(count_lines(work() / "sweep1" / "results.csv"), 1u + (3u + 3u) * 2u);
  EXPECT_EQ(count_lines(work() / "sweep1" / "loo_results.csv"), 1u + 3u * 2u);

  ASSERT_EQ(run("report " + path("sweep1/results.csv") + " --by k --by calibration --out " + path("agg.csv") +
                " --pairs " + path("pairs.csv")),
            0);
  auto agg = slurp(work() / "agg.csv");
  EXPECT_NE(agg.find("\nk,1,"), std::string::npos);
  EXPECT_NE(agg.find("\nk,2,"), std::string::npos);
  EXPECT_NE(agg.find("\ncalibration,true,"), std::string::npos);
  EXPECT_EQ(count_lines(work() / "pairs.csv"), 13u);
  EXPECT_EQ(run("report " + path("sweep1/results.csv") + " --by colour"), 2);
}

TEST(Cli, DemoConfigsParse) {
  const fs::path demo = fs::path(ENTPROF_SOURCE_DIR) / "demo" / "configs";
  ASSERT_EQ(run("synth " + (demo / "synth_spec.json").string() + " --out " + path("demo_traces.jsonl")), 0);
  EXPECT_EQ(count_lines(work() / "demo_traces.jsonl"), 1500u);
}
