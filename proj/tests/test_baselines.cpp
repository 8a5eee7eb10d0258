#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "entprof/baselines.hpp"
#include "entprof/feature_cache.hpp"

using namespace entprof;

namespace {

TopKStep step(const std::vector<double>& p, double chosen) {
  TopKStep s;
  for (std::size_t i = 0; i < p.size(); ++i) s.entries.push_back({"t" + std::to_string(i), std::log(p[i])});
  s.chosen_logprob = chosen;
  return s;
}

DecodingTrace random_trace(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> len(1, 30), width(1, 20);
  std::exponential_distribution<double> ex(1.0);
  DecodingTrace t;
  t.instance_id = "r";
  int n = len(rng);
  for (int i = 0; i < n; ++i) {
    std::vector<double> p(static_cast<std::size_t>(width(rng)));
    double s = 0;
    for (auto& v : p) s += (v = ex(rng) + 1e-9);
    for (auto& v : p) v /= s * 1.05;
    std::sort(p.rbegin(), p.rend());
    auto k = rng() % p.size();
    t.steps.push_back(step(p, std::log(p[k])));
  }
  return t;
}

}  // namespace

TEST(Baselines, FullyConfidentDecode) {
  DecodingTrace t;
  t.steps.assign(4, step({1.0}, 0.0));
  auto b = compute_baselines(t);
  EXPECT_EQ(b.nll_avg, 0.0);
  EXPECT_EQ(b.nll_max, 0.0);
  EXPECT_EQ(b.nll_sum, 0.0);
  EXPECT_EQ(b.lntp, 1.0);
  EXPECT_EQ(b.mtp, 1.0);
  EXPECT_EQ(b.ppl, 1.0);
  EXPECT_EQ(b.se_sum, 0.0);
}

TEST(Baselines, TwoCoinFlips) {
  DecodingTrace t;
  t.steps.assign(2, step({0.5, 0.5}, std::log(0.5)));
  auto b = compute_baselines(t);
  EXPECT_NEAR(b.nll_avg, 0.6931471805599453, 1e-12);
  EXPECT_NEAR(b.lntp, 0.5, 1e-12);
  EXPECT_NEAR(b.mtp, 0.5, 1e-12);
  EXPECT_NEAR(b.ppl, 2.0, 1e-12);
}

TEST(Baselines, EntropySumOfThreeSteps) {
  DecodingTrace t;
  t.steps = {step({1.0}, 0.0), step(std::vector<double>(20, 0.05), std::log(0.05)),
             step({0.5, 0.25, 0.25}, std::log(0.5))};
  auto b = compute_baselines(t);
  EXPECT_NEAR(b.se_sum, 4.0354530443939089, 1e-9);
  EXPECT_NEAR(b.se_max, 2.995732273553991, 1e-9);
}

TEST(Baselines, Identities) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 1000; ++trial) {
    auto t = random_trace(rng);
    auto b = compute_baselines(t);
    const double n = static_cast<double>(t.steps.size());
    EXPECT_NEAR(b.nll_avg, b.nll_sum / n, 1e-12 * std::max(1.0, b.nll_avg));
    EXPECT_NEAR(b.se_avg, b.se_sum / n, 1e-12);
    EXPECT_NEAR(b.ppl * b.lntp, 1.0, 1e-9);
    EXPECT_NEAR(b.mtp, std::exp(-b.nll_max), 1e-12);
    EXPECT_GE(b.nll_avg, 0.0);
    EXPECT_GT(b.lntp, 0.0);
    EXPECT_LE(b.lntp, 1.0);
    EXPECT_GT(b.mtp, 0.0);
    EXPECT_LE(b.mtp, 1.0);
    EXPECT_GE(b.ppl, 1.0);
  }
}

TEST(Baselines, SharedWithProfile) {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 300; ++trial) {
    auto r = extract(random_trace(rng));
    EXPECT_EQ(r.baselines.se_sum, r.features[kSea]);
    EXPECT_EQ(r.baselines.se_max, r.features[kMax]);
    EXPECT_NEAR(r.baselines.se_avg, r.features[kMean], 1e-12);
  }
}

TEST(Baselines, AppendingCertainStepKeepsMaximaAndSums) {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 300; ++trial) {
    auto t = random_trace(rng);
    auto a = compute_baselines(t);
    t.steps.push_back(step({1.0}, 0.0));
    auto b = compute_baselines(t);
    EXPECT_EQ(b.se_max, a.se_max);
    EXPECT_EQ(b.nll_max, a.nll_max);
    EXPECT_EQ(b.mtp, a.mtp);
    EXPECT_EQ(b.nll_sum, a.nll_sum);
    EXPECT_EQ(b.se_sum, a.se_sum);
  }
}

TEST(Baselines, ChosenTokenOutsideTopK) {
  DecodingTrace t;
  t.steps = {step({0.9}, std::log(0.01))};
  auto b = compute_baselines(t);
  EXPECT_NEAR(b.nll_max, -std::log(0.01), 1e-12);
}

TEST(Baselines, BadChosenLogprob) {
  DecodingTrace t;
  t.steps = {step({0.9}, std::nan(""))};
  try {
    compute_baselines(t, {0.1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingChosenLogprob);
  }
}

TEST(Orientation, Table) {
  for (auto m : {"lntp", "mtp", "h_skew", "h_kurt"}) EXPECT_EQ(orientation_of(m), Orientation::kLowerMeansIncorrect);
  for (auto m : {"se_avg", "se_max", "se_sum", "nll_avg", "nll_max", "nll_sum", "ppl", "h_max", "h_mean", "h_std",
                 "h_q10", "h_q25", "h_q50", "h_q75", "h_q90", "h_sea"}) {
    EXPECT_EQ(orientation_of(m), Orientation::kHigherMeansIncorrect) << m;
  }
  EXPECT_EQ(canonical_metric_name("EAS"), "se_sum");
  EXPECT_EQ(canonical_metric_name("sea"), "se_sum");
  EXPECT_EQ(canonical_metric_name("MTP"), "mtp");
}

TEST(FeatureCache, RoundTripIsExact) {
  std::mt19937_64 rng(34);
  std::stringstream ss;
  std::vector<FeatureRecord> recs;
  for (int i = 0; i < 50; ++i) {
    auto t = random_trace(rng);
    t.instance_id = "i" + std::to_string(i);
    t.domain_id = i % 2 ? "a" : "b";
    if (i % 5) t.label = i % 3 == 0;
    recs.push_back(extract(t));
    write_record(ss, recs.back());
  }
  auto back = read_records(ss);
  EXPECT_EQ(back, recs);
}

TEST(FeatureCache, AcceptsSeaAlias) {
  std::string line =
      R"({"instance_id":"a","domain_id":"d","label":1,"features":[0,0,0,0,0,0,0,0,0,0,3],)"
      R"("baselines":{"se_avg":0,"se_max":0,"eas":3,"nll_avg":0,"nll_max":0,"nll_sum":0,"lntp":1,"mtp":1,"ppl":1}})";
  std::stringstream ss(line + "\n");
  auto recs = read_records(ss);
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].baselines.se_sum, 3.0);
}

TEST(FeatureCache, RejectsShortFeatureVector) {
  std::stringstream ss(R"({"instance_id":"a","domain_id":"d","features":[1,2],"baselines":{}})"
                       "\n");
  try {
    read_records(ss, "f.jsonl");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSchemaViolation);
    EXPECT_NE(std::string(e.what()).find("f.jsonl:1"), std::string::npos);
  }
}

TEST(FeatureCache, CsvHeader) {
  std::stringstream ss;
  write_records_csv(ss, {});
  std::string header;
  std::getline(ss, header);
  EXPECT_EQ(header.rfind("instance_id,domain_id,model_id,label,h_max", 0), 0u) << header;
  EXPECT_NE(header.find("h_sea,se_avg"), std::string::npos);
  EXPECT_EQ(header.substr(header.size() - 3), "ppl");
}
