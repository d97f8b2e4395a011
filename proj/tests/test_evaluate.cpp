#include <gtest/gtest.h>

#include "oracles.hpp"
#include "smdcard/error.hpp"
#include "smdcard/evaluate.hpp"
#include "smdcard/harness.hpp"

using namespace smdcard;
using nlohmann::json;

namespace {

const json kEmbeddingMetrics = {{"CosineSimilarity", json::object()}, {"EarthMoversDistance", json::object()},
                                {"JensenShannonDivergence", json::object()}, {"FrechetDistance", json::object()},
                                {"Precision", json::object()},         {"Recall", json::object()},
                                {"Coverage", json::object()},          {"VendiScore", json::object()},
                                {"MaxMinDifference", json::object()},  {"ANOVA", json::object()}};

EvalInputs labelled_inputs(std::uint64_t seed) {
  std::vector<Mode> modes;
  for (double x : {-4.0, 4.0}) {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(3);
    m(0) = x;
    modes.push_back({m, 1.0, 1.0});
  }
  EvalInputs in;
  in.real = make_gaussian_mixture(120, 3, modes, seed);
  in.synthetic = make_gaussian_mixture(120, 3, modes, seed + 1);
  return in;
}

EvalConfig config(std::size_t threads, json metrics = kEmbeddingMetrics) {
  return parse_eval_config({{"metrics", metrics},
                            {"seed", 17},
                            {"threads", threads},
                            {"consistency", {{"bootstrap_replicates", 20}}},
                            {"normalization", {{"EarthMoversDistance", {0, 2}}, {"FrechetDistance", {0, 10}}}}},
                           ".");
}

bool has_violation(const ValidationOutcome& v, ErrorCode code, const std::string& text) {
  for (const auto& x : v.violations) {
    if (x.code == code && x.message.find(text) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

TEST(Evaluate, ByteIdenticalAcrossRunsAndThreadCounts) {
  const auto in = labelled_inputs(1);
  const auto a = serialize_report(evaluate(in, config(1)));
  const auto b = serialize_report(evaluate(in, config(1)));
  const auto c = serialize_report(evaluate(in, config(4)));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
}

TEST(Evaluate, SubgroupScopesAndConsistencyRows) {
  const auto report = evaluate(labelled_inputs(2), config(2));
  EXPECT_EQ(report.scopes.front().scope, Scope::global());
  EXPECT_TRUE(report.find_scope(Scope::subgroup("mode0")));
  EXPECT_TRUE(report.find_scope(Scope::subgroup("mode1")));
  bool saw_anova = false;
  for (const auto& m : report.global().metrics) {
    if (m.descriptor->name == "ANOVA") {
      saw_anova = true;
      EXPECT_TRUE(m.value.is_defined()) << m.value.reason;
      EXPECT_EQ(m.diagnostics.at("replicates"), 20.0);
    }
  }
  EXPECT_TRUE(saw_anova);
  EXPECT_EQ(report.global().criteria.size(), kCriterionCount);
  EXPECT_EQ(report.seed, 17u);
}

TEST(Evaluate, RegionScopesOnlyForLabelledRegions) {
  auto in = labelled_inputs(3);
  std::vector<std::string> regions(in.synthetic->size(), "lesion");
  for (std::size_t i = 0; i < regions.size(); i += 2) regions[i] = "background";
  in.synthetic = EmbeddingSet(in.synthetic->ids(), in.synthetic->data(), in.synthetic->subgroup(), regions);
  in.real = EmbeddingSet(in.real->ids(), in.real->data(), in.real->subgroup(), regions);
  const auto report = evaluate(in, config(1, {{"CosineSimilarity", json::object()}, {"Recall", json::object()}}));
  ASSERT_TRUE(report.find_scope(Scope::region("lesion")));
  ASSERT_TRUE(report.find_scope(Scope::region("background")));
  EXPECT_EQ(report.scopes[1].scope.kind, Scope::Kind::kRegion);
}

TEST(Evaluate, IdenticalSetsScorePerfectly) {
  auto in = labelled_inputs(4);
  in.synthetic = in.real;
  const auto report = evaluate(in, config(1, {{"CosineSimilarity", json::object()}, {"Precision", json::object()},
                                              {"Recall", json::object()}, {"Coverage", json::object()}}));
  for (const auto& c : report.global().criteria) {
    if (c.score) EXPECT_DOUBLE_EQ(*c.score, 100.0) << to_string(c.criterion);
  }
}

TEST(Validate, MissingRealAndBoundsReported) {
  EvalInputs in;
  in.synthetic = EmbeddingSet::from_matrix(oracle::gaussian(20, 2, 1));
  const auto cfg = parse_eval_config({{"metrics", {{"Recall", json::object()}, {"FrechetDistance", json::object()}}}}, ".");
  const auto v = validate_inputs(in, cfg);
  EXPECT_TRUE(has_violation(v, ErrorCode::kMissingReference, "Recall: binary metric requires reference set"));
  EXPECT_TRUE(has_violation(v, ErrorCode::kMissingBounds, "FrechetDistance: no normalization bounds"));
}

TEST(Validate, NonFiniteAndDimensionMismatch) {
  EvalInputs in;
  Eigen::MatrixXd x = oracle::gaussian(10, 2, 2);
  x(3, 1) = std::nan("");
  in.synthetic = EmbeddingSet::from_matrix(x);
  in.real = EmbeddingSet::from_matrix(oracle::gaussian(10, 3, 3));
  const auto cfg = parse_eval_config({{"metrics", {{"Recall", json::object()}}}}, ".");
  const auto v = validate_inputs(in, cfg);
  EXPECT_TRUE(has_violation(v, ErrorCode::kNonFinite, "row id \"3\" column 2"));
  EXPECT_TRUE(has_violation(v, ErrorCode::kDimensionMismatch, ""));
}

TEST(Validate, CleanInputsPass) {
  const auto v = validate_inputs(labelled_inputs(5), config(1));
  EXPECT_TRUE(v.ok()) << (v.violations.empty() ? "" : v.violations.front().message);
}

TEST(ComputeMetric, PreconditionFailureBecomesUndefined) {
  EvalInputs in;
  in.real = EmbeddingSet::from_matrix(oracle::gaussian(3, 2, 4));
  in.synthetic = EmbeddingSet::from_matrix(oracle::gaussian(5, 2, 5));
  const auto cfg = parse_eval_config({{"metrics", {{"EarthMoversDistance", {{"mode", "exact-matching"}}}}}}, ".");
  const auto m = compute_metric(metric("EarthMoversDistance"), in, cfg, 1);
  EXPECT_FALSE(m.value.is_defined());
  EXPECT_FALSE(m.value.reason.empty());
}

TEST(ParallelFor, EverySlotOnceAndFirstErrorRethrown) {
  std::vector<int> hits(100, 0);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
  EXPECT_EQ(std::count(hits.begin(), hits.end(), 1), 100);
  EXPECT_THROW(parallel_for(10, 3, [](std::size_t i) {
                 if (i == 5) throw Error(ErrorCode::kInternal, "boom");
               }),
               Error);
}

TEST(Calibrate, BoundsCoverObservedAndAreSeeded) {
  EvalInputs in;
  in.real = labelled_inputs(6).real;
  const auto cfg = config(1, {{"FrechetDistance", json::object()}, {"Recall", json::object()}});
  const auto a = calibrate(in, cfg), b = calibrate(in, cfg);
  EXPECT_EQ(a, b);
  const auto& fd = a["normalization"]["FrechetDistance"];
  EXPECT_LE(fd[0].get<double>(), a["observed"]["FrechetDistance"]["min"].get<double>());
  EXPECT_LT(fd[0].get<double>(), fd[1].get<double>());
  EXPECT_EQ(a["splits"], 5);
}
