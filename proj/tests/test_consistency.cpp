#include <gtest/gtest.h>

#include "oracles.hpp"
#include "smdcard/consistency.hpp"
#include "smdcard/error.hpp"
#include "smdcard/evaluate.hpp"

using namespace smdcard;

namespace {

std::vector<std::vector<double>> random_groups(unsigned seed, std::size_t groups) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0, 1);
  std::vector<std::vector<double>> out(groups);
  for (std::size_t i = 0; i < groups; ++i) {
    const std::size_t n = 5 + rng() % 20;
    for (std::size_t j = 0; j < n; ++j) out[i].push_back(g(rng) + 0.3 * static_cast<double>(i));
  }
  return out;
}

}  // namespace

TEST(Dispersion, VarianceAndRangeExcludeUndefined) {
  const std::vector<std::optional<double>> v = {10.0, std::nullopt, 20.0, 30.0};
  const auto d = dispersion(v);
  ASSERT_TRUE(d);
  EXPECT_NEAR(d->variance, 200.0 / 3.0, 1e-12);
  EXPECT_EQ(d->max_min_difference, 20.0);
  EXPECT_EQ(d->excluded, 1u);
  const std::vector<std::optional<double>> one = {5.0, std::nullopt};
  EXPECT_FALSE(dispersion(one));
}

TEST(Anova, MatchesSumsOfSquaresOracle) {
  for (unsigned seed = 1; seed <= 10; ++seed) {
    const auto groups = random_groups(seed, 2 + seed % 4);
    const auto got = one_way_anova(groups);
    const auto [f, df] = oracle::anova_f(groups);
    EXPECT_NEAR(got.f.value, f, 1e-9 * std::max(1.0, f));
    EXPECT_EQ(got.df_between, df.first);
    EXPECT_EQ(got.df_within, df.second);
  }
}

TEST(Anova, PValueMatchesDensityIntegration) {
  for (unsigned seed = 1; seed <= 10; ++seed) {
    const auto groups = random_groups(seed, 3 + seed % 3);  // d1 >= 2
    const auto got = one_way_anova(groups);
    const auto [f, df] = oracle::anova_f(groups);
    EXPECT_NEAR(got.p.value, oracle::f_upper_tail(f, df.first, df.second), 1e-6);
  }
}

TEST(Anova, DegenerateCases) {
  const std::vector<std::vector<double>> flat = {{1, 1}, {1, 1}};
  EXPECT_FALSE(one_way_anova(flat).f.is_defined());
  const std::vector<std::vector<double>> apart = {{1, 1}, {2, 2}};
  const auto r = one_way_anova(apart);
  EXPECT_EQ(r.f.kind, MetricValue::Kind::kPositiveInfinity);
  EXPECT_EQ(r.p.value, 0.0);
  const std::vector<std::vector<double>> tiny = {{1}, {2, 3}};
  EXPECT_THROW(one_way_anova(tiny), Error);
  const std::vector<std::vector<double>> single = {{1, 2, 3}};
  EXPECT_THROW(one_way_anova(single), Error);
}

TEST(Anova, SurvivalFunctionKnownValues) {
  EXPECT_NEAR(f_distribution_sf(0.0, 3, 10), 1.0, 1e-15);
  // F(2, d2) has closed form (1 + 2f/d2)^(-d2/2).
  EXPECT_NEAR(f_distribution_sf(1.7, 2, 9), std::pow(1 + 2 * 1.7 / 9, -4.5), 1e-12);
}

TEST(Bootstrap, SeededAndInRange) {
  const auto a = bootstrap_rows(50, 7), b = bootstrap_rows(50, 7), c = bootstrap_rows(50, 8);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  for (auto i : a) EXPECT_LT(i, 50u);
}

TEST(PerSubgroup, SplitsByLabelAndRestrictsReal) {
  Eigen::MatrixXd x(40, 2);
  x.topRows(20) = oracle::gaussian(20, 2, 1);
  x.bottomRows(20) = oracle::gaussian(20, 2, 2, 5.0);
  std::vector<std::string> labels(40, "a");
  std::fill(labels.begin() + 20, labels.end(), "b");
  EvalInputs in;
  in.real = EmbeddingSet::from_matrix(x, labels);
  in.synthetic = EmbeddingSet::from_matrix(x, labels);
  const auto cfg = parse_eval_config(
      {{"metrics", {{"CentroidDistance", nlohmann::json::object()}}}, {"seed", 1}, {"threads", 2}}, ".");
  const auto base = consistency_base_metrics(cfg);
  const auto per = per_subgroup_metrics(in, cfg, base);
  ASSERT_EQ(per.size(), 2u);
  for (const auto& [label, results] : per) {
    ASSERT_EQ(results.size(), 1u);
    EXPECT_EQ(results[0].value.value, 0.0) << label;
    EXPECT_EQ(results[0].scope, Scope::subgroup(label));
  }
  EvalInputs unlabeled;
  unlabeled.synthetic = EmbeddingSet::from_matrix(x);
  unlabeled.real = EmbeddingSet::from_matrix(x);
  EXPECT_THROW(per_subgroup_metrics(unlabeled, cfg, base), Error);
}

TEST(BootstrapMetric, DeterministicAndFinite) {
  EvalInputs in;
  in.real = EmbeddingSet::from_matrix(oracle::gaussian(30, 2, 3));
  in.synthetic = EmbeddingSet::from_matrix(oracle::gaussian(30, 2, 4, 0.5));
  const auto cfg = parse_eval_config({{"metrics", {{"CentroidDistance", nlohmann::json::object()}}}, {"seed", 5}}, ".");
  const auto a = bootstrap_metric(in, metric("CentroidDistance"), cfg, "g", 25);
  const auto b = bootstrap_metric(in, metric("CentroidDistance"), cfg, "g", 25);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.size(), 25u);
  const auto other = bootstrap_metric(in, metric("CentroidDistance"), cfg, "h", 25);
  EXPECT_NE(a, other);
}
