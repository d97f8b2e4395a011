#include <gtest/gtest.h>

#include "oracles.hpp"
#include "smdcard/compliance.hpp"
#include "smdcard/congruence.hpp"
#include "smdcard/error.hpp"

using namespace smdcard;

namespace {

struct Fixture {
  RecordTable table;
  std::vector<oracle::Row> qi;
  std::vector<std::string> diagnosis;
  std::vector<double> cost;
};

// 50 rows with small QI domains so classes of several sizes appear.
Fixture fifty_rows(unsigned seed) {
  std::mt19937_64 rng(seed);
  const std::vector<std::string> sexes = {"F", "M"}, bands = {"20-39", "40-59", "60+"}, dx = {"a", "b", "c", "d"};
  Fixture f;
  std::vector<std::vector<Cell>> rows;
  for (int i = 0; i < 50; ++i) {
    const auto& s = sexes[rng() % 2];
    const auto& b = bands[rng() % 3];
    const auto& d = dx[rng() % 4];
    const double c = static_cast<double>(rng() % 1000) / 10.0;
    rows.push_back({s, b, d, c});
    f.qi.push_back({s, b});
    f.diagnosis.push_back(d);
    f.cost.push_back(c);
  }
  f.table = RecordTable({{"sex", ColumnKind::kCategorical},
                         {"band", ColumnKind::kCategorical},
                         {"dx", ColumnKind::kCategorical},
                         {"cost", ColumnKind::kNumeric}},
                        rows);
  return f;
}

const std::vector<std::string> kQi = {"sex", "band"};

}  // namespace

TEST(KAnonymity, MatchesExhaustiveGrouping) {
  for (unsigned seed = 1; seed <= 5; ++seed) {
    const auto f = fifty_rows(seed);
    std::size_t k = 50;
    for (const auto& [key, rows] : oracle::group_rows(f.qi)) k = std::min(k, rows.size());
    EXPECT_EQ(k_anonymity(f.table, kQi).value.value, static_cast<double>(k));
  }
}

TEST(LDiversity, MatchesExhaustiveGrouping) {
  for (unsigned seed = 1; seed <= 5; ++seed) {
    const auto f = fifty_rows(seed);
    std::size_t l = 50;
    for (const auto& [key, rows] : oracle::group_rows(f.qi)) {
      std::set<std::string> distinct;
      for (auto r : rows) distinct.insert(f.diagnosis[r]);
      l = std::min(l, distinct.size());
    }
    EXPECT_EQ(l_diversity(f.table, kQi, "dx").value.value, static_cast<double>(l));
  }
}

TEST(TCloseness, CategoricalTotalVariationOracle) {
  for (unsigned seed = 1; seed <= 5; ++seed) {
    const auto f = fifty_rows(seed);
    std::map<std::string, double> global;
    for (const auto& d : f.diagnosis) global[d] += 1.0 / 50;
    double worst = 0;
    for (const auto& [key, rows] : oracle::group_rows(f.qi)) {
      std::map<std::string, double> cls;
      for (auto r : rows) cls[f.diagnosis[r]] += 1.0 / static_cast<double>(rows.size());
      double tv = 0;
      for (const auto& [v, p] : global) tv += std::abs(p - (cls.count(v) ? cls[v] : 0.0));
      worst = std::max(worst, tv / 2);
    }
    EXPECT_NEAR(t_closeness(f.table, kQi, "dx").value.value, worst, 1e-12);
  }
}

TEST(TCloseness, NumericUsesRangeNormalizedEmd) {
  for (unsigned seed = 1; seed <= 5; ++seed) {
    const auto f = fifty_rows(seed);
    const auto [mn, mx] = std::minmax_element(f.cost.begin(), f.cost.end());
    double worst = 0;
    for (const auto& [key, rows] : oracle::group_rows(f.qi)) {
      std::vector<double> cls;
      for (auto r : rows) cls.push_back(f.cost[r]);
      worst = std::max(worst, oracle::cdf_emd(cls, f.cost) / (*mx - *mn));
    }
    EXPECT_NEAR(t_closeness(f.table, kQi, "cost").value.value, worst, 1e-12);
  }
}

TEST(Equivalence, MissingQiGroupsOnlyWithMissing) {
  const RecordTable t({{"q", ColumnKind::kCategorical}, {"s", ColumnKind::kCategorical}},
                      {{std::string("a"), std::string("x")},
                       {std::string("a"), std::string("y")},
                       {std::monostate{}, std::string("x")},
                       {std::string(""), std::string("x")}});
  const std::vector<std::string> q = {"q"};
  const auto eq = equivalence_classes(t, q);
  EXPECT_EQ(eq.rows_with_missing_qi, 1u);
  EXPECT_EQ(eq.classes.size(), 3u);
  EXPECT_EQ(k_anonymity(t, q).value.value, 1.0);
  EXPECT_THROW(l_diversity(t, q, "ghost"), Error);
}

TEST(Leakage, CopiesLeakAndDistantRowsDoNot) {
  const auto r = oracle::gaussian(100, 4, 3);
  EXPECT_EQ(leakage_rate(r, r).value.value, 1.0);
  EXPECT_EQ(leakage_rate(r, oracle::gaussian(30, 4, 4, 50.0)).value.value, 0.0);
  Eigen::MatrixXd half = oracle::gaussian(10, 4, 5, 50.0);
  half.topRows(5) = r.topRows(5);
  const auto m = leakage_rate(r, half);
  EXPECT_EQ(m.value.value, 0.5);
  EXPECT_EQ(m.diagnostics.at("tau_default"), 1.0);
  EXPECT_EQ(leakage_rate(r, half, 0.0).diagnostics.at("tau"), 0.0);
}

TEST(DeclaredPrivacy, RecordHasEveryKey) {
  const auto empty = declared_privacy_record({});
  for (const char* key : {"epsilon", "delta", "anonymization_method", "standards", "data_format"}) {
    EXPECT_EQ(empty.at(key), "not declared");
  }
  DeclaredPrivacy d;
  d.epsilon = 1.0;
  d.standards = {"HIPAA", "GDPR"};
  const auto rec = declared_privacy_record(d);
  EXPECT_EQ(rec.at("epsilon"), "ε=1.0 (declared)");
  EXPECT_EQ(rec.at("standards"), "HIPAA, GDPR (declared)");
  EXPECT_EQ(rec.at("verification"), "declared, not verified");
}
