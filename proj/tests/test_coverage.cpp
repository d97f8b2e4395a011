#include <gtest/gtest.h>

#include "oracles.hpp"
#include "smdcard/coverage.hpp"
#include "smdcard/error.hpp"
#include "smdcard/hull.hpp"

using namespace smdcard;

namespace {

// Cosine kernel built directly from row normalization.
Eigen::MatrixXd naive_cosine(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd k(x.rows(), x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.rows(); ++j)
      k(i, j) = x.row(i).dot(x.row(j)) / (x.row(i).norm() * x.row(j).norm());
  return k;
}

}  // namespace

TEST(Recall, MatchesBallOracle) {
  const auto r = oracle::gaussian(100, 3, 1);
  const auto s = oracle::gaussian(100, 3, 2, 0.5);
  EXPECT_DOUBLE_EQ(manifold_recall(r, s, 3).value.value, oracle::ball_membership(s, oracle::kth_radius(s, 3), r));
  EXPECT_DOUBLE_EQ(manifold_recall(r, r).value.value, 1.0);
}

TEST(Coverage, MatchesBruteForce) {
  const auto r = oracle::gaussian(100, 3, 3);
  const auto s = oracle::gaussian(60, 3, 4, 0.8);
  const auto radius = oracle::kth_radius(r, 5);
  std::size_t covered = 0;
  for (Eigen::Index i = 0; i < r.rows(); ++i) {
    for (Eigen::Index j = 0; j < s.rows(); ++j) {
      if ((r.row(i) - s.row(j)).norm() <= radius[static_cast<std::size_t>(i)]) {
        ++covered;
        break;
      }
    }
  }
  EXPECT_DOUBLE_EQ(manifold_coverage(r, s, 5).value.value, covered / 100.0);
  EXPECT_DOUBLE_EQ(manifold_coverage(r, r).value.value, 1.0);
}

TEST(Recall, DroppingHalfTheSupportLowersRecall) {
  const auto r = oracle::gaussian(100, 2, 5);
  Eigen::MatrixXd half(50, 2);
  Eigen::Index m = 0;
  for (Eigen::Index i = 0; i < r.rows() && m < 50; ++i) {
    if (r(i, 0) > 0) half.row(m++) = r.row(i);
  }
  half.conservativeResize(m, 2);
  EXPECT_LT(manifold_recall(r, half).value.value, manifold_recall(r, r).value.value);
}

TEST(Hull, UnitSquareAreaExactlyOne) {
  Eigen::MatrixXd sq(5, 2);
  sq << 0, 0, 1, 0, 1, 1, 0, 1, 0.5, 0.5;
  const auto h = convex_hull_measure(sq);
  EXPECT_EQ(h.volume, 1.0);
  EXPECT_EQ(h.hull_vertices, 4u);
}

TEST(Hull, IntervalAndCube) {
  EXPECT_EQ(convex_hull_measure((Eigen::MatrixXd(3, 1) << -1, 2, 0.5).finished()).volume, 3.0);
  Eigen::MatrixXd cube(8, 3);
  for (int i = 0; i < 8; ++i) cube.row(i) << (i & 1) * 2.0, ((i >> 1) & 1) * 2.0, ((i >> 2) & 1) * 2.0;
  EXPECT_NEAR(convex_hull_measure(cube).volume, 8.0, 1e-12);
}

TEST(Hull, RandomPointsMatchMonteCarlo) {
  const auto p = oracle::gaussian(30, 3, 6);
  const double want = oracle::monte_carlo_hull_volume(p, 400000, 7);
  EXPECT_NEAR(convex_hull_measure(p).volume, want, 0.02 * want);
}

TEST(Hull, CoplanarPointsAreDegenerate) {
  Eigen::MatrixXd p(5, 3);
  p << 0, 0, 0, 1, 0, 0, 0, 1, 0, 1, 1, 0, 0.3, 0.2, 0;
  const auto h = convex_hull_measure(p);
  EXPECT_TRUE(h.degenerate);
  EXPECT_EQ(h.volume, 0.0);
}

TEST(Hull, ReductionPathAndTooFewPoints) {
  const auto x = oracle::gaussian(40, 6, 8);
  const auto m = convex_hull_volume(x, 3);
  EXPECT_GT(m.value.value, 0.0);
  EXPECT_EQ(m.diagnostics.at("working_dimension"), 3.0);
  EXPECT_EQ(convex_hull_volume(x.topRows(3), 3).value.value, 0.0);
  EXPECT_THROW(convex_hull_volume(x, 4), Error);
}

TEST(Vendi, IdenticalRowsGiveOneOrthonormalGiveN) {
  Eigen::MatrixXd same = Eigen::MatrixXd::Ones(6, 3);
  EXPECT_NEAR(vendi_score(same).value.value, 1.0, 1e-6);
  EXPECT_NEAR(vendi_score(Eigen::MatrixXd::Identity(7, 7)).value.value, 7.0, 1e-6);
}

TEST(Vendi, MatchesJacobiEigensolve) {
  const auto x = oracle::gaussian(25, 4, 9, 0.5);
  auto [vals, vecs] = oracle::jacobi_eigen(naive_cosine(x) / 25.0);
  double h = 0.0;
  for (Eigen::Index i = 0; i < vals.size(); ++i)
    if (vals[i] > 1e-12) h -= vals[i] * std::log(vals[i]);
  EXPECT_NEAR(vendi_score(x).value.value, std::exp(h), 1e-9);
}

TEST(Dpp, MatchesLuLogDeterminant) {
  const auto x = oracle::gaussian(12, 20, 10);
  const Eigen::MatrixXd k = naive_cosine(x) + 1e-9 * Eigen::MatrixXd::Identity(12, 12);
  EXPECT_NEAR(dpp_logdet(x).value.value, oracle::lu_logdet(k), 1e-9);
  EXPECT_NEAR(dpp_logdet(Eigen::MatrixXd::Identity(4, 4)).value.value, 4 * std::log(1 + 1e-9), 1e-12);
}

TEST(Dpp, DuplicateRowsLowerTheScore) {
  const auto x = oracle::gaussian(10, 12, 11);
  Eigen::MatrixXd dup = x;
  dup.row(1) = dup.row(0);
  EXPECT_LT(dpp_logdet(dup).value.value, dpp_logdet(x).value.value);
}

TEST(Variance, TraceOfSampleCovariance) {
  const auto x = oracle::gaussian(50, 3, 12);
  EXPECT_NEAR(total_variance(x).value.value, oracle::covariance(x).trace(), 1e-12);
  EXPECT_FALSE(total_variance(x.topRows(1)).value.is_defined());
}

TEST(Entropy, UniformEightBinsIsLogEight) {
  Eigen::MatrixXd x(16, 1);
  for (int i = 0; i < 16; ++i) x(i, 0) = (i / 2) + 0.5 * (i % 2);
  // 0, 0.5, 1, ..., 7.5: two values per unit bin across [0, 7.5].
  EXPECT_NEAR(embedding_entropy(x, 8).value.value, std::log(8.0), 1e-9);
  EXPECT_EQ(embedding_entropy(Eigen::MatrixXd::Ones(5, 1)).value.value, 0.0);
}

TEST(Rarity, SmallerWhenInsideDenseRegions) {
  const auto r = oracle::gaussian(200, 2, 13);
  const auto center = oracle::gaussian(20, 2, 14) * 0.1;
  const auto fringe = oracle::gaussian(20, 2, 15) * 2.0;
  const auto a = rarity_score(r, center), b = rarity_score(r, fringe);
  ASSERT_TRUE(a.value.is_defined() && b.value.is_defined());
  EXPECT_LT(a.value.value, b.value.value);
  EXPECT_FALSE(rarity_score(r, oracle::gaussian(5, 2, 16, 100.0)).value.is_defined());
}

TEST(KMeans, SeparatedBlobsSplitEvenly) {
  Eigen::MatrixXd x(40, 2);
  x.topRows(20) = oracle::gaussian(20, 2, 17) * 0.1;
  x.bottomRows(20) = (oracle::gaussian(20, 2, 18) * 0.1).array() + 10.0;
  const auto km = kmeans(x, 2, 1);
  for (int i = 1; i < 20; ++i) EXPECT_EQ(km.assignment[i], km.assignment[0]);
  EXPECT_NE(km.assignment[20], km.assignment[0]);
  EXPECT_NEAR(cluster_balance(x, 2, 1).value.value, 1.0, 1e-12);
  const auto again = kmeans(x, 2, 1);
  EXPECT_EQ(again.assignment, km.assignment);
}

TEST(ClusterBalance, ImbalancedBelowOne) {
  Eigen::MatrixXd x(40, 2);
  x.topRows(36) = oracle::gaussian(36, 2, 19) * 0.1;
  x.bottomRows(4) = (oracle::gaussian(4, 2, 20) * 0.1).array() + 10.0;
  const double v = cluster_balance(x, 2, 3).value.value;
  EXPECT_GT(v, 0.0);
  EXPECT_LT(v, 1.0);
}

TEST(Inception, ConfidentDiverseEqualsClassCount) {
  EXPECT_NEAR(inception_style_score(Eigen::MatrixXd::Identity(4, 4)).value.value, 4.0, 1e-12);
  EXPECT_NEAR(inception_style_score(Eigen::MatrixXd::Constant(5, 3, 1.0 / 3)).value.value, 1.0, 1e-12);
  EXPECT_THROW(inception_style_score(Eigen::MatrixXd::Ones(2, 2)), Error);
}

TEST(MeanDistanceToCentroid, Example) {
  Eigen::MatrixXd r(2, 2), s(2, 2);
  r << -1, 0, 1, 0;
  s << 3, 4, 0, 1;
  EXPECT_DOUBLE_EQ(mean_distance_to_centroid(r, s).value.value, 3.0);
}
