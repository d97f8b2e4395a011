#include <gtest/gtest.h>

#include "oracles.hpp"
#include "smdcard/assignment.hpp"
#include "smdcard/congruence.hpp"
#include "smdcard/error.hpp"

using namespace smdcard;

namespace {

Eigen::MatrixXd column_of(std::initializer_list<double> v) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}

GrayImage image(std::size_t w, std::size_t h, unsigned seed, double peak = 255.0) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> u(0, static_cast<int>(peak));
  GrayImage img{w, h, peak, {}};
  for (std::size_t i = 0; i < w * h; ++i) img.pixels.push_back(u(rng));
  return img;
}

}  // namespace

TEST(Cosine, IdentityAndOrthogonal) {
  const auto x = oracle::gaussian(50, 4, 1, 2.0);
  EXPECT_NEAR(cosine_centroid(x, x).value.value, 1.0, 1e-12);
  Eigen::MatrixXd a(1, 2), b(1, 2);
  a << 1, 0;
  b << 0, 3;
  EXPECT_NEAR(cosine_centroid(a, b).value.value, 0.0, 1e-12);
  EXPECT_NEAR(cosine_centroid(a, -a).value.value, -1.0, 1e-12);
}

TEST(Cosine, ZeroCentroidIsUndefined) {
  Eigen::MatrixXd a(2, 1);
  a << 1, -1;
  EXPECT_FALSE(cosine_centroid(a, a).value.is_defined());
}

TEST(Cosine, DimensionMismatchThrows) {
  try {
    cosine_centroid(Eigen::MatrixXd::Ones(2, 2), Eigen::MatrixXd::Ones(2, 3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
}

TEST(Wasserstein, OneDimensionalExamples) {
  EXPECT_DOUBLE_EQ(wasserstein1_1d({0, 1}, {0, 2}), 0.5);
  EXPECT_DOUBLE_EQ(wasserstein1_1d({0}, {3}), 3.0);
  EXPECT_DOUBLE_EQ(wasserstein1_1d({1, 2, 3}, {3, 2, 1}), 0.0);
  EXPECT_NEAR(wasserstein1_1d({0, 0, 1}, {0, 1}), oracle::cdf_emd({0, 0, 1}, {0, 1}), 1e-15);
}

TEST(Wasserstein, PerDimensionMatchesCdfOracle) {
  const auto r = oracle::gaussian(37, 3, 2);
  const auto s = oracle::gaussian(23, 3, 3, 0.5);
  double want = 0.0;
  for (Eigen::Index j = 0; j < 3; ++j) {
    want += oracle::cdf_emd(std::vector<double>(r.col(j).data(), r.col(j).data() + r.rows()),
                            std::vector<double>(s.col(j).data(), s.col(j).data() + s.rows()));
  }
  EXPECT_NEAR(wasserstein1(r, s, TransportMode::kPerDimension).value.value, want / 3, 1e-12);
}

TEST(Wasserstein, ExactMatchingEqualsBruteForce) {
  for (unsigned seed = 0; seed < 6; ++seed) {
    const std::size_t n = 3 + seed % 6;
    const auto a = oracle::gaussian(n, 2, 10 + seed);
    const auto b = oracle::gaussian(n, 2, 20 + seed, 1.0);
    EXPECT_NEAR(wasserstein1(a, b, TransportMode::kExactMatching).value.value, oracle::brute_force_matching(a, b),
                1e-12);
  }
}

TEST(Wasserstein, ExactMatchingNeedsEqualCounts) {
  EXPECT_THROW(wasserstein1(oracle::gaussian(3, 2, 1), oracle::gaussian(4, 2, 2), TransportMode::kExactMatching),
               Error);
}

TEST(Assignment, SmallKnownCase) {
  Eigen::MatrixXd c(3, 3);
  c << 4, 1, 3, 2, 0, 5, 3, 2, 2;
  const auto m = min_cost_assignment(c);
  double total = 0;
  for (int i = 0; i < 3; ++i) total += c(i, m[static_cast<std::size_t>(i)]);
  EXPECT_EQ(total, 5.0);
}

TEST(JensenShannon, IdentityZeroAndDisjointOne) {
  const auto x = oracle::gaussian(200, 3, 4);
  EXPECT_NEAR(jensen_shannon(x, x).value.value, 0.0, 1e-9);
  const auto a = column_of({0, 0, 0, 0});
  const auto b = column_of({1, 1, 1, 1});
  EXPECT_NEAR(jensen_shannon(a, b, 8).value.value, 1.0, 1e-9);
}

TEST(JensenShannon, SymmetricAndBounded) {
  const auto a = oracle::gaussian(100, 2, 5);
  const auto b = oracle::gaussian(80, 2, 6, 1.0);
  const double ab = jensen_shannon(a, b).value.value, ba = jensen_shannon(b, a).value.value;
  EXPECT_NEAR(ab, ba, 1e-12);
  EXPECT_GT(ab, 0.0);
  EXPECT_LE(ab, 1.0);
}

TEST(JensenShannon, ConstantDimensionsCounted) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Ones(10, 2);
  x.col(1) = oracle::gaussian(10, 1, 7);
  const auto m = jensen_shannon(x, x);
  EXPECT_EQ(m.diagnostics.at("constant_dimensions"), 1.0);
}

TEST(Histogram, FreedmanDiaconisClamped) {
  std::vector<double> few = {0, 1};
  EXPECT_GE(freedman_diaconis_bins(few), kMinBins);
  std::vector<double> flat_iqr(100, 0.0);
  flat_iqr.back() = 1.0;
  EXPECT_EQ(freedman_diaconis_bins(flat_iqr), kMaxBins);
  const auto h = histogram(std::vector<double>{0, 0.5, 1}, 0, 1, 2);
  EXPECT_EQ(h, (std::vector<double>{1, 2}));
}

TEST(Frechet, MatchesEigensolveOracle) {
  const auto r = oracle::gaussian(200, 5, 8);
  Eigen::MatrixXd s = oracle::gaussian(200, 5, 9, 0.3);
  s.col(0) *= 2.0;
  const double want = oracle::frechet(r, s, kFrechetRegularization);
  EXPECT_NEAR(frechet_distance(r, s).value.value, want, 1e-6 * std::abs(want));
}

TEST(Frechet, IdentityAndShift) {
  const auto r = oracle::gaussian(100, 4, 10);
  EXPECT_LE(frechet_distance(r, r).value.value, 1e-6);
  Eigen::RowVectorXd delta(4);
  delta << 1, -2, 0.5, 0;
  const Eigen::MatrixXd s = r.rowwise() + delta;
  EXPECT_NEAR(frechet_distance(r, s).value.value, delta.squaredNorm(), 1e-6);
}

TEST(Frechet, SymmetricAndNeedsTwoRows) {
  const auto a = oracle::gaussian(30, 3, 11);
  const auto b = oracle::gaussian(40, 3, 12, 1.0);
  EXPECT_NEAR(frechet_distance(a, b).value.value, frechet_distance(b, a).value.value, 1e-9);
  EXPECT_FALSE(frechet_distance(a.topRows(1), b).value.is_defined());
}

TEST(Precision, MatchesBallOracle) {
  const auto r = oracle::gaussian(100, 3, 13);
  const auto s = oracle::gaussian(100, 3, 14, 0.7);
  const double want = oracle::ball_membership(r, oracle::kth_radius(r, 3), s);
  EXPECT_DOUBLE_EQ(manifold_precision(r, s, 3).value.value, want);
  EXPECT_DOUBLE_EQ(manifold_precision(r, r, 3).value.value, 1.0);
}

TEST(Precision, FarAwaySetScoresZeroAndSmallRealUndefined) {
  const auto r = oracle::gaussian(20, 2, 15);
  const auto s = oracle::gaussian(20, 2, 16, 100.0);
  EXPECT_EQ(manifold_precision(r, s).value.value, 0.0);
  EXPECT_FALSE(manifold_precision(r.topRows(3), s, 3).value.is_defined());
}

TEST(Centroid, DistanceIsNormOfMeanDifference) {
  const auto r = oracle::gaussian(10, 2, 17);
  Eigen::RowVectorXd delta(2);
  delta << 3, 4;
  EXPECT_NEAR(centroid_distance(r, r.rowwise() + delta).value.value, 5.0, 1e-12);
  EXPECT_EQ(centroid_distance(r, r).value.value, 0.0);
}

TEST(Psnr, UnitMseEightBit) {
  GrayImage a = image(16, 16, 1, 255);
  for (auto& p : a.pixels) p = std::min(p, 254.0);
  GrayImage b = a;
  for (auto& p : b.pixels) p += 1;
  EXPECT_NEAR(psnr_pair(a, b), 20 * std::log10(255.0), 1e-6);
  EXPECT_TRUE(std::isinf(psnr_pair(a, a)));
}

TEST(Psnr, MismatchedPairsSkipped) {
  std::vector<LoadedPair> pairs = {{image(16, 16, 1), image(16, 16, 2)}, {image(16, 16, 3), image(8, 16, 4)}};
  const auto m = psnr(pairs);
  EXPECT_EQ(m.diagnostics.at("skipped_pairs"), 1.0);
  EXPECT_NEAR(m.value.value, psnr_pair(pairs[0].real, pairs[0].synthetic), 1e-12);
}

TEST(Ssim, MatchesSummedAreaOracle) {
  for (double peak : {255.0, 65535.0}) {
    const auto a = image(20, 13, 5, peak);
    auto b = a;
    std::mt19937_64 rng(6);
    std::normal_distribution<double> g(0, peak / 20);
    for (auto& p : b.pixels) p = std::clamp(std::round(p + g(rng)), 0.0, peak);
    EXPECT_NEAR(ssim_pair(a, b), oracle::ssim_integral(a.pixels, b.pixels, 20, 13, peak), 1e-9);
  }
}

TEST(Ssim, IdentityIsOneAndSymmetric) {
  const auto a = image(12, 12, 7), b = image(12, 12, 8);
  EXPECT_NEAR(ssim_pair(a, a), 1.0, 1e-12);
  EXPECT_NEAR(ssim_pair(a, b), ssim_pair(b, a), 1e-12);
  EXPECT_THROW(ssim_pair(image(7, 7, 1), image(7, 7, 2)), Error);
}
