#pragma once

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <vector>

#include "smdcard/core.hpp"
#include "smdcard/image.hpp"

namespace smdcard {

// ---------------------------------------------------------------------------
// Histogram helpers shared by Jensen-Shannon and entropy
// ---------------------------------------------------------------------------

inline constexpr std::size_t kMinBins = 8;
inline constexpr std::size_t kMaxBins = 64;
inline constexpr double kHistogramSmoothing = 1e-12;

// Freedman-Diaconis bin count clamped to [8, 64]. Zero IQR over a nonzero
// range behaves like the h -> 0 limit and yields the cap.
std::size_t freedman_diaconis_bins(std::span<const double> values);

// Counts of `values` over `bins` equal-width bins on [lo, hi]; the top edge
// belongs to the last bin.
std::vector<double> histogram(std::span<const double> values, double lo, double hi, std::size_t bins);

// Base-2 Jensen-Shannon divergence of two count (or mass) vectors, with
// kHistogramSmoothing mass added per bin before renormalization.
double jensen_shannon_masses(std::span<const double> p, std::span<const double> q);

// ---------------------------------------------------------------------------
// Congruence metrics. Matrices are n x d with one embedding per row.
// ---------------------------------------------------------------------------

Measurement cosine_centroid(const Eigen::MatrixXd& real, const Eigen::MatrixXd& synthetic);

enum class TransportMode { kPerDimension, kExactMatching };
inline constexpr std::size_t kMaxExactMatching = 512;

// 1-D Wasserstein-1 distance between two empirical distributions.
double wasserstein1_1d(std::vector<double> a, std::vector<double> b);

Measurement wasserstein1(const Eigen::MatrixXd& real, const Eigen::MatrixXd& synthetic,
                         TransportMode mode);

Measurement jensen_shannon(const Eigen::MatrixXd& real, const Eigen::MatrixXd& synthetic,
                           std::optional<std::size_t> bins = std::nullopt);

inline constexpr double kFrechetRegularization = 1e-6;

Measurement frechet_distance(const Eigen::MatrixXd& real, const Eigen::MatrixXd& synthetic);

// Fraction of synthetic rows inside at least one real k-NN ball.
Measurement manifold_precision(const Eigen::MatrixXd& real, const Eigen::MatrixXd& synthetic,
                               std::size_t k = 3);

// Distance between the two dataset centroids.
Measurement centroid_distance(const Eigen::MatrixXd& real, const Eigen::MatrixXd& synthetic);

// ---------------------------------------------------------------------------
// Paired image metrics
// ---------------------------------------------------------------------------

inline constexpr std::size_t kSsimWindow = 8;

// Returns +infinity for identical images.
double psnr_pair(const GrayImage& real, const GrayImage& synthetic);
double ssim_pair(const GrayImage& real, const GrayImage& synthetic);

struct LoadedPair {
  GrayImage real;
  GrayImage synthetic;
};

// Mean over pairs. Pairs with mismatched geometry or container depth are
// skipped and counted in the "skipped_pairs" diagnostic.
Measurement psnr(std::span<const LoadedPair> pairs);
Measurement ssim(std::span<const LoadedPair> pairs);

}  // namespace smdcard
