#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

#include "smdcard/core.hpp"

namespace smdcard {

// Fraction of real rows inside at least one synthetic k-NN ball.
Measurement manifold_recall(const Eigen::MatrixXd& real, const Eigen::MatrixXd& synthetic,
                            std::size_t k = 3);

// Fraction of real rows whose own real k-NN ball contains a synthetic row.
Measurement manifold_coverage(const Eigen::MatrixXd& real, const Eigen::MatrixXd& synthetic,
                              std::size_t k = 5);

// Hull volume after reducing to `reduce_to` dimensions with PCA fit on the
// synthetic rows alone.
Measurement convex_hull_volume(const Eigen::MatrixXd& synthetic, std::size_t reduce_to = 3);

// Cosine similarity matrix with unit diagonal; zero rows are similar to
// nothing but themselves. `zero_rows` receives their count.
Eigen::MatrixXd cosine_kernel(const Eigen::MatrixXd& x, std::size_t* zero_rows = nullptr);

inline constexpr double kVendiEigenFloor = 1e-12;

Measurement vendi_score(const Eigen::MatrixXd& synthetic);

inline constexpr double kDefaultDppRidge = 1e-9;

// log det(K + ridge I) for the cosine kernel K.
Measurement dpp_logdet(const Eigen::MatrixXd& synthetic, double ridge = kDefaultDppRidge);

// Trace of the unbiased sample covariance.
Measurement total_variance(const Eigen::MatrixXd& synthetic);

// Mean per-dimension histogram entropy (natural log).
Measurement embedding_entropy(const Eigen::MatrixXd& synthetic, std::optional<std::size_t> bins = std::nullopt);

Measurement rarity_score(const Eigen::MatrixXd& real, const Eigen::MatrixXd& synthetic, std::size_t k = 3);

struct KMeansResult {
  std::vector<std::size_t> assignment;
  Eigen::MatrixXd centers;
  double inertia = 0.0;
  std::size_t iterations = 0;
};

inline constexpr std::size_t kKMeansMaxIterations = 100;
inline constexpr double kKMeansTolerance = 1e-6;

// Lloyd's algorithm. The first center is a seeded random row, each further
// center the row farthest from the chosen ones (ties to the lower index).
KMeansResult kmeans(const Eigen::MatrixXd& x, std::size_t k, std::uint64_t seed);

std::size_t default_cluster_count(std::size_t n);

// Normalized occupancy entropy of k-means cluster sizes.
Measurement cluster_balance(const Eigen::MatrixXd& synthetic, std::optional<std::size_t> k_clusters,
                            std::uint64_t seed);

// exp(mean KL(row || marginal)) over an n x c row-stochastic matrix.
Measurement inception_style_score(const Eigen::MatrixXd& class_probs);

// Mean distance of synthetic rows to the real centroid.
Measurement mean_distance_to_centroid(const Eigen::MatrixXd& real, const Eigen::MatrixXd& synthetic);

}  // namespace smdcard
