#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

#include "smdcard/core.hpp"

namespace smdcard {

Eigen::VectorXd column_mean(const Eigen::MatrixXd& x);

// Sample covariance with n-1 denominator. A single row yields the zero matrix.
Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& x);

double euclidean(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                 const Eigen::Ref<const Eigen::RowVectorXd>& b);

// Linear-interpolation quantile of an unsorted sample, q in [0, 1].
double quantile(std::vector<double> values, double q);

// ---------------------------------------------------------------------------
// PCA
// ---------------------------------------------------------------------------

struct PcaModel {
  Eigen::RowVectorXd mean;
  Eigen::MatrixXd components;  // d x target, columns are unit loadings
  Eigen::VectorXd explained_variance;
  Eigen::VectorXd explained_ratio;
  std::size_t zero_padded = 0;  // components beyond the data rank
  bool identity = false;

  EmbeddingSet project(const EmbeddingSet& set) const;
};

// Fits one shared basis on the row union of `sets`. Components are ordered
// by decreasing variance; each is signed so its largest-magnitude loading is
// positive. With target_dim == d the projection is the identity on the
// centered data.
PcaModel fit_pca(std::span<const EmbeddingSet* const> sets, std::size_t target_dim);

EmbeddingSet pca_reduce(const EmbeddingSet& set, std::size_t target_dim);

// ---------------------------------------------------------------------------
// Exact k-nearest-neighbor distances
// ---------------------------------------------------------------------------

// Returns an n_query x k matrix; column j holds the distance to the
// (j+1)-th nearest reference row. With exclude_self the query must be the
// reference and row i never matches itself. Throws kInvalidArgument when k
// exceeds the available neighbors.
Eigen::MatrixXd knn_distances(const Eigen::MatrixXd& query, const Eigen::MatrixXd& reference,
                              std::size_t k, bool exclude_self);

// Distance from each row to its k-th nearest other row of the same set.
Eigen::VectorXd knn_radii(const Eigen::MatrixXd& x, std::size_t k);

// Distance from each query row to its nearest reference row.
Eigen::VectorXd nearest_distances(const Eigen::MatrixXd& query, const Eigen::MatrixXd& reference);

}  // namespace smdcard
