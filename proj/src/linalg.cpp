#include "smdcard/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "smdcard/error.hpp"

namespace smdcard {

Eigen::VectorXd column_mean(const Eigen::MatrixXd& x) { return x.colwise().mean().transpose(); }

Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& x) {
  const auto n = x.rows();
  if (n < 2) return Eigen::MatrixXd::Zero(x.cols(), x.cols());
  const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
  return (centered.transpose() * centered) / static_cast<double>(n - 1);
}

double euclidean(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                 const Eigen::Ref<const Eigen::RowVectorXd>& b) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < a.size(); ++j) {
    const double diff = a[j] - b[j];
    s += diff * diff;
  }
  return std::sqrt(s);
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw Error(ErrorCode::kInvalidArgument, "quantile of empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

// ---------------------------------------------------------------------------

EmbeddingSet PcaModel::project(const EmbeddingSet& set) const {
  if (set.dim() != static_cast<std::size_t>(mean.size())) {
    throw Error(ErrorCode::kDimensionMismatch, "PCA model fit on d=" + std::to_string(mean.size()) +
                                                   " cannot project d=" + std::to_string(set.dim()));
  }
  Eigen::MatrixXd centered = set.data().rowwise() - mean;
  if (identity) return set.with_data(std::move(centered));
  return set.with_data(centered * components);
}

PcaModel fit_pca(std::span<const EmbeddingSet* const> sets, std::size_t target_dim) {
  if (sets.empty()) throw Error(ErrorCode::kInvalidArgument, "PCA needs at least one set");
  const auto d = sets.front()->dim();
  if (target_dim == 0 || target_dim > d) {
    throw Error(ErrorCode::kInvalidArgument,
                "PCA target dimension must be in [1, " + std::to_string(d) + "], got " +
                    std::to_string(target_dim));
  }
  std::size_t n = 0;
  for (const auto* s : sets) {
    if (s->dim() != d) throw Error(ErrorCode::kDimensionMismatch, "PCA inputs differ in dimension");
    n += s->size();
  }
  Eigen::MatrixXd all(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  Eigen::Index row = 0;
  for (const auto* s : sets) {
    all.middleRows(row, s->data().rows()) = s->data();
    row += s->data().rows();
  }

  PcaModel model;
  model.mean = all.colwise().mean();
  const Eigen::MatrixXd centered = all.rowwise() - model.mean;
  const Eigen::MatrixXd cov =
      (centered.transpose() * centered) / static_cast<double>(std::max<std::size_t>(n - 1, 1));

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  // Eigen sorts ascending; walk from the top.
  const Eigen::VectorXd values = eig.eigenvalues().cwiseMax(0.0);
  const double total = values.sum();
  const double scale = std::max(values.maxCoeff(), 1.0);
  const double rank_tol = 1e-12 * scale * static_cast<double>(d);

  const auto t = static_cast<Eigen::Index>(target_dim);
  model.components = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), t);
  model.explained_variance = Eigen::VectorXd::Zero(t);
  model.explained_ratio = Eigen::VectorXd::Zero(t);
  for (Eigen::Index c = 0; c < t; ++c) {
    const Eigen::Index src = static_cast<Eigen::Index>(d) - 1 - c;
    const double lambda = values[src];
    if (lambda <= rank_tol) {
      ++model.zero_padded;
      continue;
    }
    Eigen::VectorXd v = eig.eigenvectors().col(src);
    Eigen::Index arg = 0;
    for (Eigen::Index j = 1; j < v.size(); ++j) {
      if (std::abs(v[j]) > std::abs(v[arg])) arg = j;
    }
    if (v[arg] < 0) v = -v;
    model.components.col(c) = v;
    model.explained_variance[c] = lambda;
    model.explained_ratio[c] = total > 0 ? lambda / total : 0.0;
  }
  model.identity = target_dim == d;
  return model;
}

EmbeddingSet pca_reduce(const EmbeddingSet& set, std::size_t target_dim) {
  const EmbeddingSet* one[] = {&set};
  return fit_pca(one, target_dim).project(set);
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd knn_distances(const Eigen::MatrixXd& query, const Eigen::MatrixXd& reference,
                              std::size_t k, bool exclude_self) {
  if (query.cols() != reference.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "kNN query and reference differ in dimension");
  }
  const auto nr = static_cast<std::size_t>(reference.rows());
  const std::size_t limit = exclude_self ? nr - 1 : nr;
  if (k == 0 || k > limit) {
    throw Error(ErrorCode::kInvalidArgument, "k=" + std::to_string(k) + " out of range; limit is " +
                                                 std::to_string(limit) +
                                                 (exclude_self ? " (self excluded)" : ""));
  }
  if (exclude_self && query.rows() != reference.rows()) {
    throw Error(ErrorCode::kInvalidArgument, "self exclusion requires query == reference");
  }

  const auto nq = query.rows();
  Eigen::MatrixXd out(nq, static_cast<Eigen::Index>(k));
  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(nr);
  for (Eigen::Index i = 0; i < nq; ++i) {
    dist.clear();
    for (std::size_t j = 0; j < nr; ++j) {
      if (exclude_self && static_cast<Eigen::Index>(j) == i) continue;
      dist.emplace_back(euclidean(query.row(i), reference.row(static_cast<Eigen::Index>(j))), j);
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    for (std::size_t j = 0; j < k; ++j) out(i, static_cast<Eigen::Index>(j)) = dist[j].first;
  }
  return out;
}

Eigen::VectorXd knn_radii(const Eigen::MatrixXd& x, std::size_t k) {
  return knn_distances(x, x, k, true).col(static_cast<Eigen::Index>(k) - 1);
}

Eigen::VectorXd nearest_distances(const Eigen::MatrixXd& query, const Eigen::MatrixXd& reference) {
  return knn_distances(query, reference, 1, false).col(0);
}

}  // namespace smdcard
