#include "smdcard/coverage.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "smdcard/congruence.hpp"
#include "smdcard/error.hpp"
#include "smdcard/hull.hpp"
#include "smdcard/linalg.hpp"
#include "smdcard/random.hpp"

namespace smdcard {

namespace {

void require_same_dim(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.cols() != b.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "real d=" + std::to_string(a.cols()) +
                                                   " does not match synthetic d=" + std::to_string(b.cols()));
  }
}

// Fraction of `points` inside at least one ball (center row of `centers`,
// radius radii[row]).
double ball_membership(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centers,
                       const Eigen::VectorXd& radii) {
  std::size_t inside = 0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (Eigen::Index j = 0; j < centers.rows(); ++j) {
      if (euclidean(points.row(i), centers.row(j)) <= radii[j]) {
        ++inside;
        break;
      }
    }
  }
  return static_cast<double>(inside) / static_cast<double>(points.rows());
}

double shannon(const std::vector<double>& counts) {
  double total = 0.0;
  for (double c : counts) total += c;
  double h = 0.0;
  for (double c : counts) {
    if (c > 0) {
      const double p = c / total;
      h -= p * std::log(p);
    }
  }
  return h;
}

}  // namespace

Measurement manifold_recall(const Eigen::MatrixXd& real, const Eigen::MatrixXd& synthetic, std::size_t k) {
  require_same_dim(real, synthetic);
  if (static_cast<std::size_t>(synthetic.rows()) <= k) {
    return Measurement::undefined("insufficient samples: synthetic n must exceed k=" + std::to_string(k));
  }
  const Eigen::VectorXd radii = knn_radii(synthetic, k);
  return Measurement::of(ball_membership(real, synthetic, radii), {{"k", static_cast<double>(k)}});
}

Measurement manifold_coverage(const Eigen::MatrixXd& real, const Eigen::MatrixXd& synthetic, std::size_t k) {
  require_same_dim(real, synthetic);
  if (static_cast<std::size_t>(real.rows()) <= k) {
    return Measurement::undefined("insufficient samples: real n must exceed k=" + std::to_string(k));
  }
  const Eigen::VectorXd radii = knn_radii(real, k);
  const Eigen::VectorXd nearest = nearest_distances(real, synthetic);
  std::size_t covered = 0;
  for (Eigen::Index i = 0; i < real.rows(); ++i) covered += nearest[i] <= radii[i] ? 1 : 0;
  return Measurement::of(static_cast<double>(covered) / static_cast<double>(real.rows()),
                         {{"k", static_cast<double>(k)}});
}

Measurement convex_hull_volume(const Eigen::MatrixXd& synthetic, std::size_t reduce_to) {
  if (reduce_to < 1 || reduce_to > 3) {
    throw Error(ErrorCode::kInvalidArgument, "hull reduction target must be 1, 2, or 3");
  }
  Eigen::MatrixXd pts = synthetic;
  Diagnostics diag;
  if (static_cast<std::size_t>(synthetic.cols()) > reduce_to) {
    const auto set = EmbeddingSet::from_matrix(synthetic);
    const EmbeddingSet* one[] = {&set};
    const auto model = fit_pca(one, reduce_to);
    pts = model.project(set).data();
    diag["explained_ratio"] = model.explained_ratio.sum();
    diag["zero_padded_components"] = static_cast<double>(model.zero_padded);
  }
  if (static_cast<std::size_t>(pts.rows()) < static_cast<std::size_t>(pts.cols()) + 1) {
    diag["degenerate"] = 1.0;
    return Measurement::of(0.0, std::move(diag));
  }
  const auto hull = convex_hull_measure(pts);
  diag["degenerate"] = hull.degenerate ? 1.0 : 0.0;
  diag["hull_vertices"] = static_cast<double>(hull.hull_vertices);
  diag["working_dimension"] = static_cast<double>(pts.cols());
  return Measurement::of(hull.volume, std::move(diag));
}

Eigen::MatrixXd cosine_kernel(const Eigen::MatrixXd& x, std::size_t* zero_rows) {
  const auto n = x.rows();
  Eigen::VectorXd norms = x.rowwise().norm();
  std::size_t zeros = 0;
  Eigen::MatrixXd unit = x;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (norms[i] == 0.0) {
      ++zeros;
    } else {
      unit.row(i) /= norms[i];
    }
  }
  Eigen::MatrixXd k = unit * unit.transpose();
  for (Eigen::Index i = 0; i < n; ++i) k(i, i) = 1.0;
  if (zero_rows) *zero_rows = zeros;
  return k;
}

Measurement vendi_score(const Eigen::MatrixXd& synthetic) {
  std::size_t zeros = 0;
  const auto n = static_cast<double>(synthetic.rows());
  const Eigen::MatrixXd k = cosine_kernel(synthetic, &zeros) / n;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(k, Eigen::EigenvaluesOnly);
  double h = 0.0;
  for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
    const double l = eig.eigenvalues()[i];
    if (l >= kVendiEigenFloor) h -= l * std::log(l);
  }
  return Measurement::of(std::clamp(std::exp(h), 1.0, n), {{"zero_rows", static_cast<double>(zeros)}});
}

Measurement dpp_logdet(const Eigen::MatrixXd& synthetic, double ridge) {
  if (ridge < 0) throw Error(ErrorCode::kInvalidArgument, "DPP ridge must be nonnegative");
  std::size_t zeros = 0;
  Eigen::MatrixXd k = cosine_kernel(synthetic, &zeros);
  k.diagonal().array() += ridge;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(k);
  const Eigen::VectorXd d = ldlt.vectorD();
  Diagnostics diag{{"ridge", ridge}, {"zero_rows", static_cast<double>(zeros)}};
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (!(d[i] > 0)) return Measurement::undefined("kernel numerically singular", std::move(diag));
    logdet += std::log(d[i]);
  }
  return Measurement::of(logdet, std::move(diag));
}

Measurement total_variance(const Eigen::MatrixXd& synthetic) {
  if (synthetic.rows() < 2) return Measurement::undefined("variance needs n >= 2");
  return Measurement::of(sample_covariance(synthetic).trace());
}

Measurement embedding_entropy(const Eigen::MatrixXd& synthetic, std::optional<std::size_t> bins) {
  if (bins && *bins == 0) throw Error(ErrorCode::kInvalidArgument, "bin count must be positive");
  Diagnostics diag;
  double sum = 0.0;
  double constant = 0.0;
  for (Eigen::Index j = 0; j < synthetic.cols(); ++j) {
    std::vector<double> v(static_cast<std::size_t>(synthetic.rows()));
    for (Eigen::Index i = 0; i < synthetic.rows(); ++i) v[static_cast<std::size_t>(i)] = synthetic(i, j);
    const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
    double h = 0.0;
    if (*mx - *mn > 0) {
      const std::size_t b = bins ? *bins : freedman_diaconis_bins(v);
      h = shannon(histogram(v, *mn, *mx, b));
    } else {
      constant += 1.0;
    }
    diag["dim_" + std::to_string(j)] = h;
    sum += h;
  }
  diag["constant_dimensions"] = constant;
  return Measurement::of(sum / static_cast<double>(synthetic.cols()), std::move(diag));
}

Measurement rarity_score(const Eigen::MatrixXd& real, const Eigen::MatrixXd& synthetic, std::size_t k) {
  require_same_dim(real, synthetic);
  if (static_cast<std::size_t>(real.rows()) <= k) {
    return Measurement::undefined("insufficient samples: real n must exceed k=" + std::to_string(k));
  }
  const Eigen::VectorXd radii = knn_radii(real, k);
  double sum = 0.0;
  std::size_t inside = 0;
  for (Eigen::Index i = 0; i < synthetic.rows(); ++i) {
    double smallest = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < real.rows(); ++j) {
      if (radii[j] < smallest && euclidean(synthetic.row(i), real.row(j)) <= radii[j]) smallest = radii[j];
    }
    if (std::isfinite(smallest)) {
      sum += smallest;
      ++inside;
    }
  }
  const double outside = 1.0 - static_cast<double>(inside) / static_cast<double>(synthetic.rows());
  Diagnostics diag{{"k", static_cast<double>(k)}, {"out_of_manifold_fraction", outside}};
  if (inside == 0) return Measurement::undefined("no synthetic point inside the real manifold", std::move(diag));
  return Measurement::of(sum / static_cast<double>(inside), std::move(diag));
}

KMeansResult kmeans(const Eigen::MatrixXd& x, std::size_t k, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(x.rows());
  if (k == 0 || k > n) {
    throw Error(ErrorCode::kInvalidArgument, "k-means needs 1 <= k <= n (k=" + std::to_string(k) +
                                                 ", n=" + std::to_string(n) + ")");
  }
  Rng rng(seed);
  std::vector<Eigen::Index> chosen{static_cast<Eigen::Index>(rng.index(n))};
  Eigen::VectorXd nearest(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) nearest[i] = euclidean(x.row(i), x.row(chosen[0]));
  while (chosen.size() < k) {
    Eigen::Index far = 0;
    for (Eigen::Index i = 1; i < x.rows(); ++i) {
      if (nearest[i] > nearest[far]) far = i;
    }
    chosen.push_back(far);
    for (Eigen::Index i = 0; i < x.rows(); ++i) nearest[i] = std::min(nearest[i], euclidean(x.row(i), x.row(far)));
  }

  KMeansResult out;
  out.centers.resize(static_cast<Eigen::Index>(k), x.cols());
  for (std::size_t c = 0; c < k; ++c) out.centers.row(static_cast<Eigen::Index>(c)) = x.row(chosen[c]);
  out.assignment.assign(n, 0);

  double previous = std::numeric_limits<double>::infinity();
  for (out.iterations = 1; out.iterations <= kKMeansMaxIterations; ++out.iterations) {
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      std::size_t best = 0;
      double best_d = (x.row(r) - out.centers.row(0)).squaredNorm();
      for (std::size_t c = 1; c < k; ++c) {
        const double d = (x.row(r) - out.centers.row(static_cast<Eigen::Index>(c))).squaredNorm();
        if (d < best_d) best_d = d, best = c;
      }
      out.assignment[i] = best;
      inertia += best_d;
    }
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), x.cols());
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums.row(static_cast<Eigen::Index>(out.assignment[i])) += x.row(static_cast<Eigen::Index>(i));
      ++counts[out.assignment[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        out.centers.row(static_cast<Eigen::Index>(c)) = sums.row(static_cast<Eigen::Index>(c)) / static_cast<double>(counts[c]);
      }
    }
    out.inertia = inertia;
    if (inertia == 0.0 || std::abs(previous - inertia) <= kKMeansTolerance * previous) break;
    previous = inertia;
  }
  out.iterations = std::min(out.iterations, kKMeansMaxIterations);
  return out;
}

std::size_t default_cluster_count(std::size_t n) { return std::max<std::size_t>(2, std::min<std::size_t>(10, n / 5)); }

Measurement cluster_balance(const Eigen::MatrixXd& synthetic, std::optional<std::size_t> k_clusters,
                            std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(synthetic.rows());
  if (n < 4) return Measurement::undefined("cluster balance needs n >= 4");
  const std::size_t k = k_clusters.value_or(default_cluster_count(n));
  if (k < 2 || k > n) return Measurement::undefined("cluster count must be in [2, n]");
  const auto result = kmeans(synthetic, k, seed);
  std::vector<double> sizes(k, 0.0);
  for (auto a : result.assignment) sizes[a] += 1.0;
  return Measurement::of(shannon(sizes) / std::log(static_cast<double>(k)),
                         {{"k_clusters", static_cast<double>(k)},
                          {"inertia", result.inertia},
                          {"iterations", static_cast<double>(result.iterations)}});
}

Measurement inception_style_score(const Eigen::MatrixXd& class_probs) {
  const auto n = class_probs.rows();
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "empty class-probability matrix");
  for (Eigen::Index i = 0; i < n; ++i) {
    if ((class_probs.row(i).array() < 0).any() || std::abs(class_probs.row(i).sum() - 1.0) > 1e-6) {
      throw Error(ErrorCode::kInvalidArgument,
                  "class-probability row " + std::to_string(i + 1) + " is not stochastic");
    }
  }
  const Eigen::RowVectorXd marginal = class_probs.colwise().mean();
  double kl_sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index c = 0; c < class_probs.cols(); ++c) {
      const double p = class_probs(i, c);
      if (p > 0) kl_sum += p * std::log(p / marginal[c]);
    }
  }
  return Measurement::of(std::exp(kl_sum / static_cast<double>(n)),
                         {{"classes", static_cast<double>(class_probs.cols())}});
}

Measurement mean_distance_to_centroid(const Eigen::MatrixXd& real, const Eigen::MatrixXd& synthetic) {
  require_same_dim(real, synthetic);
  const Eigen::RowVectorXd c = real.colwise().mean();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < synthetic.rows(); ++i) sum += euclidean(synthetic.row(i), c);
  return Measurement::of(sum / static_cast<double>(synthetic.rows()));
}

}  // namespace smdcard
