#include "smdcard/congruence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "smdcard/assignment.hpp"
#include "smdcard/error.hpp"
#include "smdcard/linalg.hpp"

namespace smdcard {

namespace {

void require_same_dim(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.cols() != b.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "real d=" + std::to_string(a.cols()) +
                                                   " does not match synthetic d=" + std::to_string(b.cols()));
  }
}

std::vector<double> column(const Eigen::MatrixXd& x, Eigen::Index j) {
  std::vector<double> v(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) v[static_cast<std::size_t>(i)] = x(i, j);
  return v;
}

double iqr(std::span<const double> values) {
  std::vector<double> v(values.begin(), values.end());
  return quantile(v, 0.75) - quantile(v, 0.25);
}

// Square root of a symmetric positive semidefinite matrix.
Eigen::MatrixXd spd_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  const Eigen::VectorXd s = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * s.asDiagonal() * eig.eigenvectors().transpose();
}

bool same_geometry(const GrayImage& a, const GrayImage& b) {
  return a.width == b.width && a.height == b.height && a.peak == b.peak;
}

}  // namespace

std::size_t freedman_diaconis_bins(std::span<const double> values) {
  if (values.size() < 2) return kMinBins;
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  const double range = *mx - *mn;
  if (range <= 0) return kMinBins;
  const double spread = iqr(values);
  if (spread <= 0) return kMaxBins;
  const double h = 2.0 * spread / std::cbrt(static_cast<double>(values.size()));
  const double bins = std::ceil(range / h);
  return static_cast<std::size_t>(std::clamp(bins, static_cast<double>(kMinBins), static_cast<double>(kMaxBins)));
}

std::vector<double> histogram(std::span<const double> values, double lo, double hi, std::size_t bins) {
  std::vector<double> counts(bins, 0.0);
  const double width = hi - lo;
  for (double v : values) {
    std::size_t b = 0;
    if (width > 0) {
      const double pos = (v - lo) / width * static_cast<double>(bins);
      b = pos <= 0 ? 0 : std::min(static_cast<std::size_t>(pos), bins - 1);
    }
    counts[b] += 1.0;
  }
  return counts;
}

double jensen_shannon_masses(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size() || p.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "JSD needs two nonempty histograms of equal length");
  }
  const auto bins = static_cast<double>(p.size());
  double sp = 0, sq = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    sp += p[i];
    sq += q[i];
  }
  double js = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double pi = (p[i] / sp + kHistogramSmoothing) / (1.0 + bins * kHistogramSmoothing);
    const double qi = (q[i] / sq + kHistogramSmoothing) / (1.0 + bins * kHistogramSmoothing);
    const double mi = 0.5 * (pi + qi);
    js += 0.5 * pi * std::log2(pi / mi) + 0.5 * qi * std::log2(qi / mi);
  }
  return std::clamp(js, 0.0, 1.0);
}

Measurement cosine_centroid(const Eigen::MatrixXd& real, const Eigen::MatrixXd& synthetic) {
  require_same_dim(real, synthetic);
  const Eigen::VectorXd a = column_mean(real);
  const Eigen::VectorXd b = column_mean(synthetic);
  const double na = a.norm();
  const double nb = b.norm();
  Diagnostics diag{{"real_centroid_norm", na}, {"synthetic_centroid_norm", nb}};
  if (na == 0.0 || nb == 0.0) return Measurement::undefined("zero centroid", std::move(diag));
  return Measurement::of(std::clamp(a.dot(b) / (na * nb), -1.0, 1.0), std::move(diag));
}

double wasserstein1_1d(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::kInvalidArgument, "W1 of an empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  // Integrate |F_a - F_b| over the merged breakpoints.
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double prev = std::min(a.front(), b.front());
  double total = 0.0;
  while (i < a.size() || j < b.size()) {
    double next;
    if (j >= b.size() || (i < a.size() && a[i] <= b[j])) {
      next = a[i];
    } else {
      next = b[j];
    }
    const double fa = static_cast<double>(i) / na;
    const double fb = static_cast<double>(j) / nb;
    total += std::abs(fa - fb) * (next - prev);
    prev = next;
    while (i < a.size() && a[i] == next) ++i;
    while (j < b.size() && b[j] == next) ++j;
  }
  return total;
}

Measurement wasserstein1(const Eigen::MatrixXd& real, const Eigen::MatrixXd& synthetic,
                         TransportMode mode) {
  require_same_dim(real, synthetic);
  if (mode == TransportMode::kPerDimension) {
    Diagnostics diag;
    double sum = 0.0;
    for (Eigen::Index j = 0; j < real.cols(); ++j) {
      const double w = wasserstein1_1d(column(real, j), column(synthetic, j));
      diag["dim_" + std::to_string(j)] = w;
      sum += w;
    }
    return Measurement::of(sum / static_cast<double>(real.cols()), std::move(diag));
  }

  if (real.rows() != synthetic.rows()) {
    throw Error(ErrorCode::kInvalidArgument,
                "exact-matching transport needs equal sample counts (real n=" + std::to_string(real.rows()) +
                    ", synthetic n=" + std::to_string(synthetic.rows()) + "); use per-dimension mode");
  }
  if (static_cast<std::size_t>(real.rows()) > kMaxExactMatching) {
    throw Error(ErrorCode::kInvalidArgument, "exact-matching transport is limited to n <= " +
                                                 std::to_string(kMaxExactMatching) + "; use per-dimension mode");
  }
  const auto n = real.rows();
  Eigen::MatrixXd cost(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) cost(i, j) = euclidean(real.row(i), synthetic.row(j));
  }
  const auto match = min_cost_assignment(cost);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) total += cost(i, match[static_cast<std::size_t>(i)]);
  return Measurement::of(total / static_cast<double>(n));
}

Measurement jensen_shannon(const Eigen::MatrixXd& real, const Eigen::MatrixXd& synthetic,
                           std::optional<std::size_t> bins) {
  require_same_dim(real, synthetic);
  if (bins && *bins == 0) throw Error(ErrorCode::kInvalidArgument, "bin count must be positive");
  Diagnostics diag;
  double constant = 0.0;
  double sum = 0.0;
  for (Eigen::Index j = 0; j < real.cols(); ++j) {
    const auto r = column(real, j);
    const auto s = column(synthetic, j);
    std::vector<double> pooled = r;
    pooled.insert(pooled.end(), s.begin(), s.end());
    const auto [mn, mx] = std::minmax_element(pooled.begin(), pooled.end());
    if (*mx - *mn <= 0) {
      constant += 1.0;
      diag["dim_" + std::to_string(j)] = 0.0;
      continue;
    }
    const std::size_t b = bins ? *bins : freedman_diaconis_bins(pooled);
    const double js = jensen_shannon_masses(histogram(r, *mn, *mx, b), histogram(s, *mn, *mx, b));
    diag["dim_" + std::to_string(j)] = js;
    sum += js;
  }
  diag["constant_dimensions"] = constant;
  return Measurement::of(sum / static_cast<double>(real.cols()), std::move(diag));
}

Measurement frechet_distance(const Eigen::MatrixXd& real, const Eigen::MatrixXd& synthetic) {
  require_same_dim(real, synthetic);
  if (real.rows() < 2 || synthetic.rows() < 2) {
    return Measurement::undefined("insufficient samples");
  }
  const auto d = real.cols();
  const Eigen::MatrixXd reg = kFrechetRegularization * Eigen::MatrixXd::Identity(d, d);
  const Eigen::MatrixXd cr = sample_covariance(real) + reg;
  const Eigen::MatrixXd cs = sample_covariance(synthetic) + reg;
  const double mean_term = (column_mean(real) - column_mean(synthetic)).squaredNorm();

  // tr sqrt(cr cs) = tr sqrt(cr^1/2 cs cr^1/2), the latter symmetric PSD.
  const Eigen::MatrixXd root = spd_sqrt(cr);
  Eigen::MatrixXd inner = root * cs * root;
  inner = 0.5 * (inner + inner.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(inner, Eigen::EigenvaluesOnly);
  const double tr_sqrt = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();

  const double trace_term = cr.trace() + cs.trace() - 2.0 * tr_sqrt;
  double value = mean_term + trace_term;
  if (value < 0 && value > -1e-8) value = 0.0;
  return Measurement::of(value, {{"mean_term", mean_term},
                                 {"trace_term", trace_term},
                                 {"regularization", kFrechetRegularization}});
}

Measurement manifold_precision(const Eigen::MatrixXd& real, const Eigen::MatrixXd& synthetic,
                               std::size_t k) {
  require_same_dim(real, synthetic);
  if (static_cast<std::size_t>(real.rows()) <= k) {
    return Measurement::undefined("insufficient samples: real n must exceed k=" + std::to_string(k));
  }
  const Eigen::VectorXd radii = knn_radii(real, k);
  std::size_t inside = 0;
  for (Eigen::Index i = 0; i < synthetic.rows(); ++i) {
    for (Eigen::Index j = 0; j < real.rows(); ++j) {
      if (euclidean(synthetic.row(i), real.row(j)) <= radii[j]) {
        ++inside;
        break;
      }
    }
  }
  return Measurement::of(static_cast<double>(inside) / static_cast<double>(synthetic.rows()),
                         {{"k", static_cast<double>(k)}, {"mean_real_radius", radii.mean()}});
}

Measurement centroid_distance(const Eigen::MatrixXd& real, const Eigen::MatrixXd& synthetic) {
  require_same_dim(real, synthetic);
  return Measurement::of((column_mean(real) - column_mean(synthetic)).norm());
}

// ---------------------------------------------------------------------------

double psnr_pair(const GrayImage& real, const GrayImage& synthetic) {
  if (!same_geometry(real, synthetic)) {
    throw Error(ErrorCode::kInvalidArgument, "image pair differs in size or bit depth");
  }
  double sse = 0.0;
  for (std::size_t i = 0; i < real.pixels.size(); ++i) {
    const double d = real.pixels[i] - synthetic.pixels[i];
    sse += d * d;
  }
  if (sse == 0.0) return std::numeric_limits<double>::infinity();
  const double mse = sse / static_cast<double>(real.pixels.size());
  return 10.0 * std::log10(real.peak * real.peak / mse);
}

double ssim_pair(const GrayImage& real, const GrayImage& synthetic) {
  if (!same_geometry(real, synthetic)) {
    throw Error(ErrorCode::kInvalidArgument, "image pair differs in size or bit depth");
  }
  if (real.width < kSsimWindow || real.height < kSsimWindow) {
    throw Error(ErrorCode::kInvalidArgument, "image smaller than the 8x8 SSIM window");
  }
  const double c1 = (0.01 * real.peak) * (0.01 * real.peak);
  const double c2 = (0.03 * real.peak) * (0.03 * real.peak);
  constexpr double kN = static_cast<double>(kSsimWindow * kSsimWindow);
  double total = 0.0;
  std::size_t windows = 0;
  for (std::size_t y0 = 0; y0 + kSsimWindow <= real.height; ++y0) {
    for (std::size_t x0 = 0; x0 + kSsimWindow <= real.width; ++x0) {
      double mx = 0, my = 0;
      for (std::size_t y = y0; y < y0 + kSsimWindow; ++y) {
        for (std::size_t x = x0; x < x0 + kSsimWindow; ++x) {
          mx += real.at(x, y);
          my += synthetic.at(x, y);
        }
      }
      mx /= kN;
      my /= kN;
      double vx = 0, vy = 0, cxy = 0;
      for (std::size_t y = y0; y < y0 + kSsimWindow; ++y) {
        for (std::size_t x = x0; x < x0 + kSsimWindow; ++x) {
          const double a = real.at(x, y) - mx;
          const double b = synthetic.at(x, y) - my;
          vx += a * a;
          vy += b * b;
          cxy += a * b;
        }
      }
      vx /= kN;
      vy /= kN;
      cxy /= kN;
      total += ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++windows;
    }
  }
  return total / static_cast<double>(windows);
}

namespace {

template <typename F>
Measurement mean_over_pairs(std::span<const LoadedPair> pairs, F&& per_pair, bool count_identical) {
  double sum = 0.0;
  std::size_t used = 0, skipped = 0, identical = 0;
  bool infinite = false;
  for (const auto& p : pairs) {
    double v;
    try {
      v = per_pair(p.real, p.synthetic);
    } catch (const Error&) {
      ++skipped;
      continue;
    }
    ++used;
    if (std::isinf(v)) {
      infinite = true;
      ++identical;
    } else {
      sum += v;
    }
  }
  Diagnostics diag{{"pairs", static_cast<double>(used)}, {"skipped_pairs", static_cast<double>(skipped)}};
  if (count_identical) diag["identical_pairs"] = static_cast<double>(identical);
  if (used == 0) return Measurement::undefined("no usable image pairs", std::move(diag));
  if (infinite) return {MetricValue::infinity(), std::move(diag)};
  return Measurement::of(sum / static_cast<double>(used), std::move(diag));
}

}  // namespace

Measurement psnr(std::span<const LoadedPair> pairs) { return mean_over_pairs(pairs, psnr_pair, true); }

Measurement ssim(std::span<const LoadedPair> pairs) { return mean_over_pairs(pairs, ssim_pair, false); }

}  // namespace smdcard
