#pragma once

// Independent reference computations used to cross-check the library.
// Deliberately naive: none of these share code with src/.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace oracle {

// Cyclic Jacobi rotations for a symmetric matrix. Returns eigenvalues
// (unsorted) and eigenvectors as columns.
inline std::pair<Eigen::VectorXd, Eigen::MatrixXd> jacobi_eigen(Eigen::MatrixXd a) {
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  return {a.diagonal(), v};
}

inline Eigen::VectorXd mean(const Eigen::MatrixXd& x) {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) m += x.row(i).transpose();
  return m / static_cast<double>(x.rows());
}

inline Eigen::MatrixXd covariance(const Eigen::MatrixXd& x) {
  const Eigen::VectorXd m = mean(x);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(x.cols(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Eigen::VectorXd d = x.row(i).transpose() - m;
    c += d * d.transpose();
  }
  return c / static_cast<double>(x.rows() - 1);
}

// Denman-Beavers iteration for the principal square root.
inline Eigen::MatrixXd sqrtm_denman_beavers(const Eigen::MatrixXd& a) {
  Eigen::MatrixXd y = a, z = Eigen::MatrixXd::Identity(a.rows(), a.cols());
  for (int i = 0; i < 200; ++i) {
    const Eigen::MatrixXd yn = 0.5 * (y + z.inverse());
    const Eigen::MatrixXd zn = 0.5 * (z + y.inverse());
    const double change = (yn - y).norm();
    y = yn;
    z = zn;
    if (change < 1e-15 * std::max(1.0, y.norm())) break;
  }
  return y;
}

inline double frechet(const Eigen::MatrixXd& r, const Eigen::MatrixXd& s, double reg) {
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(r.cols(), r.cols());
  const Eigen::MatrixXd cr = covariance(r) + reg * I, cs = covariance(s) + reg * I;
  const double mean_term = (mean(r) - mean(s)).squaredNorm();
  return mean_term + (cr + cs - 2.0 * sqrtm_denman_beavers(cr * cs)).trace();
}

// log|det| by Doolittle LU with partial pivoting.
inline double lu_logdet(Eigen::MatrixXd a) {
  const Eigen::Index n = a.rows();
  double logdet = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index piv = k;
    for (Eigen::Index i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
    if (piv != k) a.row(piv).swap(a.row(k));
    logdet += std::log(std::abs(a(k, k)));
    for (Eigen::Index i = k + 1; i < n; ++i) {
      const double f = a(i, k) / a(k, k);
      for (Eigen::Index j = k; j < n; ++j) a(i, j) -= f * a(k, j);
    }
  }
  return logdet;
}

// Minimum mean matching cost over every permutation.
inline double brute_force_matching(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  std::vector<int> perm(static_cast<std::size_t>(a.rows()));
  std::iota(perm.begin(), perm.end(), 0);
  double best = INFINITY;
  do {
    double cost = 0.0;
    for (std::size_t i = 0; i < perm.size(); ++i) {
      cost += (a.row(static_cast<Eigen::Index>(i)) - b.row(perm[i])).norm();
    }
    best = std::min(best, cost);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / static_cast<double>(a.rows());
}

// Sorted distances from every query row to every reference row.
inline std::vector<std::vector<double>> all_pairs_sorted(const Eigen::MatrixXd& q, const Eigen::MatrixXd& ref,
                                                         bool exclude_self) {
  std::vector<std::vector<double>> out(static_cast<std::size_t>(q.rows()));
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    for (Eigen::Index j = 0; j < ref.rows(); ++j) {
      if (exclude_self && i == j) continue;
      out[static_cast<std::size_t>(i)].push_back((q.row(i) - ref.row(j)).norm());
    }
    std::sort(out[static_cast<std::size_t>(i)].begin(), out[static_cast<std::size_t>(i)].end());
  }
  return out;
}

inline std::vector<double> kth_radius(const Eigen::MatrixXd& x, std::size_t k) {
  const auto d = all_pairs_sorted(x, x, true);
  std::vector<double> r;
  for (const auto& row : d) r.push_back(row[k - 1]);
  return r;
}

// Fraction of `points` inside at least one ball (center, radius).
inline double ball_membership(const Eigen::MatrixXd& centers, const std::vector<double>& radius,
                              const Eigen::MatrixXd& points) {
  std::size_t inside = 0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (Eigen::Index j = 0; j < centers.rows(); ++j) {
      if ((points.row(i) - centers.row(j)).norm() <= radius[static_cast<std::size_t>(j)]) {
        ++inside;
        break;
      }
    }
  }
  return static_cast<double>(inside) / static_cast<double>(points.rows());
}

// SSIM from summed-area tables (population statistics, 8x8 windows).
inline double ssim_integral(const std::vector<double>& a, const std::vector<double>& b, std::size_t w, std::size_t h,
                            double peak) {
  const std::size_t W = w + 1;
  std::vector<double> sa(W * (h + 1)), sb(sa), saa(sa), sbb(sa), sab(sa);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double p = a[y * w + x], q = b[y * w + x];
      const auto at = [&](std::vector<double>& t, double v) {
        t[(y + 1) * W + x + 1] = v + t[y * W + x + 1] + t[(y + 1) * W + x] - t[y * W + x];
      };
      at(sa, p);
      at(sb, q);
      at(saa, p * p);
      at(sbb, q * q);
      at(sab, p * q);
    }
  }
  const auto box = [&](const std::vector<double>& t, std::size_t x, std::size_t y) {
    return t[(y + 8) * W + x + 8] - t[y * W + x + 8] - t[(y + 8) * W + x] + t[y * W + x];
  };
  const double c1 = std::pow(0.01 * peak, 2), c2 = std::pow(0.03 * peak, 2);
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t y = 0; y + 8 <= h; ++y) {
    for (std::size_t x = 0; x + 8 <= w; ++x) {
      const double mx = box(sa, x, y) / 64, my = box(sb, x, y) / 64;
      const double vx = box(saa, x, y) / 64 - mx * mx, vy = box(sbb, x, y) / 64 - my * my;
      const double cxy = box(sab, x, y) / 64 - mx * my;
      total += (2 * mx * my + c1) * (2 * cxy + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

// Hull facets of 3-D points in general position by testing every triple.
// Each facet is returned with an outward normal and offset.
struct Facet {
  Eigen::Vector3d normal;
  double offset;
};

inline std::vector<Facet> brute_force_facets(const Eigen::MatrixXd& p) {
  std::vector<Facet> facets;
  const Eigen::Index n = p.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      for (Eigen::Index k = j + 1; k < n; ++k) {
        const Eigen::Vector3d a = p.row(i), b = p.row(j), c = p.row(k);
        Eigen::Vector3d nrm = (b - a).cross(c - a);
        double off = nrm.dot(a);
        int above = 0, below = 0;
        for (Eigen::Index m = 0; m < n && !(above && below); ++m) {
          const double s = nrm.dot(Eigen::Vector3d(p.row(m))) - off;
          if (s > 1e-12) ++above;
          if (s < -1e-12) ++below;
        }
        if (above && below) continue;
        if (above) {
          nrm = -nrm;
          off = -off;
        }
        facets.push_back({nrm, off});
      }
    }
  }
  return facets;
}

inline double monte_carlo_hull_volume(const Eigen::MatrixXd& p, std::size_t samples, unsigned seed) {
  const auto facets = brute_force_facets(p);
  const Eigen::Vector3d lo = p.colwise().minCoeff(), hi = p.colwise().maxCoeff();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t inside = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    Eigen::Vector3d x;
    for (int d = 0; d < 3; ++d) x(d) = lo(d) + (hi(d) - lo(d)) * u(rng);
    bool in = true;
    for (const auto& f : facets) {
      if (f.normal.dot(x) - f.offset > 0) {
        in = false;
        break;
      }
    }
    inside += in;
  }
  return (hi - lo).prod() * static_cast<double>(inside) / static_cast<double>(samples);
}

// One-way ANOVA straight from the sums of squares.
inline std::pair<double, std::pair<double, double>> anova_f(const std::vector<std::vector<double>>& groups) {
  double grand = 0.0;
  std::size_t n = 0;
  for (const auto& g : groups) {
    for (double v : g) grand += v;
    n += g.size();
  }
  grand /= static_cast<double>(n);
  double ssb = 0.0, ssw = 0.0;
  for (const auto& g : groups) {
    const double m = std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(g.size());
    ssb += static_cast<double>(g.size()) * (m - grand) * (m - grand);
    for (double v : g) ssw += (v - m) * (v - m);
  }
  const double d1 = static_cast<double>(groups.size() - 1), d2 = static_cast<double>(n - groups.size());
  return {(ssb / d1) / (ssw / d2), {d1, d2}};
}

inline double f_density(double x, double d1, double d2) {
  if (x <= 0) return d1 == 2 ? 1.0 : 0.0;
  const double lbeta = std::lgamma(d1 / 2) + std::lgamma(d2 / 2) - std::lgamma((d1 + d2) / 2);
  const double log_num = 0.5 * (d1 * std::log(d1 * x) + d2 * std::log(d2) - (d1 + d2) * std::log(d1 * x + d2));
  return std::exp(log_num - std::log(x) - lbeta);
}

// P(F >= f) as 1 minus Simpson's rule over [0, f]. Requires d1 >= 2.
inline double f_upper_tail(double f, double d1, double d2, int intervals = 200000) {
  const double h = f / intervals;
  double s = f_density(0.0, d1, d2) + f_density(f, d1, d2);
  for (int i = 1; i < intervals; ++i) s += (i % 2 ? 4.0 : 2.0) * f_density(i * h, d1, d2);
  return 1.0 - s * h / 3.0;
}

using Row = std::vector<std::string>;

inline std::map<Row, std::vector<std::size_t>> group_rows(const std::vector<Row>& qi) {
  std::map<Row, std::vector<std::size_t>> g;
  for (std::size_t i = 0; i < qi.size(); ++i) g[qi[i]].push_back(i);
  return g;
}

// 1-D EMD between two empirical distributions from their CDFs on the
// sorted union of support points.
inline double cdf_emd(std::vector<double> a, std::vector<double> b) {
  std::vector<double> pts(a);
  pts.insert(pts.end(), b.begin(), b.end());
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const auto cdf = [](const std::vector<double>& v, double x) {
    return static_cast<double>(std::upper_bound(v.begin(), v.end(), x) - v.begin()) / static_cast<double>(v.size());
  };
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    total += std::abs(cdf(a, pts[i]) - cdf(b, pts[i])) * (pts[i + 1] - pts[i]);
  }
  return total;
}

inline Eigen::MatrixXd gaussian(std::size_t n, std::size_t d, unsigned seed, double shift = 0.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = g(rng) + shift;
  return x;
}

}  // namespace oracle
