#include "smdcard/hull.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "smdcard/error.hpp"

namespace smdcard {

namespace {

double extent(const Eigen::MatrixXd& p) {
  const Eigen::RowVectorXd span = p.colwise().maxCoeff() - p.colwise().minCoeff();
  return std::max(span.norm(), 1e-300);
}

HullVolume hull_1d(const Eigen::MatrixXd& p) {
  const double len = p.col(0).maxCoeff() - p.col(0).minCoeff();
  return {len, len == 0.0, len == 0.0 ? 1u : 2u};
}

double cross(const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

HullVolume hull_2d(const Eigen::MatrixXd& p) {
  std::vector<Eigen::Vector2d> pts(static_cast<std::size_t>(p.rows()));
  for (Eigen::Index i = 0; i < p.rows(); ++i) pts[static_cast<std::size_t>(i)] = {p(i, 0), p(i, 1)};
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return {0.0, true, pts.size()};

  // Andrew's monotone chain.
  std::vector<Eigen::Vector2d> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& q : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], q) <= 0) --k;
    hull[k++] = q;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);

  double twice = 0.0;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const auto& a = hull[i];
    const auto& b = hull[(i + 1) % hull.size()];
    twice += a.x() * b.y() - b.x() * a.y();
  }
  const double area = std::abs(twice) / 2.0;
  const double scale = extent(p);
  if (hull.size() < 3 || area <= 1e-12 * scale * scale) return {0.0, true, hull.size()};
  return {area, false, hull.size()};
}

struct Face {
  std::array<std::size_t, 3> v;
  Eigen::Vector3d normal;
  double offset;  // normal . x = offset on the plane
  bool alive = true;
};

Face make_face(const std::vector<Eigen::Vector3d>& pts, std::size_t a, std::size_t b, std::size_t c) {
  Face f{{a, b, c}, (pts[b] - pts[a]).cross(pts[c] - pts[a]), 0.0, true};
  f.offset = f.normal.dot(pts[a]);
  return f;
}

HullVolume hull_3d(const Eigen::MatrixXd& p) {
  const auto n = static_cast<std::size_t>(p.rows());
  std::vector<Eigen::Vector3d> pts(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    pts[i] = {p(r, 0), p(r, 1), p(r, 2)};
  }
  const double scale = extent(p);
  const double eps_len = 1e-10 * scale;

  // Initial simplex from extreme points.
  std::size_t i0 = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (pts[i].x() < pts[i0].x()) i0 = i;
  }
  std::size_t i1 = i0;
  double best = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = (pts[i] - pts[i0]).norm();
    if (d > best) best = d, i1 = i;
  }
  if (best <= eps_len) return {0.0, true, 1};
  const Eigen::Vector3d axis = (pts[i1] - pts[i0]).normalized();
  std::size_t i2 = i0;
  best = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = (pts[i] - pts[i0]).cross(axis).norm();
    if (d > best) best = d, i2 = i;
  }
  if (best <= eps_len) return {0.0, true, 2};
  const Eigen::Vector3d plane_n = (pts[i1] - pts[i0]).cross(pts[i2] - pts[i0]).normalized();
  std::size_t i3 = i0;
  best = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = std::abs((pts[i] - pts[i0]).dot(plane_n));
    if (d > best) best = d, i3 = i;
  }
  if (best <= eps_len) return {0.0, true, 3};

  const Eigen::Vector3d interior = (pts[i0] + pts[i1] + pts[i2] + pts[i3]) / 4.0;
  std::vector<Face> faces;
  auto add_face = [&](std::size_t a, std::size_t b, std::size_t c) {
    Face f = make_face(pts, a, b, c);
    if (f.normal.dot(interior) - f.offset > 0) f = make_face(pts, a, c, b);
    faces.push_back(f);
  };
  add_face(i0, i1, i2);
  add_face(i0, i1, i3);
  add_face(i0, i2, i3);
  add_face(i1, i2, i3);

  const double eps_vis = 1e-12 * scale * scale * scale;
  std::vector<std::size_t> visible;
  std::set<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i < n; ++i) {
    if (i == i0 || i == i1 || i == i2 || i == i3) continue;
    visible.clear();
    for (std::size_t f = 0; f < faces.size(); ++f) {
      if (faces[f].alive && faces[f].normal.dot(pts[i]) - faces[f].offset > eps_vis) visible.push_back(f);
    }
    if (visible.empty()) continue;
    edges.clear();
    for (auto f : visible) {
      const auto& v = faces[f].v;
      for (int e = 0; e < 3; ++e) edges.emplace(v[e], v[(e + 1) % 3]);
      faces[f].alive = false;
    }
    // Horizon edges are those whose twin is not on a visible face.
    for (const auto& [a, b] : edges) {
      if (!edges.contains({b, a})) faces.push_back(make_face(pts, a, b, i));
    }
  }

  double volume = 0.0;
  std::set<std::size_t> vertices;
  for (const auto& f : faces) {
    if (!f.alive) continue;
    const Eigen::Vector3d a = pts[f.v[0]] - interior;
    const Eigen::Vector3d b = pts[f.v[1]] - interior;
    const Eigen::Vector3d c = pts[f.v[2]] - interior;
    volume += std::abs(a.dot(b.cross(c))) / 6.0;
    vertices.insert(f.v.begin(), f.v.end());
  }
  return {volume, false, vertices.size()};
}

}  // namespace

HullVolume convex_hull_measure(const Eigen::MatrixXd& points) {
  if (points.rows() == 0) throw Error(ErrorCode::kInvalidArgument, "hull of an empty point set");
  switch (points.cols()) {
    case 1: return hull_1d(points);
    case 2: return hull_2d(points);
    case 3: return hull_3d(points);
    default:
      throw Error(ErrorCode::kInvalidArgument,
                  "exact hull supports d <= 3, got d=" + std::to_string(points.cols()));
  }
}

}  // namespace smdcard
