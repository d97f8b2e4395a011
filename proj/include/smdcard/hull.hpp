#pragma once

#include <Eigen/Dense>

namespace smdcard {

struct HullVolume {
  double volume = 0.0;
  bool degenerate = false;  // points affinely dependent in the working dimension
  std::size_t hull_vertices = 0;
};

// Exact hull measure of n x d points for d in {1, 2, 3}: length, area, or
// volume respectively.
HullVolume convex_hull_measure(const Eigen::MatrixXd& points);

}  // namespace smdcard
