#pragma once

#include <Eigen/Dense>

#include <vector>

namespace smdcard {

// Minimum-cost perfect matching on a square cost matrix (Hungarian method,
// O(n^3)). Returns assignment[row] = column.
std::vector<int> min_cost_assignment(const Eigen::MatrixXd& cost);

}  // namespace smdcard
