#pragma once

#include <vector>

#include <Eigen/Dense>

namespace swgauge {

struct Assignment {
  double cost = 0.0;
  /// column assigned to each row
  std::vector<int> row_to_col;
};

/// Minimum-cost perfect matching on a square cost matrix (Hungarian method with
/// potentials, O(n^3)).
Assignment solve_assignment(const Eigen::MatrixXd& cost);

}  // namespace swgauge
