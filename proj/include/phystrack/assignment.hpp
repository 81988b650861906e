#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace phystrack {

/// Rows are tracks, columns detections. +inf marks a gated pair.
using CostMatrix = Eigen::MatrixXd;

struct Assignment {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (row, col), ascending row
  std::vector<std::size_t> unmatched_rows;
  std::vector<std::size_t> unmatched_cols;
};

/// Minimum-cost one-to-one assignment of a finite rectangular matrix. Every row
/// is assigned when rows <= cols, every column otherwise. Returns the column of
/// each row or -1.
std::vector<int> min_cost_assignment(const CostMatrix& costs);

/// Gated assignment: entries above max_cost (including +inf) are treated as
/// max_cost + epsilon while solving and any pair landing on one is dissolved.
Assignment solve_assignment(const CostMatrix& costs, double max_cost);

}  // namespace phystrack
