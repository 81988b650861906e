#include "phystrack/assignment.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "phystrack/errors.hpp"

namespace phystrack {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kGateEpsilon = 1e-5;

struct Lsap {
  const CostMatrix& cost;  // rows <= cols
  int nr;
  int nc;
  std::vector<double> u, v, shortest;
  std::vector<int> path, col4row, row4col, remaining;
  std::vector<char> sr, sc;

  explicit Lsap(const CostMatrix& c)
      : cost(c),
        nr(static_cast<int>(c.rows())),
        nc(static_cast<int>(c.cols())),
        u(nr, 0.0),
        v(nc, 0.0),
        shortest(nc),
        path(nc, -1),
        col4row(nr, -1),
        row4col(nc, -1),
        remaining(nc),
        sr(nr),
        sc(nc) {}

  // Dijkstra-like search for the shortest augmenting path from cur_row in the
  // reduced-cost graph. Returns the free column reached, or -1.
  int augmenting_path(int cur_row, double& min_val) {
    min_val = 0.0;
    int num_remaining = nc;
    for (int it = 0; it < nc; ++it) remaining[it] = it;
    std::fill(sr.begin(), sr.end(), 0);
    std::fill(sc.begin(), sc.end(), 0);
    std::fill(shortest.begin(), shortest.end(), kInf);

    int sink = -1;
    int i = cur_row;
    while (sink == -1) {
      int index = -1;
      double lowest = kInf;
      sr[i] = 1;
      for (int it = 0; it < num_remaining; ++it) {
        const int j = remaining[it];
        const double r = min_val + cost(i, j) - u[i] - v[j];
        if (r < shortest[j]) {
          path[j] = i;
          shortest[j] = r;
        }
        if (shortest[j] < lowest || (shortest[j] == lowest && row4col[j] == -1 && index >= 0 &&
                                     row4col[remaining[index]] != -1)) {
          lowest = shortest[j];
          index = it;
        }
      }
      min_val = lowest;
      if (index < 0 || min_val == kInf) return -1;
      const int j = remaining[index];
      if (row4col[j] == -1) {
        sink = j;
      } else {
        i = row4col[j];
      }
      sc[j] = 1;
      // Keep column order stable so ties resolve toward the lowest index.
      for (int it = index; it + 1 < num_remaining; ++it) remaining[it] = remaining[it + 1];
      --num_remaining;
    }
    return sink;
  }

  void solve() {
    for (int cur = 0; cur < nr; ++cur) {
      double min_val = 0.0;
      const int sink = augmenting_path(cur, min_val);
      if (sink < 0) throw Error(ErrorCode::Numerical, "assignment infeasible");
      u[cur] += min_val;
      for (int i = 0; i < nr; ++i) {
        if (sr[i] && i != cur) u[i] += min_val - shortest[col4row[i]];
      }
      for (int j = 0; j < nc; ++j) {
        if (sc[j]) v[j] -= min_val - shortest[j];
      }
      int j = sink;
      while (true) {
        const int i = path[j];
        row4col[j] = i;
        std::swap(col4row[i], j);
        if (i == cur) break;
      }
    }
  }
};

}  // namespace

std::vector<int> min_cost_assignment(const CostMatrix& costs) {
  if (!costs.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "min_cost_assignment requires finite costs");
  }
  const auto rows = costs.rows();
  const auto cols = costs.cols();
  std::vector<int> result(static_cast<std::size_t>(rows), -1);
  if (rows == 0 || cols == 0) return result;

  if (rows <= cols) {
    Lsap lsap(costs);
    lsap.solve();
    for (Eigen::Index r = 0; r < rows; ++r) result[r] = lsap.col4row[r];
  } else {
    const CostMatrix t = costs.transpose();
    Lsap lsap(t);
    lsap.solve();
    for (Eigen::Index c = 0; c < cols; ++c) result[lsap.col4row[c]] = static_cast<int>(c);
  }
  return result;
}

Assignment solve_assignment(const CostMatrix& costs, double max_cost) {
  if (!std::isfinite(max_cost)) {
    throw Error(ErrorCode::InvalidArgument, "max_cost must be finite");
  }
  Assignment out;
  const auto rows = static_cast<std::size_t>(costs.rows());
  const auto cols = static_cast<std::size_t>(costs.cols());

  std::vector<int> col_of_row(rows, -1);
  if (rows > 0 && cols > 0) {
    CostMatrix gated = costs;
    const double sentinel = max_cost + kGateEpsilon;
    for (Eigen::Index r = 0; r < gated.rows(); ++r) {
      for (Eigen::Index c = 0; c < gated.cols(); ++c) {
        const double x = gated(r, c);
        if (!(x <= max_cost)) gated(r, c) = sentinel;  // also catches NaN
      }
    }
    col_of_row = min_cost_assignment(gated);
  }

  std::vector<char> col_used(cols, 0);
  for (std::size_t r = 0; r < rows; ++r) {
    const int c = col_of_row[r];
    if (c >= 0 && costs(static_cast<Eigen::Index>(r), c) <= max_cost) {
      out.pairs.emplace_back(r, static_cast<std::size_t>(c));
      col_used[static_cast<std::size_t>(c)] = 1;
    } else {
      out.unmatched_rows.push_back(r);
    }
  }
  for (std::size_t c = 0; c < cols; ++c) {
    if (!col_used[c]) out.unmatched_cols.push_back(c);
  }
  return out;
}

}  // namespace phystrack
