#include <cmath>
#include <limits>
#include <set>

#include "doctest.h"
#include "phystrack/assignment.hpp"
#include "test_support.hpp"

using namespace phystrack;
using phystrack::testing::brute_force_min_cost;
using phystrack::testing::Gen;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double total_of(const CostMatrix& c, const std::vector<int>& col_of_row) {
  double total = 0.0;
  for (std::size_t r = 0; r < col_of_row.size(); ++r) {
    if (col_of_row[r] >= 0) total += c(static_cast<Eigen::Index>(r), col_of_row[r]);
  }
  return total;
}

void check_one_to_one(const std::vector<int>& col_of_row, Eigen::Index rows, Eigen::Index cols) {
  std::set<int> used;
  int assigned = 0;
  for (int c : col_of_row) {
    if (c < 0) continue;
    REQUIRE(c < cols);
    REQUIRE(used.insert(c).second);
    ++assigned;
  }
  REQUIRE(assigned == std::min(rows, cols));
}

}  // namespace

TEST_CASE("min_cost_assignment: 2x2 example") {
  CostMatrix c(2, 2);
  c << 1, 2, 2, 1;
  const std::vector<int> a = min_cost_assignment(c);
  CHECK(a == std::vector<int>{0, 1});
  CHECK(total_of(c, a) == 2.0);
}

TEST_CASE("min_cost_assignment: empty and degenerate shapes") {
  CHECK(min_cost_assignment(CostMatrix(0, 3)).empty());
  CHECK(min_cost_assignment(CostMatrix(2, 0)) == std::vector<int>{-1, -1});
  CostMatrix single(1, 1);
  single << 7;
  CHECK(min_cost_assignment(single) == std::vector<int>{0});
}

TEST_CASE("property: optimal on integer matrices up to 6x6 (exact)") {
  Gen g(301);
  for (int trial = 0; trial < 1000; ++trial) {
    const int rows = g.integer(1, 6), cols = g.integer(1, 6);
    CostMatrix c(rows, cols);
    for (int r = 0; r < rows; ++r) {
      for (int k = 0; k < cols; ++k) c(r, k) = g.integer(0, 100);
    }
    const std::vector<int> a = min_cost_assignment(c);
    REQUIRE(a.size() == static_cast<std::size_t>(rows));
    check_one_to_one(a, rows, cols);
    REQUIRE(total_of(c, a) == brute_force_min_cost(c));
  }
}

TEST_CASE("property: optimal on real matrices up to 6x6") {
  Gen g(302);
  for (int trial = 0; trial < 1000; ++trial) {
    const int rows = g.integer(1, 6), cols = g.integer(1, 6);
    const CostMatrix c = g.matrix(rows, cols, -5, 20);
    const std::vector<int> a = min_cost_assignment(c);
    check_one_to_one(a, rows, cols);
    REQUIRE(total_of(c, a) == doctest::Approx(brute_force_min_cost(c)).epsilon(1e-12));
  }
}

TEST_CASE("property: 7x7 and 8x8 matrices match brute force") {
  Gen g(303);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = g.integer(7, 8);
    const CostMatrix c = g.matrix(n, n, 0, 1);
    const std::vector<int> a = min_cost_assignment(c);
    check_one_to_one(a, n, n);
    REQUIRE(total_of(c, a) == doctest::Approx(brute_force_min_cost(c)).epsilon(1e-12));
  }
}

TEST_CASE("solve_assignment gating") {
  SUBCASE("all infinite") {
    CostMatrix c = CostMatrix::Constant(3, 2, kInf);
    const Assignment a = solve_assignment(c, 1.0);
    CHECK(a.pairs.empty());
    CHECK(a.unmatched_rows == std::vector<std::size_t>{0, 1, 2});
    CHECK(a.unmatched_cols == std::vector<std::size_t>{0, 1});
  }
  SUBCASE("pairs above max_cost are dissolved") {
    CostMatrix c(2, 2);
    c << 0.2, kInf, kInf, 5.0;
    const Assignment a = solve_assignment(c, 1.0);
    REQUIRE(a.pairs.size() == 1);
    CHECK(a.pairs[0] == std::pair<std::size_t, std::size_t>{0, 0});
    CHECK(a.unmatched_rows == std::vector<std::size_t>{1});
    CHECK(a.unmatched_cols == std::vector<std::size_t>{1});
  }
  SUBCASE("gated entries are priced just above max_cost") {
    // Both gated entries cost max_cost + eps, so (0,1),(1,0) at 1.5 + eps beats
    // (0,0),(1,1) at 1.9 + eps; dissolving the gated pair leaves only (0,1).
    CostMatrix c(2, 2);
    c << 1.5, 0.5, kInf, 0.9;
    const Assignment a = solve_assignment(c, 1.0);
    REQUIRE(a.pairs.size() == 1);
    CHECK(a.pairs[0] == std::pair<std::size_t, std::size_t>{0, 1});
    CHECK(a.unmatched_rows == std::vector<std::size_t>{1});
    CHECK(a.unmatched_cols == std::vector<std::size_t>{0});
  }
  SUBCASE("empty matrix") {
    const Assignment a = solve_assignment(CostMatrix(0, 0), 1.0);
    CHECK(a.pairs.empty());
  }
}

TEST_CASE("property: gated assignment is optimal with gated entries priced at max_cost") {
  // Oracle: brute force over complete assignments of the matrix in which every
  // entry above max_cost costs max_cost. The solver prices them a hair above
  // max_cost, so its objective may exceed the oracle by that margin per pair.
  Gen g(304);
  for (int trial = 0; trial < 1000; ++trial) {
    const int rows = g.integer(1, 5), cols = g.integer(1, 5);
    CostMatrix c(rows, cols);
    for (int r = 0; r < rows; ++r) {
      for (int k = 0; k < cols; ++k) c(r, k) = g.uniform(0, 1) < 0.3 ? kInf : g.integer(0, 10) / 10.0;
    }
    const double max_cost = 0.7;
    const Assignment a = solve_assignment(c, max_cost);

    std::set<std::size_t> rs, cs;
    double total = 0.0;
    for (auto [r, k] : a.pairs) {
      REQUIRE(c(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) <= max_cost);
      REQUIRE(rs.insert(r).second);
      REQUIRE(cs.insert(k).second);
      total += c(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k));
    }
    REQUIRE(rs.size() + a.unmatched_rows.size() == static_cast<std::size_t>(rows));
    REQUIRE(cs.size() + a.unmatched_cols.size() == static_cast<std::size_t>(cols));

    const CostMatrix priced = c.unaryExpr([&](double x) { return x <= max_cost ? x : max_cost; });
    const auto slots = static_cast<std::size_t>(std::min(rows, cols));
    const double objective = total + static_cast<double>(slots - a.pairs.size()) * max_cost;
    REQUIRE(objective <= brute_force_min_cost(priced) + 1e-4 * static_cast<double>(slots));
  }
}
