#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "phystrack/geometry.hpp"
#include "phystrack/metrics.hpp"
#include "phystrack/random.hpp"
#include "phystrack/track.hpp"

namespace phystrack::testing {

// Property-style generators. Each test draws from its own seeded stream so a
// failure reproduces from the printed seed.
struct Gen {
  Rng rng;
  explicit Gen(std::uint64_t seed) : rng(seed) {}

  double uniform(double lo, double hi) { return rng.uniform(lo, hi); }
  int integer(int lo, int hi) { return lo + static_cast<int>(rng.next() % static_cast<std::uint64_t>(hi - lo + 1)); }

  CameraIntrinsics camera() {
    CameraIntrinsics cam;
    cam.image_width = uniform(640, 3840);
    cam.image_height = uniform(480, 2160);
    cam.fx = uniform(300, 3000);
    cam.fy = cam.fx * uniform(0.9, 1.1);
    cam.cx = cam.image_width * uniform(0.3, 0.7);
    cam.cy = cam.image_height * uniform(0.3, 0.7);
    return cam;
  }

  Point3D point(double z_lo, double z_hi) {
    return {uniform(-10, 10), uniform(-3, 3), uniform(z_lo, z_hi)};
  }

  HeadBox box(const CameraIntrinsics& cam) {
    return {uniform(0, cam.image_width), uniform(0, cam.image_height), uniform(0.5, 1.0), uniform(8, 120)};
  }

  Eigen::MatrixXd matrix(int rows, int cols, double lo, double hi) {
    Eigen::MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) m(r, c) = uniform(lo, hi);
    }
    return m;
  }

  Embedding embedding(std::size_t dim = Embedding::kDefaultDim) {
    std::vector<double> v(dim);
    for (double& x : v) x = rng.normal();
    return Embedding::normalized(std::move(v));
  }
};

inline Embedding basis(std::size_t i, std::size_t dim = 8) {
  std::vector<double> v(dim, 0.0);
  v[i] = 1.0;
  return Embedding(std::move(v));
}

// Exhaustive minimum over all injective row->column maps (rows <= cols) or
// column->row maps (rows > cols).
inline double brute_force_min_cost(const Eigen::MatrixXd& c) {
  const bool transpose = c.rows() > c.cols();
  const Eigen::MatrixXd m = transpose ? Eigen::MatrixXd(c.transpose()) : c;
  std::vector<int> cols(static_cast<std::size_t>(m.cols()));
  std::iota(cols.begin(), cols.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  // Permutations of all columns; the first rows() entries define the map.
  do {
    double total = 0.0;
    for (int r = 0; r < m.rows(); ++r) total += m(r, cols[static_cast<std::size_t>(r)]);
    best = std::min(best, total);
  } while (std::next_permutation(cols.begin(), cols.end()));
  return best;
}

inline FrameBoxes frame_of(std::initializer_list<LabeledBox> boxes) { return FrameBoxes(boxes); }

inline HeadBox square(double x, double y, double side) { return {x, y, 1.0, side}; }

inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("phystrack_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace phystrack::testing
