#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "phystrack/counting.hpp"
#include "phystrack/geometry.hpp"
#include "phystrack/metrics.hpp"
#include "phystrack/track.hpp"

namespace phystrack {

/// A train-mounted camera decelerating into a platform with near-static
/// pedestrians standing along the stretch it passes.
struct SceneConfig {
  std::uint64_t seed = 1;
  int num_pedestrians = 20;
  /// Lateral distance of pedestrians from the camera axis, meters.
  double lateral_min = 2.5;
  double lateral_max = 7.0;
  /// Head vertical offset (image-down positive), meters.
  double vertical_min = -0.3;
  double vertical_max = 0.4;
  double head_height_mean = kDefaultHeadHeight;
  double head_height_std = 0.02;
  double walk_std = 0.02;  // m / sqrt(s)
  /// Pedestrians are spread over this length of platform along the track.
  double platform_length = 30.0;
  /// The last pedestrian leaves the image this far (m) before the camera stops.
  double exit_margin = 1.0;
  /// -1 left, +1 right, 0 chosen from the seed.
  int platform_side = 0;
  /// Share of pedestrians placed on the opposite side.
  double opposite_fraction = 0.0;

  double d0 = 60.0;     // initial camera distance to the stopping mark, m
  double v0 = 10.0;     // initial speed toward the platform, m/s
  double decel = 1.0;   // m/s^2, >= 0
  double fps = 25.0;
  double duration = 12.0;  // s
  CameraIntrinsics camera;

  int num_frames() const;
  void validate() const;
};

struct NoiseConfig {
  double center_jitter = 0.03;  // std, fraction of h
  double height_jitter = 0.03;  // std, fraction of h
  double miss_rate = 0.1;
  double occlusion_iou = 0.3;
  double occlusion_miss_rate = 0.5;
  double false_positives = 0.5;  // Poisson mean per frame
  int embedding_dim = static_cast<int>(Embedding::kDefaultDim);
  double embedding_noise = 0.05;  // per-component std before renormalization

  static NoiseConfig zero();
  void validate() const;
};

/// Camera distance to the stopping mark after t seconds (clamped at 2 m, the
/// speed never reverses).
double camera_distance(const SceneConfig& scene, double t);

struct Pedestrian {
  int id = 0;
  double x = 0.0;  // lateral, m
  double y = 0.0;  // vertical, m
  double head_height = kDefaultHeadHeight;
  double platform_offset = 0.0;  // Z = camera_distance + platform_offset
  double aspect = 0.75;
};

struct CountTruth {
  int left = 0;
  int right = 0;
  int total() const { return left > right ? left : right; }
};

struct SimulatedSequence {
  CameraIntrinsics camera;
  double fps = 25.0;
  BoxSequence ground_truth;                     // index k = frame k + 1
  std::vector<std::vector<Detection>> detections;
  std::vector<std::vector<int>> detection_sources;  // gt id, or -1 for false positives
  CountTruth truth;

  int num_frames() const { return static_cast<int>(ground_truth.size()); }
};

std::vector<Pedestrian> sample_pedestrians(const SceneConfig& scene);

/// Renders pedestrians through the camera trajectory and corrupts detections.
SimulatedSequence render(const SceneConfig& scene, const std::vector<Pedestrian>& pedestrians,
                         const NoiseConfig& noise);

SimulatedSequence generate(const SceneConfig& scene, const NoiseConfig& noise);

/// Twenty scenes, 10 to 60 pedestrians, seeds base_seed .. base_seed + count - 1.
std::vector<SceneConfig> benchmark_scenes(std::uint64_t base_seed = 2024, int count = 20);

struct Scenario {
  std::string name;
  std::string description;
  SimulatedSequence sequence;
  int expected_count = 0;
  int expected_idsw = 0;
  /// Line position used to demonstrate line-crossing behaviour, and its expected count.
  double line_fraction = 0.05;
  int expected_line_count = -1;  // -1: not asserted
};

/// Small hand-built sequences with analytically known counts and identities:
/// occlusion-3, crossing-pair, edge-jitter, end-partial.
std::vector<Scenario> scripted_scenarios();

}  // namespace phystrack
