#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "phystrack/counting.hpp"
#include "phystrack/io.hpp"
#include "phystrack/metrics.hpp"
#include "phystrack/simulator.hpp"
#include "phystrack/tracker.hpp"

namespace phystrack {

inline constexpr std::string_view kEnvPrefix = "PHYSTRACK_";

/// Everything a track/evaluate/sweep run needs besides its inputs.
struct PipelineConfig {
  TrackerConfig tracker;
  BandConfig band;
  /// Position of the line-crossing baseline (and its mirror), fraction of width.
  double line_fraction = 0.125;
  double match_iou = kDefaultMatchIou;

  void validate();
};

/// Unknown keys throw Error(Config); values not mentioned keep `base`.
PipelineConfig pipeline_config_from(const KeyValues& values, PipelineConfig base = {});
KeyValues to_key_values(const PipelineConfig& config);
std::vector<std::string> pipeline_config_keys();

SceneConfig scene_config_from(const KeyValues& values, SceneConfig base = {});
KeyValues to_key_values(const SceneConfig& config);
std::vector<std::string> scene_config_keys();

NoiseConfig noise_config_from(const KeyValues& values, NoiseConfig base = {});
KeyValues to_key_values(const NoiseConfig& config);
std::vector<std::string> noise_config_keys();

/// For each key, an environment variable PHYSTRACK_<KEY> (upper case)
/// replaces the value in `values`.
void apply_env_overrides(KeyValues& values, std::span<const std::string> keys);

}  // namespace phystrack
