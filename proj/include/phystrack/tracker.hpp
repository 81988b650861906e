#pragma once

#include <optional>
#include <span>
#include <vector>

#include "phystrack/association.hpp"
#include "phystrack/geometry.hpp"
#include "phystrack/motion_models.hpp"
#include "phystrack/track.hpp"

namespace phystrack {

struct TrackerConfig {
  MotionModelKind model = MotionModelKind::Phys3D;
  int n_init = 3;
  int max_age = 30;
  double min_confidence = 0.5;
  double fps = 25.0;
  int gallery_size = 50;
  /// Confirmed tracks are emitted with predicted boxes while time_since_update <= this.
  int max_predicted_frames = 2;
  /// Phys3D only. All targets share the camera's depth rate, so each frame it
  /// is estimated robustly from tracks observed in consecutive updates (ratio
  /// of their offsets from the principal point) and fed back to every updated
  /// track as a Z-dot pseudo-measurement; new tracks are seeded with it.
  /// When off, new tracks start at noise.ego_velocity_prior.
  bool adaptive_ego_prior = true;
  double ego_rate_std = 1.0;        // m/s, pseudo-measurement std
  double ego_min_offset_px = 20.0;  // ignore targets this close to the principal column
  int ego_min_samples = 3;
  AssociationConfig association;
  NoiseParams noise;

  /// Throws Error(Config). Also syncs noise.frame_dt to 1/fps.
  void validate();
};

struct TrackOutput {
  int id = 0;
  HeadBox box;
  TrackStatus status = TrackStatus::Tentative;
  bool predicted = false;  // box comes from the filter, not this frame's detection
};

struct FrameOutput {
  int frame = 0;
  std::vector<TrackOutput> tracks;  // ascending id
};

/// DeepSORT-style lifecycle around a pluggable motion model. One instance per
/// sequence; not safe for concurrent use.
class Tracker {
 public:
  Tracker(TrackerConfig config, CameraIntrinsics cam);

  /// Frame indices must be strictly increasing; throws Error(Sequence) otherwise.
  FrameOutput step(int frame, std::span<const Detection> detections);

  const std::vector<Track>& tracks() const { return tracks_; }
  const TrackerConfig& config() const { return config_; }
  const MotionModel& model() const { return model_; }
  int next_id() const { return next_id_; }

 private:
  void initiate_track(const Detection& det, int frame, const std::optional<DepthMotionSeed>& seed);
  std::optional<DepthMotionSeed> ego_seed() const;
  std::optional<double> estimate_ego_rate(std::span<const std::pair<std::size_t, std::size_t>> matches,
                                          std::span<const Detection> dets, int frame) const;

  TrackerConfig config_;
  MotionModel model_;
  std::vector<Track> tracks_;  // live tracks, ascending id
  std::optional<double> ego_rate_;
  int next_id_ = 1;
  int last_frame_ = 0;
  bool started_ = false;
};

/// detections[k] holds frame k + 1.
std::vector<FrameOutput> run_sequence(std::span<const std::vector<Detection>> detections,
                                      const TrackerConfig& config, const CameraIntrinsics& cam);

}  // namespace phystrack
