#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "phystrack/assignment.hpp"
#include "phystrack/motion_models.hpp"
#include "phystrack/track.hpp"

namespace phystrack {

struct AssociationConfig {
  double lambda = 0.5;
  // Squared-distance gates: 0.95 chi-square quantile for CV8D (4 dof) and
  // Phys3D (3 dof); CA12D uses the stricter 0.90 quantile.
  double chi2_gate_cv8d = 9.4877;
  double chi2_gate_ca12d = 7.7794;
  double chi2_gate_phys3d = 7.8147;
  double appearance_gate = 0.4;
  int cascade_depth = 30;
  /// Max fractional depth change per frame at depth_jump_ref_fps (Phys3D).
  double depth_jump_max = 0.25;
  double depth_jump_ref_fps = 25.0;
  /// Minimum IoU accepted by the IoU fallback stage.
  double iou_fallback_threshold = 0.3;
  bool use_appearance = true;

  double chi2_gate(MotionModelKind kind) const;
  void validate() const;
};

/// min over the gallery of (1 - a.g); +inf for an empty gallery.
double cosine_distance(const Embedding& query, std::span<const Embedding> gallery);

/// lambda * d_motion / chi2_gate + (1 - lambda) * d_app.
double combined_cost(double d_motion, double d_app, double lambda, double chi2_gate);

struct GateResult {
  bool pass = false;
  double motion = 0.0;      // squared Mahalanobis
  double appearance = 0.0;  // cosine distance, 0 when appearance is off
  double cost = 0.0;
};

/// Evaluates every gate for a predicted track against one detection. dt is the
/// prediction interval in seconds (scales the depth-jump allowance).
GateResult gate(const Track& track, const Projection& proj, const Detection& det,
                const MotionModel& model, const AssociationConfig& config, double dt);
GateResult gate(const Track& track, const Detection& det, const MotionModel& model,
                const AssociationConfig& config, double dt);

struct MatchResult {
  std::vector<std::pair<std::size_t, std::size_t>> matches;  // (track index, detection index)
  std::vector<std::size_t> unmatched_tracks;
  std::vector<std::size_t> unmatched_detections;
};

/// Matching cascade over confirmed tracks ordered by time_since_update, then
/// IoU fallback for tentative tracks and confirmed tracks missed only this
/// frame. Tracks must already be predicted (time_since_update >= 1).
MatchResult cascade_match(std::span<const Track> tracks, std::span<const Detection> detections,
                          const MotionModel& model, const AssociationConfig& config, double dt);

}  // namespace phystrack
