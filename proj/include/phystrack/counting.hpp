#pragma once

#include <map>
#include <span>

#include "phystrack/tracker.hpp"

namespace phystrack {

enum class Side { None, Left, Right };

/// Mirrored counting bands near the left and right borders, as fractions of
/// the image width: Left = [start, end], Right = [1 - end, 1 - start].
struct BandConfig {
  double start = 0.05;
  double end = 0.20;
  int persistence = 2;
  int end_of_video_min = 1;
  bool count_predicted = true;

  /// start == end is accepted only with allow_degenerate (line experiments).
  void validate(bool allow_degenerate = false) const;
};

/// Left wins when the two intervals overlap.
Side band_membership(double x_center, double image_width, const BandConfig& config);

struct CountSummary {
  int left = 0;
  int right = 0;
  int total = 0;  // max(left, right)
};

struct LedgerEntry {
  Side side = Side::None;  // locked at first band entry
  int consecutive = 0;
  bool counted = false;
};

class CountLedger {
 public:
  /// Feeds one frame of tracker output. A frame index that does not advance
  /// starts a new pass: consecutive counters reset, counted flags persist.
  void observe(const FrameOutput& frame, double image_width, const BandConfig& config);

  /// Applies end-of-video compensation to a copy of the totals.
  CountSummary finalize(const BandConfig& config) const;

  int left() const { return left_; }
  int right() const { return right_; }
  const std::map<int, LedgerEntry>& entries() const { return entries_; }

 private:
  std::map<int, LedgerEntry> entries_;
  int left_ = 0;
  int right_ = 0;
  int last_frame_ = 0;
  bool started_ = false;
};

/// observe() over every frame followed by finalize().
CountSummary count_band(std::span<const FrameOutput> frames, double image_width, const BandConfig& config);

/// Unique confirmed ids whose observed (non-predicted) x-center is on opposite
/// sides of, or on, the vertical line in two adjacent frames.
int line_crossing_count(std::span<const FrameOutput> frames, double line_x_fraction, double image_width);

/// Line-crossing baseline at line_x_fraction and its mirror, max rule.
CountSummary count_lines(std::span<const FrameOutput> frames, double line_x_fraction, double image_width);

}  // namespace phystrack
