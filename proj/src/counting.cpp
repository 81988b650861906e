#include "phystrack/counting.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>

#include "phystrack/errors.hpp"

namespace phystrack {

void BandConfig::validate(bool allow_degenerate) const {
  if (!(start >= 0.0 && end <= 1.0)) throw Error(ErrorCode::Config, "band must lie within [0, 1]");
  if (allow_degenerate ? !(start <= end) : !(start < end)) {
    throw Error(ErrorCode::Config, "band start must be below band end");
  }
  if (persistence < 1) throw Error(ErrorCode::Config, "persistence must be >= 1");
  if (end_of_video_min < 1) throw Error(ErrorCode::Config, "end_of_video_min must be >= 1");
}

Side band_membership(double x_center, double image_width, const BandConfig& config) {
  if (!(image_width > 0.0)) throw Error(ErrorCode::InvalidArgument, "image width must be positive");
  const double u = x_center / image_width;
  if (u >= config.start && u <= config.end) return Side::Left;
  if (u >= 1.0 - config.end && u <= 1.0 - config.start) return Side::Right;
  return Side::None;
}

void CountLedger::observe(const FrameOutput& frame, double image_width, const BandConfig& config) {
  if (started_ && frame.frame <= last_frame_) {
    for (auto& [id, e] : entries_) e.consecutive = 0;
  }
  started_ = true;
  last_frame_ = frame.frame;

  std::set<int> seen;
  for (const TrackOutput& t : frame.tracks) {
    if (t.status != TrackStatus::Confirmed) continue;
    if (t.predicted && !config.count_predicted) continue;
    seen.insert(t.id);
    LedgerEntry& e = entries_[t.id];
    const Side side = band_membership(t.box.x, image_width, config);
    if (side != Side::None && (e.side == Side::None || e.side == side)) {
      e.side = side;
      ++e.consecutive;
      if (!e.counted && e.consecutive >= config.persistence) {
        e.counted = true;
        (side == Side::Left ? left_ : right_) += 1;
      }
    } else {
      e.consecutive = 0;
    }
  }
  for (auto& [id, e] : entries_) {
    if (!seen.contains(id)) e.consecutive = 0;
  }
}

CountSummary CountLedger::finalize(const BandConfig& config) const {
  CountSummary s{left_, right_, 0};
  for (const auto& [id, e] : entries_) {
    if (!e.counted && e.side != Side::None && e.consecutive >= config.end_of_video_min) {
      (e.side == Side::Left ? s.left : s.right) += 1;
    }
  }
  s.total = std::max(s.left, s.right);
  return s;
}

CountSummary count_band(std::span<const FrameOutput> frames, double image_width, const BandConfig& config) {
  CountLedger ledger;
  for (const FrameOutput& f : frames) ledger.observe(f, image_width, config);
  return ledger.finalize(config);
}

namespace {

std::set<int> crossing_ids(std::span<const FrameOutput> frames, double line_x) {
  std::set<int> ids;
  std::unordered_map<int, std::pair<int, double>> last;  // id -> (frame, x)
  for (const FrameOutput& f : frames) {
    for (const TrackOutput& t : f.tracks) {
      if (t.status != TrackStatus::Confirmed || t.predicted) continue;
      auto it = last.find(t.id);
      if (it != last.end() && it->second.first + 1 == f.frame) {
        const double a = it->second.second - line_x;
        const double b = t.box.x - line_x;
        if (a * b <= 0.0) ids.insert(t.id);
      }
      last[t.id] = {f.frame, t.box.x};
    }
  }
  return ids;
}

}  // namespace

int line_crossing_count(std::span<const FrameOutput> frames, double line_x_fraction, double image_width) {
  if (!(image_width > 0.0)) throw Error(ErrorCode::InvalidArgument, "image width must be positive");
  return static_cast<int>(crossing_ids(frames, line_x_fraction * image_width).size());
}

CountSummary count_lines(std::span<const FrameOutput> frames, double line_x_fraction, double image_width) {
  CountSummary s;
  s.left = line_crossing_count(frames, line_x_fraction, image_width);
  s.right = line_crossing_count(frames, 1.0 - line_x_fraction, image_width);
  s.total = std::max(s.left, s.right);
  return s;
}

}  // namespace phystrack
