#include "phystrack/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "phystrack/errors.hpp"

namespace phystrack {

void TrackerConfig::validate() {
  if (n_init < 1) throw Error(ErrorCode::Config, "n_init must be >= 1");
  if (max_age < 1) throw Error(ErrorCode::Config, "max_age must be >= 1");
  if (!(fps > 0.0)) throw Error(ErrorCode::Config, "fps must be positive");
  if (gallery_size < 1) throw Error(ErrorCode::Config, "gallery_size must be >= 1");
  if (max_predicted_frames < 0) throw Error(ErrorCode::Config, "max_predicted_frames must be >= 0");
  if (!(ego_rate_std > 0.0) || ego_min_offset_px < 0.0 || ego_min_samples < 1) {
    throw Error(ErrorCode::Config, "ego estimate parameters out of range");
  }
  association.validate();
  noise.frame_dt = 1.0 / fps;
}

Tracker::Tracker(TrackerConfig config, CameraIntrinsics cam)
    : config_([&] {
        config.validate();
        return config;
      }()),
      model_(config_.model, config_.noise, cam) {}

namespace {

double median(std::vector<double>& v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
  return m;
}

}  // namespace

std::optional<DepthMotionSeed> Tracker::ego_seed() const {
  if (!config_.adaptive_ego_prior || config_.model != MotionModelKind::Phys3D || !ego_rate_) return std::nullopt;
  std::vector<double> accel;
  for (const Track& t : tracks_) {
    if (t.is_confirmed() && t.time_since_update == 0) accel.push_back(t.state.mean(5));
  }
  return DepthMotionSeed{*ego_rate_, accel.empty() ? 0.0 : median(accel)};
}

std::optional<double> Tracker::estimate_ego_rate(std::span<const std::pair<std::size_t, std::size_t>> matches,
                                                 std::span<const Detection> dets, int frame) const {
  // Z_prev / Z_now = (x_now - cx) / (x_prev - cx) for a laterally static target.
  const double cx = model_.camera().cx;
  std::vector<double> rates;
  for (auto [ti, di] : matches) {
    const Track& t = tracks_[ti];
    if (t.last_update_frame <= 0) continue;
    const double prev = t.last_measurement.x - cx;
    const double now = dets[di].box.x - cx;
    if (std::abs(prev) < config_.ego_min_offset_px || std::abs(now) < config_.ego_min_offset_px) continue;
    if ((prev > 0.0) != (now > 0.0)) continue;
    const double dt = (frame - t.last_update_frame) / config_.fps;
    const double z_now = t.state.mean(3);
    rates.push_back(z_now * (1.0 - now / prev) / dt);
  }
  if (static_cast<int>(rates.size()) < config_.ego_min_samples) return std::nullopt;
  return median(rates);
}

void Tracker::initiate_track(const Detection& det, int frame, const std::optional<DepthMotionSeed>& seed) {
  Track t;
  t.id = next_id_++;
  t.state = model_.initiate(det.box, seed);
  t.created_frame = frame;
  t.last_update_frame = frame;
  t.last_measurement = det.box;
  t.status = config_.n_init <= 1 ? TrackStatus::Confirmed : TrackStatus::Tentative;
  if (!det.embedding.empty()) t.gallery.push_back(det.embedding);
  tracks_.push_back(std::move(t));
}

FrameOutput Tracker::step(int frame, std::span<const Detection> detections) {
  if (started_ && frame <= last_frame_) {
    throw Error(ErrorCode::Sequence, "frame " + std::to_string(frame) + " is not after frame " +
                                         std::to_string(last_frame_));
  }
  const int elapsed = started_ ? frame - last_frame_ : 1;
  const double dt = elapsed / config_.fps;
  started_ = true;
  last_frame_ = frame;

  std::vector<Detection> dets;
  dets.reserve(detections.size());
  for (const Detection& d : detections) {
    if (d.confidence < config_.min_confidence) continue;
    if (!(d.box.h > 0.0) || !(d.box.a > 0.0)) {
      throw Error(ErrorCode::Domain, "detection with non-positive box dimension");
    }
    dets.push_back(d);
  }

  for (Track& t : tracks_) {
    try {
      t.state = model_.predict(t.state, dt);
      const HeadBox b = model_.to_box(t.state);
      if (!(b.h > 0.0) || !(b.a > 0.0)) t.status = TrackStatus::Deleted;
    } catch (const Error&) {
      t.status = TrackStatus::Deleted;
    }
    t.age += elapsed;
    t.time_since_update += elapsed;
  }
  std::erase_if(tracks_, [](const Track& t) { return t.status == TrackStatus::Deleted; });

  const MatchResult match = cascade_match(tracks_, dets, model_, config_.association, dt);

  const bool adaptive = config_.adaptive_ego_prior && config_.model == MotionModelKind::Phys3D;
  std::optional<double> ego;
  if (adaptive) {
    ego = estimate_ego_rate(match.matches, dets, frame);
    if (ego) ego_rate_ = ego;
  }

  for (auto [ti, di] : match.matches) {
    Track& t = tracks_[ti];
    try {
      t.state = model_.update(t.state, dets[di].box);
      if (ego) t.state = model_.update_depth_rate(t.state, *ego, config_.ego_rate_std);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Numerical && e.code() != ErrorCode::Domain) throw;
      t.status = TrackStatus::Deleted;
      continue;
    }
    ++t.hits;
    t.time_since_update = 0;
    t.last_update_frame = frame;
    t.last_measurement = dets[di].box;
    if (!dets[di].embedding.empty()) {
      t.gallery.push_back(dets[di].embedding);
      if (static_cast<int>(t.gallery.size()) > config_.gallery_size) t.gallery.erase(t.gallery.begin());
    }
    if (t.is_tentative() && t.hits >= config_.n_init) t.status = TrackStatus::Confirmed;
  }
  for (std::size_t ti : match.unmatched_tracks) {
    Track& t = tracks_[ti];
    if (t.is_tentative() || t.time_since_update > config_.max_age) t.status = TrackStatus::Deleted;
  }
  std::erase_if(tracks_, [](const Track& t) { return t.status == TrackStatus::Deleted; });
  const std::optional<DepthMotionSeed> seed = ego_seed();
  for (std::size_t di : match.unmatched_detections) initiate_track(dets[di], frame, seed);

  FrameOutput out;
  out.frame = frame;
  for (const Track& t : tracks_) {
    const bool fresh = t.time_since_update == 0;
    if (fresh || (t.is_confirmed() && t.time_since_update <= config_.max_predicted_frames)) {
      out.tracks.push_back(TrackOutput{t.id, model_.to_box(t.state), t.status, !fresh});
    }
  }
  return out;
}

std::vector<FrameOutput> run_sequence(std::span<const std::vector<Detection>> detections,
                                      const TrackerConfig& config, const CameraIntrinsics& cam) {
  Tracker tracker(config, cam);
  std::vector<FrameOutput> outputs;
  outputs.reserve(detections.size());
  for (std::size_t k = 0; k < detections.size(); ++k) {
    outputs.push_back(tracker.step(static_cast<int>(k) + 1, detections[k]));
  }
  return outputs;
}

}  // namespace phystrack
