#include "phystrack/association.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "phystrack/errors.hpp"

namespace phystrack {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double squared_norm(std::span<const double> v) {
  return std::inner_product(v.begin(), v.end(), v.begin(), 0.0);
}

}  // namespace

Embedding::Embedding(std::vector<double> values) : values_(std::move(values)) {
  const double norm = std::sqrt(squared_norm(values_));
  if (!(std::abs(norm - 1.0) < kNormTolerance)) {
    throw Error(ErrorCode::Domain, "embedding is not unit-norm");
  }
}

Embedding Embedding::normalized(std::vector<double> values) {
  const double norm = std::sqrt(squared_norm(values));
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw Error(ErrorCode::Domain, "cannot normalize a zero or non-finite embedding");
  }
  for (double& v : values) v /= norm;
  Embedding e;
  e.values_ = std::move(values);
  return e;
}

double Embedding::dot(const Embedding& other) const {
  if (other.size() != size()) {
    throw Error(ErrorCode::InvalidArgument, "embedding dimension mismatch");
  }
  return std::inner_product(values_.begin(), values_.end(), other.values_.begin(), 0.0);
}

double AssociationConfig::chi2_gate(MotionModelKind kind) const {
  switch (kind) {
    case MotionModelKind::CV8D: return chi2_gate_cv8d;
    case MotionModelKind::CA12D: return chi2_gate_ca12d;
    case MotionModelKind::Phys3D: return chi2_gate_phys3d;
  }
  return chi2_gate_cv8d;
}

void AssociationConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error(ErrorCode::Config, "lambda must lie in [0, 1]");
  if (!(chi2_gate_cv8d > 0.0 && chi2_gate_ca12d > 0.0 && chi2_gate_phys3d > 0.0)) {
    throw Error(ErrorCode::Config, "chi-square gates must be positive");
  }
  if (!(appearance_gate >= 0.0)) throw Error(ErrorCode::Config, "appearance_gate must be >= 0");
  if (cascade_depth < 1) throw Error(ErrorCode::Config, "cascade_depth must be >= 1");
  if (!(depth_jump_max > 0.0) || !(depth_jump_ref_fps > 0.0)) {
    throw Error(ErrorCode::Config, "depth_jump_max and depth_jump_ref_fps must be positive");
  }
  if (!(iou_fallback_threshold >= 0.0 && iou_fallback_threshold <= 1.0)) {
    throw Error(ErrorCode::Config, "iou_fallback_threshold must lie in [0, 1]");
  }
}

double cosine_distance(const Embedding& query, std::span<const Embedding> gallery) {
  double best = kInf;
  for (const Embedding& g : gallery) best = std::min(best, 1.0 - query.dot(g));
  return best;
}

double combined_cost(double d_motion, double d_app, double lambda, double chi2_gate) {
  return lambda * (d_motion / chi2_gate) + (1.0 - lambda) * d_app;
}

GateResult gate(const Track& track, const Projection& proj, const Detection& det,
                const MotionModel& model, const AssociationConfig& config, double dt) {
  GateResult r;
  const double chi2 = config.chi2_gate(model.kind());
  r.motion = model.gating_distance(proj, det.box);
  if (!(r.motion <= chi2)) return r;

  if (model.kind() == MotionModelKind::Phys3D) {
    const double z_pred = track.state.mean[3];
    const double z_det = model.camera().fy * track.state.mean[2] / det.box.h;
    const double allowance = config.depth_jump_max * dt * config.depth_jump_ref_fps;
    if (std::abs(z_det - z_pred) > allowance * z_pred) return r;
  }

  const bool appearance = config.use_appearance && !det.embedding.empty() && !track.gallery.empty();
  if (appearance) {
    r.appearance = cosine_distance(det.embedding, track.gallery);
    if (!(r.appearance <= config.appearance_gate)) return r;
    r.cost = combined_cost(r.motion, r.appearance, config.lambda, chi2);
  } else {
    r.cost = r.motion / chi2;
  }
  r.pass = true;
  return r;
}

GateResult gate(const Track& track, const Detection& det, const MotionModel& model,
                const AssociationConfig& config, double dt) {
  return gate(track, model.project(track.state), det, model, config, dt);
}

MatchResult cascade_match(std::span<const Track> tracks, std::span<const Detection> detections,
                          const MotionModel& model, const AssociationConfig& config, double dt) {
  MatchResult result;
  std::vector<std::size_t> remaining(detections.size());
  std::iota(remaining.begin(), remaining.end(), 0);

  // Rows ordered by track id so equal costs resolve toward the lowest id.
  std::vector<std::size_t> order(tracks.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return tracks[a].id < tracks[b].id; });

  std::vector<Projection> projections(tracks.size());
  std::vector<char> matched(tracks.size(), 0);
  for (std::size_t i : order) {
    if (tracks[i].is_confirmed()) projections[i] = model.project(tracks[i].state);
  }

  const double max_cost = config.use_appearance
                              ? config.lambda + (1.0 - config.lambda) * config.appearance_gate
                              : 1.0;

  for (int level = 1; level <= config.cascade_depth && !remaining.empty(); ++level) {
    std::vector<std::size_t> rows;
    for (std::size_t i : order) {
      if (tracks[i].is_confirmed() && tracks[i].time_since_update == level) rows.push_back(i);
    }
    if (rows.empty()) continue;

    CostMatrix costs(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(remaining.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const Track& t = tracks[rows[r]];
      for (std::size_t c = 0; c < remaining.size(); ++c) {
        const GateResult g = gate(t, projections[rows[r]], detections[remaining[c]], model, config, dt);
        costs(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = g.pass ? g.cost : kInf;
      }
    }
    const Assignment a = solve_assignment(costs, max_cost);
    std::vector<char> taken(remaining.size(), 0);
    for (auto [r, c] : a.pairs) {
      result.matches.emplace_back(rows[r], remaining[c]);
      matched[rows[r]] = 1;
      taken[c] = 1;
    }
    std::vector<std::size_t> next;
    for (std::size_t c = 0; c < remaining.size(); ++c) {
      if (!taken[c]) next.push_back(remaining[c]);
    }
    remaining = std::move(next);
  }

  // IoU fallback.
  std::vector<std::size_t> iou_rows;
  for (std::size_t i : order) {
    if (matched[i]) continue;
    const Track& t = tracks[i];
    if (t.is_tentative() || (t.is_confirmed() && t.time_since_update == 1)) iou_rows.push_back(i);
  }
  if (!iou_rows.empty() && !remaining.empty()) {
    CostMatrix costs(static_cast<Eigen::Index>(iou_rows.size()), static_cast<Eigen::Index>(remaining.size()));
    for (std::size_t r = 0; r < iou_rows.size(); ++r) {
      const HeadBox predicted = model.to_box(tracks[iou_rows[r]].state);
      for (std::size_t c = 0; c < remaining.size(); ++c) {
        costs(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            1.0 - iou(predicted, detections[remaining[c]].box);
      }
    }
    const Assignment a = solve_assignment(costs, 1.0 - config.iou_fallback_threshold);
    std::vector<char> taken(remaining.size(), 0);
    for (auto [r, c] : a.pairs) {
      result.matches.emplace_back(iou_rows[r], remaining[c]);
      matched[iou_rows[r]] = 1;
      taken[c] = 1;
    }
    std::vector<std::size_t> next;
    for (std::size_t c = 0; c < remaining.size(); ++c) {
      if (!taken[c]) next.push_back(remaining[c]);
    }
    remaining = std::move(next);
  }

  for (std::size_t i = 0; i < tracks.size(); ++i) {
    if (!matched[i]) result.unmatched_tracks.push_back(i);
  }
  result.unmatched_detections = std::move(remaining);
  std::sort(result.matches.begin(), result.matches.end());
  return result;
}

}  // namespace phystrack
