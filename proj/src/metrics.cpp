#include "phystrack/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <unordered_map>

#include "phystrack/assignment.hpp"
#include "phystrack/errors.hpp"

namespace phystrack {
namespace {

void check_frames(const BoxSequence& gt, const BoxSequence& hyp) {
  if (gt.size() != hyp.size()) {
    throw Error(ErrorCode::Evaluation, "frame count mismatch: ground truth has " + std::to_string(gt.size()) +
                                           " frames, hypotheses " + std::to_string(hyp.size()));
  }
}

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

}  // namespace

MotReport clear_mot(const BoxSequence& gt, const BoxSequence& hyp, double iou_threshold) {
  check_frames(gt, hyp);
  MotReport r;
  r.num_frames = static_cast<int>(gt.size());

  std::map<int, int> last_match;  // gt id -> hyp id of its latest match
  std::map<int, std::pair<int, int>> coverage;  // gt id -> (frames present, frames matched)
  double distance_sum = 0.0;

  for (std::size_t f = 0; f < gt.size(); ++f) {
    const FrameBoxes& g = gt[f];
    const FrameBoxes& h = hyp[f];
    r.num_gt += static_cast<int>(g.size());
    r.num_hyp += static_cast<int>(h.size());

    std::unordered_map<int, std::size_t> hyp_index;
    for (std::size_t j = 0; j < h.size(); ++j) hyp_index[h[j].id] = j;

    std::vector<char> g_used(g.size(), 0);
    std::vector<char> h_used(h.size(), 0);
    std::vector<std::pair<std::size_t, std::size_t>> frame_matches;

    // Keep previous correspondences that are still valid.
    for (std::size_t i = 0; i < g.size(); ++i) {
      auto lm = last_match.find(g[i].id);
      if (lm == last_match.end()) continue;
      auto hj = hyp_index.find(lm->second);
      if (hj == hyp_index.end() || h_used[hj->second]) continue;
      if (iou(g[i].box, h[hj->second].box) >= iou_threshold) {
        g_used[i] = 1;
        h_used[hj->second] = 1;
        frame_matches.emplace_back(i, hj->second);
      }
    }

    std::vector<std::size_t> gi, hj;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!g_used[i]) gi.push_back(i);
    }
    for (std::size_t j = 0; j < h.size(); ++j) {
      if (!h_used[j]) hj.push_back(j);
    }
    if (!gi.empty() && !hj.empty()) {
      CostMatrix costs(static_cast<Eigen::Index>(gi.size()), static_cast<Eigen::Index>(hj.size()));
      for (std::size_t a = 0; a < gi.size(); ++a) {
        for (std::size_t b = 0; b < hj.size(); ++b) {
          const double v = iou(g[gi[a]].box, h[hj[b]].box);
          costs(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
              v >= iou_threshold ? 1.0 - v : std::numeric_limits<double>::infinity();
        }
      }
      const Assignment a = solve_assignment(costs, 1.0 - iou_threshold);
      for (auto [ra, cb] : a.pairs) {
        const std::size_t i = gi[ra];
        const std::size_t j = hj[cb];
        auto lm = last_match.find(g[i].id);
        if (lm != last_match.end() && lm->second != h[j].id) ++r.idsw;
        g_used[i] = 1;
        h_used[j] = 1;
        frame_matches.emplace_back(i, j);
      }
    }

    for (auto [i, j] : frame_matches) {
      last_match[g[i].id] = h[j].id;
      distance_sum += 1.0 - iou(g[i].box, h[j].box);
    }
    r.matches += static_cast<int>(frame_matches.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      auto& c = coverage[g[i].id];
      ++c.first;
      if (g_used[i]) ++c.second;
    }
    r.fn += static_cast<int>(std::count(g_used.begin(), g_used.end(), 0));
    r.fp += static_cast<int>(std::count(h_used.begin(), h_used.end(), 0));
  }

  if (r.num_gt == 0) throw Error(ErrorCode::Evaluation, "ground truth contains no boxes");
  r.mota = (1.0 - static_cast<double>(r.fp + r.fn + r.idsw) / r.num_gt) * 100.0;
  r.motp = r.matches > 0 ? distance_sum / r.matches * 100.0 : 0.0;
  r.faf = ratio(r.fp, r.num_frames);
  r.precision = ratio(r.matches, r.matches + r.fp) * 100.0;
  r.recall = ratio(r.matches, r.num_gt) * 100.0;
  for (const auto& [id, c] : coverage) {
    const double tracked = static_cast<double>(c.second) / c.first;
    if (tracked >= 0.8) {
      ++r.mt;
    } else if (tracked <= 0.2) {
      ++r.ml;
    } else {
      ++r.pt;
    }
  }
  return r;
}

IdentityReport identity_metrics(const BoxSequence& gt, const BoxSequence& hyp, double iou_threshold) {
  check_frames(gt, hyp);
  std::map<int, int> gt_row, hyp_col;
  long total_gt = 0, total_hyp = 0;
  for (std::size_t f = 0; f < gt.size(); ++f) {
    for (const LabeledBox& b : gt[f]) gt_row.emplace(b.id, 0);
    for (const LabeledBox& b : hyp[f]) hyp_col.emplace(b.id, 0);
    total_gt += static_cast<long>(gt[f].size());
    total_hyp += static_cast<long>(hyp[f].size());
  }
  int k = 0;
  for (auto& [id, row] : gt_row) row = k++;
  k = 0;
  for (auto& [id, col] : hyp_col) col = k++;

  IdentityReport r;
  if (!gt_row.empty() && !hyp_col.empty()) {
    Eigen::MatrixXd overlap = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(gt_row.size()),
                                                    static_cast<Eigen::Index>(hyp_col.size()));
    for (std::size_t f = 0; f < gt.size(); ++f) {
      for (const LabeledBox& g : gt[f]) {
        for (const LabeledBox& h : hyp[f]) {
          if (iou(g.box, h.box) >= iou_threshold) overlap(gt_row[g.id], hyp_col[h.id]) += 1.0;
        }
      }
    }
    const std::vector<int> col_of_row = min_cost_assignment(-overlap);
    for (Eigen::Index i = 0; i < overlap.rows(); ++i) {
      if (col_of_row[i] >= 0) r.idtp += static_cast<long>(overlap(i, col_of_row[i]));
    }
  }
  r.idfn = total_gt - r.idtp;
  r.idfp = total_hyp - r.idtp;
  r.idp = ratio(r.idtp, r.idtp + r.idfp) * 100.0;
  r.idr = ratio(r.idtp, r.idtp + r.idfn) * 100.0;
  r.idf1 = ratio(2.0 * r.idtp, 2.0 * r.idtp + r.idfp + r.idfn) * 100.0;
  return r;
}

MotReport evaluate_mot(const BoxSequence& gt, const BoxSequence& hyp, double iou_threshold) {
  MotReport r = clear_mot(gt, hyp, iou_threshold);
  const IdentityReport id = identity_metrics(gt, hyp, iou_threshold);
  r.idp = id.idp;
  r.idr = id.idr;
  r.idf1 = id.idf1;
  return r;
}

CountReport counting_metrics(std::span<const std::pair<double, double>> pairs) {
  if (pairs.empty()) throw Error(ErrorCode::Evaluation, "no count pairs");
  CountReport r;
  r.n = static_cast<int>(pairs.size());
  double abs_sum = 0.0, sq_sum = 0.0, pct_sum = 0.0, err_sum = 0.0;
  for (auto [p, t] : pairs) {
    if (!(t > 0.0)) throw Error(ErrorCode::Evaluation, "true count must be positive for MAPE");
    const double e = p - t;
    abs_sum += std::abs(e);
    sq_sum += e * e;
    pct_sum += std::abs(e) / t;
    err_sum += e;
  }
  const double n = static_cast<double>(r.n);
  r.mae = abs_sum / n;
  r.rmse = std::sqrt(sq_sum / n);
  r.mape = pct_sum / n * 100.0;
  r.me = err_sum / n;
  return r;
}

BoxSequence hypotheses_from_outputs(std::span<const FrameOutput> outputs, int num_frames, bool include_predicted) {
  BoxSequence seq(static_cast<std::size_t>(std::max(num_frames, 0)));
  for (const FrameOutput& f : outputs) {
    if (f.frame < 1 || f.frame > num_frames) {
      throw Error(ErrorCode::Evaluation, "hypothesis frame " + std::to_string(f.frame) + " outside sequence");
    }
    for (const TrackOutput& t : f.tracks) {
      if (t.status != TrackStatus::Confirmed) continue;
      if (t.predicted && !include_predicted) continue;
      seq[static_cast<std::size_t>(f.frame - 1)].push_back({t.id, t.box});
    }
  }
  return seq;
}

}  // namespace phystrack
