#pragma once

#include <span>
#include <utility>
#include <vector>

#include "phystrack/geometry.hpp"
#include "phystrack/tracker.hpp"

namespace phystrack {

struct LabeledBox {
  int id = 0;
  HeadBox box;
};

using FrameBoxes = std::vector<LabeledBox>;
/// Index k holds frame k + 1. Used for both ground truth and hypotheses.
using BoxSequence = std::vector<FrameBoxes>;

struct MotReport {
  // Percentages.
  double mota = 0.0;
  double motp = 0.0;  // mean (1 - IoU) over matches, lower is better
  double idf1 = 0.0;
  double idp = 0.0;
  double idr = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double faf = 0.0;  // false positives per frame

  int idsw = 0;
  int fp = 0;
  int fn = 0;
  int matches = 0;
  int mt = 0;
  int pt = 0;
  int ml = 0;
  int num_frames = 0;
  int num_gt = 0;   // ground-truth boxes
  int num_hyp = 0;  // hypothesis boxes
};

struct IdentityReport {
  double idp = 0.0;
  double idr = 0.0;
  double idf1 = 0.0;
  long idtp = 0;
  long idfp = 0;
  long idfn = 0;
};

struct CountReport {
  double mae = 0.0;
  double rmse = 0.0;
  double mape = 0.0;  // percent
  double me = 0.0;    // positive = overcount
  int n = 0;
};

inline constexpr double kDefaultMatchIou = 0.5;

/// CLEAR-MOT with correspondence carry-over. The identity fields are left at 0;
/// evaluate_mot fills them. Throws Error(Evaluation) on frame-count mismatch or
/// empty ground truth.
MotReport clear_mot(const BoxSequence& gt, const BoxSequence& hyp, double iou_threshold = kDefaultMatchIou);

/// Global one-to-one trajectory matching maximizing identity true positives.
IdentityReport identity_metrics(const BoxSequence& gt, const BoxSequence& hyp,
                                double iou_threshold = kDefaultMatchIou);

MotReport evaluate_mot(const BoxSequence& gt, const BoxSequence& hyp, double iou_threshold = kDefaultMatchIou);

/// pairs are (predicted, true). Throws Error(Evaluation) if a true count is <= 0
/// or the list is empty.
CountReport counting_metrics(std::span<const std::pair<double, double>> pairs);

/// Confirmed tracks as hypotheses; predicted boxes are skipped unless requested.
BoxSequence hypotheses_from_outputs(std::span<const FrameOutput> outputs, int num_frames,
                                    bool include_predicted = false);

}  // namespace phystrack
