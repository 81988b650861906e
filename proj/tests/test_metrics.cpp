#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "phystrack/errors.hpp"
#include "phystrack/io.hpp"
#include "phystrack/metrics.hpp"
#include "test_support.hpp"

using namespace phystrack;
using phystrack::testing::Gen;
using phystrack::testing::square;

namespace {

BoxSequence one_gt(int frames) {
  BoxSequence s(static_cast<std::size_t>(frames));
  for (auto& f : s) f.push_back({1, square(100, 100, 20)});
  return s;
}

// Random ground truth with up to `max_ids` trajectories and a hypothesis made
// of jittered, dropped, relabelled and spurious boxes.
std::pair<BoxSequence, BoxSequence> random_pair(Gen& g, int frames, int max_ids, int max_hyp_ids) {
  BoxSequence gt(static_cast<std::size_t>(frames)), hyp(static_cast<std::size_t>(frames));
  const int n = g.integer(1, max_ids);
  for (int id = 1; id <= n; ++id) {
    const int first = g.integer(1, frames), last = g.integer(first, frames);
    const double x0 = g.uniform(0, 500), y0 = g.uniform(0, 500);
    int label = g.integer(1, max_hyp_ids);
    for (int f = first; f <= last; ++f) {
      const HeadBox b = square(x0 + 3 * f, y0, 20);
      gt[static_cast<std::size_t>(f - 1)].push_back({id, b});
      if (g.uniform(0, 1) < 0.15) label = g.integer(1, max_hyp_ids);
      if (g.uniform(0, 1) < 0.2) continue;
      HeadBox h = b;
      h.x += g.uniform(-6, 6);
      h.y += g.uniform(-6, 6);
      auto& hf = hyp[static_cast<std::size_t>(f - 1)];
      if (std::none_of(hf.begin(), hf.end(), [&](const LabeledBox& l) { return l.id == label; })) {
        hf.push_back({label, h});
      }
    }
  }
  for (int f = 1; f <= frames; ++f) {
    if (g.uniform(0, 1) < 0.2) {
      const int label = g.integer(1, max_hyp_ids);
      auto& hf = hyp[static_cast<std::size_t>(f - 1)];
      if (std::none_of(hf.begin(), hf.end(), [&](const LabeledBox& l) { return l.id == label; })) {
        hf.push_back({label, square(g.uniform(0, 500), g.uniform(0, 500), 20)});
      }
    }
  }
  return {gt, hyp};
}

// Exhaustive trajectory matching: every partial one-to-one map between gt and
// hypothesis ids, keeping the one with the most overlapping detection-frames.
long brute_force_idtp(const BoxSequence& gt, const BoxSequence& hyp, double thr) {
  std::set<int> gids, hids;
  std::map<std::pair<int, int>, long> overlap;
  for (std::size_t f = 0; f < gt.size(); ++f) {
    for (const auto& g : gt[f]) {
      gids.insert(g.id);
      for (const auto& h : hyp[f]) {
        if (iou(g.box, h.box) >= thr) ++overlap[{g.id, h.id}];
      }
    }
    for (const auto& h : hyp[f]) hids.insert(h.id);
  }
  const std::vector<int> gv(gids.begin(), gids.end()), hv(hids.begin(), hids.end());
  long best = 0;
  std::vector<char> used(hv.size(), 0);
  auto rec = [&](auto&& self, std::size_t i, long acc) -> void {
    if (i == gv.size()) {
      best = std::max(best, acc);
      return;
    }
    self(self, i + 1, acc);
    for (std::size_t j = 0; j < hv.size(); ++j) {
      if (used[j]) continue;
      used[j] = 1;
      const auto it = overlap.find({gv[i], hv[j]});
      self(self, i + 1, acc + (it == overlap.end() ? 0 : it->second));
      used[j] = 0;
    }
  };
  rec(rec, 0, 0);
  return best;
}

}  // namespace

TEST_CASE("clear_mot: perfect tracking") {
  Gen g(601);
  auto [gt, hyp] = random_pair(g, 30, 5, 5);
  const MotReport r = evaluate_mot(gt, gt);
  CHECK(r.mota == 100.0);
  CHECK(r.motp == 0.0);
  CHECK(r.idf1 == 100.0);
  CHECK(r.idsw == 0);
  CHECK(r.fp == 0);
  CHECK(r.faf == 0.0);
  CHECK(r.matches == r.num_gt);
}

TEST_CASE("clear_mot: one gt over two frames") {
  SUBCASE("hypothesis present in one frame") {
    BoxSequence hyp(2);
    hyp[0].push_back({7, square(100, 100, 20)});
    const MotReport r = clear_mot(one_gt(2), hyp);
    CHECK(r.fn == 1);
    CHECK(r.fp == 0);
    CHECK(r.mota == 50.0);
  }
  SUBCASE("id change with perfect boxes") {
    BoxSequence hyp(2);
    hyp[0].push_back({7, square(100, 100, 20)});
    hyp[1].push_back({8, square(100, 100, 20)});
    const MotReport r = clear_mot(one_gt(2), hyp);
    CHECK(r.idsw == 1);
    CHECK(r.mota == 50.0);
  }
}

TEST_CASE("clear_mot: carry-over keeps a valid correspondence") {
  // Frame 2 offers a closer box with another id; the existing match survives.
  BoxSequence gt = one_gt(2);
  BoxSequence hyp(2);
  hyp[0].push_back({1, square(100, 100, 20)});
  hyp[1].push_back({1, square(104, 100, 20)});
  hyp[1].push_back({2, square(100, 100, 20)});
  const MotReport r = clear_mot(gt, hyp);
  CHECK(r.idsw == 0);
  CHECK(r.fp == 1);
  CHECK(r.matches == 2);
}

TEST_CASE("clear_mot: MOTP, FAF, precision, recall and track quality") {
  BoxSequence gt(4), hyp(4);
  for (int f = 0; f < 4; ++f) {
    gt[static_cast<std::size_t>(f)].push_back({1, square(100, 100, 20)});
    gt[static_cast<std::size_t>(f)].push_back({2, square(400, 100, 20)});
  }
  // Track 1 matched every frame with IoU 0.6 (shifted by w/4: overlap 15/25).
  for (int f = 0; f < 4; ++f) hyp[static_cast<std::size_t>(f)].push_back({5, square(105, 100, 20)});
  hyp[0].push_back({6, square(400, 100, 20)});  // track 2 matched in 1 of 4 frames: partially tracked
  hyp[2].push_back({9, square(800, 800, 20)});  // false positive
  const MotReport r = clear_mot(gt, hyp);
  const double iou_shift = 15.0 * 20.0 / (2 * 400.0 - 15.0 * 20.0);
  CHECK(r.matches == 5);
  CHECK(r.fp == 1);
  CHECK(r.fn == 3);
  CHECK(r.motp == doctest::Approx((4 * (1 - iou_shift) + 0.0) / 5 * 100));
  CHECK(r.faf == doctest::Approx(0.25));
  CHECK(r.precision == doctest::Approx(5.0 / 6 * 100));
  CHECK(r.recall == doctest::Approx(5.0 / 8 * 100));
  CHECK(r.mt == 1);
  CHECK(r.pt == 1);
  CHECK(r.ml == 0);
}

TEST_CASE("clear_mot: errors") {
  CHECK_THROWS_AS(clear_mot(one_gt(3), BoxSequence(2)), Error);
  CHECK_THROWS_AS(clear_mot(BoxSequence(2), BoxSequence(2)), Error);
}

TEST_CASE("identity_metrics fixtures") {
  SUBCASE("fragmentation into two halves") {
    BoxSequence hyp(10);
    for (int f = 0; f < 10; ++f) hyp[static_cast<std::size_t>(f)].push_back({f < 5 ? 1 : 2, square(100, 100, 20)});
    const IdentityReport r = identity_metrics(one_gt(10), hyp);
    CHECK(r.idtp == 5);
    CHECK(r.idfp == 5);
    CHECK(r.idfn == 5);
    CHECK(r.idf1 == 50.0);
  }
  SUBCASE("no hypotheses") {
    const IdentityReport r = identity_metrics(one_gt(4), BoxSequence(4));
    CHECK(r.idr == 0.0);
    CHECK(r.idf1 == 0.0);
  }
  SUBCASE("perfect") { CHECK(identity_metrics(one_gt(4), one_gt(4)).idf1 == 100.0); }
}

TEST_CASE("property: identity metrics match exhaustive matching") {
  Gen g(602);
  for (int trial = 0; trial < 500; ++trial) {
    auto [gt, hyp] = random_pair(g, g.integer(1, 15), 3, 3);
    bool any = false;
    for (const auto& f : gt) any = any || !f.empty();
    if (!any) continue;
    const IdentityReport r = identity_metrics(gt, hyp);
    REQUIRE(r.idtp == brute_force_idtp(gt, hyp, kDefaultMatchIou));
    if (r.idp + r.idr > 0) REQUIRE(r.idf1 == doctest::Approx(2 * r.idp * r.idr / (r.idp + r.idr)).epsilon(1e-9));
  }
}

TEST_CASE("property: MOTA identity and bounds") {
  Gen g(603);
  for (int trial = 0; trial < 300; ++trial) {
    auto [gt, hyp] = random_pair(g, g.integer(2, 40), 6, 8);
    int total = 0;
    for (const auto& f : gt) total += static_cast<int>(f.size());
    if (total == 0) continue;
    const MotReport r = evaluate_mot(gt, hyp);
    REQUIRE(r.mota <= 100.0);
    REQUIRE(r.mota + static_cast<double>(r.fp + r.fn + r.idsw) / total * 100.0 == doctest::Approx(100.0).epsilon(1e-12));
    REQUIRE(r.matches + r.fn == total);
    REQUIRE(r.mt + r.pt + r.ml >= 1);
    if (r.idp + r.idr > 0) REQUIRE(std::abs(r.idf1 - 2 * r.idp * r.idr / (r.idp + r.idr)) <= 1e-9);
  }
}

TEST_CASE("counting_metrics fixtures") {
  const std::vector<std::pair<double, double>> pairs{{19, 19}, {18, 19}};
  const CountReport r = counting_metrics(pairs);
  CHECK(r.mae == 0.5);
  CHECK(r.rmse == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
  CHECK(r.mape == doctest::Approx(100.0 / 38.0).epsilon(1e-15));
  CHECK(format_fixed(r.mape, 3) == "2.632");
  CHECK(r.me == -0.5);

  const std::vector<std::pair<double, double>> exact{{5, 5}, {7, 7}};
  const CountReport z = counting_metrics(exact);
  CHECK(z.mae == 0.0);
  CHECK(z.rmse == 0.0);
  CHECK(z.mape == 0.0);
  CHECK(z.me == 0.0);

  // Video 5 of the per-video table: TC 19 against TV 18.
  const std::vector<std::pair<double, double>> video5{{19, 18}};
  CHECK(format_fixed(counting_metrics(video5).mape, 2) == "5.56");

  CHECK_THROWS_AS(counting_metrics(std::vector<std::pair<double, double>>{{1, 0}}), Error);
  CHECK_THROWS_AS(counting_metrics(std::vector<std::pair<double, double>>{}), Error);
}

TEST_CASE("property: counting metric inequalities and scale invariance of MAPE") {
  Gen g(604);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::pair<double, double>> pairs;
    const int n = g.integer(1, 20);
    for (int i = 0; i < n; ++i) pairs.emplace_back(g.integer(0, 80), g.integer(1, 80));
    const CountReport r = counting_metrics(pairs);
    REQUIRE(r.rmse >= r.mae - 1e-12);
    REQUIRE(r.mae >= 0.0);
    REQUIRE(r.rmse >= std::abs(r.me) - 1e-12);
    const double k = g.uniform(0.1, 10);
    std::vector<std::pair<double, double>> scaled;
    for (auto [p, t] : pairs) scaled.emplace_back(p * k, t * k);
    REQUIRE(counting_metrics(scaled).mape == doctest::Approx(r.mape).epsilon(1e-12));
  }
}

TEST_CASE("hypotheses_from_outputs") {
  std::vector<FrameOutput> outs{
      FrameOutput{1, {TrackOutput{1, square(1, 1, 1), TrackStatus::Confirmed, false},
                      TrackOutput{2, square(1, 1, 1), TrackStatus::Tentative, false}}},
      FrameOutput{2, {TrackOutput{1, square(1, 1, 1), TrackStatus::Confirmed, true}}}};
  const BoxSequence h = hypotheses_from_outputs(outs, 2);
  CHECK(h[0].size() == 1);
  CHECK(h[1].empty());
  CHECK(hypotheses_from_outputs(outs, 2, true)[1].size() == 1);
  CHECK_THROWS_AS(hypotheses_from_outputs(outs, 1), Error);
}
