#include "phystrack/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "phystrack/errors.hpp"
#include "phystrack/random.hpp"

namespace phystrack {
namespace {

constexpr double kCameraFloor = 2.0;

// Stream ids; each consumer draws from its own stream so changing one noise
// source never perturbs another.
constexpr std::uint64_t kPlacementStream = 1;
constexpr std::uint64_t kDetectionStream = 2;
constexpr std::uint64_t kFalsePositiveStream = 3;
constexpr std::uint64_t kWalkStreamBase = 1'000'000;
constexpr std::uint64_t kIdentityStreamBase = 2'000'000;

Embedding random_unit(Rng& rng, int dim) {
  std::vector<double> v(static_cast<std::size_t>(dim));
  for (double& x : v) x = rng.normal();
  return Embedding::normalized(std::move(v));
}

Embedding basis_vector(int dim, int index) {
  std::vector<double> v(static_cast<std::size_t>(dim), 0.0);
  v[static_cast<std::size_t>(index % dim)] = 1.0;
  return Embedding(std::move(v));
}

bool center_in_image(const HeadBox& b, const CameraIntrinsics& cam) {
  return b.x >= 0.0 && b.x < cam.image_width && b.y >= 0.0 && b.y < cam.image_height;
}

}  // namespace

int SceneConfig::num_frames() const { return static_cast<int>(std::lround(duration * fps)); }

void SceneConfig::validate() const {
  camera.validate();
  if (num_pedestrians < 0) throw Error(ErrorCode::Config, "num_pedestrians must be >= 0");
  if (!(lateral_min > 0.0 && lateral_max >= lateral_min)) {
    throw Error(ErrorCode::Config, "lateral range must be positive and ordered");
  }
  if (!(vertical_max >= vertical_min)) throw Error(ErrorCode::Config, "vertical range must be ordered");
  if (!(head_height_mean > 0.0) || head_height_std < 0.0 || walk_std < 0.0) {
    throw Error(ErrorCode::Config, "head height must be positive and stds non-negative");
  }
  if (!(platform_length >= 0.0) || exit_margin < 0.0) {
    throw Error(ErrorCode::Config, "platform_length and exit_margin must be >= 0");
  }
  if (platform_side < -1 || platform_side > 1) throw Error(ErrorCode::Config, "platform_side must be -1, 0 or 1");
  if (!(opposite_fraction >= 0.0 && opposite_fraction <= 1.0)) {
    throw Error(ErrorCode::Config, "opposite_fraction must lie in [0, 1]");
  }
  if (!(d0 > 0.0) || v0 < 0.0 || decel < 0.0) {
    throw Error(ErrorCode::Config, "d0 must be positive, v0 and decel non-negative");
  }
  if (!(fps > 0.0) || !(duration > 0.0)) throw Error(ErrorCode::Config, "fps and duration must be positive");
}

NoiseConfig NoiseConfig::zero() {
  NoiseConfig n;
  n.center_jitter = 0.0;
  n.height_jitter = 0.0;
  n.miss_rate = 0.0;
  n.occlusion_miss_rate = 0.0;
  n.false_positives = 0.0;
  n.embedding_noise = 0.0;
  return n;
}

void NoiseConfig::validate() const {
  if (center_jitter < 0.0 || height_jitter < 0.0 || embedding_noise < 0.0 || false_positives < 0.0) {
    throw Error(ErrorCode::Config, "noise stds and rates must be non-negative");
  }
  if (!(miss_rate >= 0.0 && miss_rate <= 1.0) || !(occlusion_miss_rate >= 0.0 && occlusion_miss_rate <= 1.0) ||
      !(occlusion_iou >= 0.0 && occlusion_iou <= 1.0)) {
    throw Error(ErrorCode::Config, "rates must lie in [0, 1]");
  }
  if (embedding_dim < 0) throw Error(ErrorCode::Config, "embedding_dim must be >= 0");
}

double camera_distance(const SceneConfig& scene, double t) {
  double te = t;
  if (scene.decel > 0.0) te = std::min(t, scene.v0 / scene.decel);
  const double d = scene.d0 - scene.v0 * te + 0.5 * scene.decel * te * te;
  return std::max(d, kCameraFloor);
}

std::vector<Pedestrian> sample_pedestrians(const SceneConfig& scene) {
  scene.validate();
  Rng rng = Rng::stream(scene.seed, kPlacementStream);
  int side = scene.platform_side;
  if (side == 0) side = rng.bernoulli(0.5) ? -1 : 1;

  const CameraIntrinsics& cam = scene.camera;
  const double t_end = (scene.num_frames() - 1) / scene.fps;
  const double d_end = camera_distance(scene, t_end);

  std::vector<Pedestrian> peds;
  peds.reserve(static_cast<std::size_t>(scene.num_pedestrians));
  for (int i = 0; i < scene.num_pedestrians; ++i) {
    Pedestrian p;
    p.id = i + 1;
    const int s = rng.bernoulli(scene.opposite_fraction) ? -side : side;
    const double lateral = rng.uniform(scene.lateral_min, scene.lateral_max);
    p.x = s * lateral;
    p.y = rng.uniform(scene.vertical_min, scene.vertical_max);
    p.head_height = std::clamp(rng.normal(scene.head_height_mean, scene.head_height_std),
                               0.5 * scene.head_height_mean, 1.5 * scene.head_height_mean);
    p.aspect = rng.uniform(0.65, 0.85);
    // Depth at which the head center leaves the image on its side.
    const double half_width = s < 0 ? cam.cx : cam.image_width - cam.cx;
    const double exit_depth = cam.fx * lateral / half_width;
    p.platform_offset = exit_depth - d_end - scene.exit_margin - rng.uniform() * scene.platform_length;
    peds.push_back(p);
  }
  return peds;
}

SimulatedSequence render(const SceneConfig& scene, const std::vector<Pedestrian>& pedestrians,
                         const NoiseConfig& noise) {
  scene.validate();
  noise.validate();
  const CameraIntrinsics& cam = scene.camera;
  const int frames = scene.num_frames();
  const double dt = 1.0 / scene.fps;

  SimulatedSequence seq;
  seq.camera = cam;
  seq.fps = scene.fps;
  seq.ground_truth.resize(static_cast<std::size_t>(frames));
  seq.detections.resize(static_cast<std::size_t>(frames));
  seq.detection_sources.resize(static_cast<std::size_t>(frames));

  std::vector<Embedding> identity;
  std::vector<Rng> walkers;
  std::vector<std::pair<double, double>> lateral;
  for (const Pedestrian& p : pedestrians) {
    Rng id_rng = Rng::stream(scene.seed, kIdentityStreamBase + static_cast<std::uint64_t>(p.id));
    identity.push_back(noise.embedding_dim > 0 ? random_unit(id_rng, noise.embedding_dim) : Embedding());
    walkers.push_back(Rng::stream(scene.seed, kWalkStreamBase + static_cast<std::uint64_t>(p.id)));
    lateral.emplace_back(p.x, p.y);
  }
  std::vector<char> seen(pedestrians.size(), 0);
  Rng det_rng = Rng::stream(scene.seed, kDetectionStream);
  Rng fp_rng = Rng::stream(scene.seed, kFalsePositiveStream);
  const double walk_step = scene.walk_std * std::sqrt(dt);

  for (int k = 0; k < frames; ++k) {
    const double t = k * dt;
    const double d = camera_distance(scene, t);

    struct Visible {
      std::size_t ped;
      double z;
      HeadBox box;
    };
    std::vector<Visible> visible;
    for (std::size_t i = 0; i < pedestrians.size(); ++i) {
      if (k > 0 && walk_step > 0.0) {
        lateral[i].first += walkers[i].normal() * walk_step;
        lateral[i].second += walkers[i].normal() * walk_step;
      }
      const double z = d + pedestrians[i].platform_offset;
      if (!(z > kMinDepth)) continue;
      const PixelPoint px = project({lateral[i].first, lateral[i].second, z}, cam);
      const HeadBox box{px.x, px.y, pedestrians[i].aspect, cam.fy * pedestrians[i].head_height / z};
      if (!center_in_image(box, cam)) continue;
      visible.push_back({i, z, box});
      seen[i] = 1;
    }

    FrameBoxes& gt = seq.ground_truth[static_cast<std::size_t>(k)];
    std::vector<Detection> dets;
    std::vector<int> sources;
    for (const Visible& v : visible) {
      gt.push_back({pedestrians[v.ped].id, v.box});
      double occlusion = 0.0;
      for (const Visible& w : visible) {
        if (w.z < v.z) occlusion = std::max(occlusion, iou(v.box, w.box));
      }
      const bool missed = det_rng.bernoulli(noise.miss_rate);
      const bool occluded = occlusion > noise.occlusion_iou && det_rng.bernoulli(noise.occlusion_miss_rate);
      if (missed || occluded) continue;

      Detection det;
      det.box = v.box;
      det.box.x += det_rng.normal() * noise.center_jitter * v.box.h;
      det.box.y += det_rng.normal() * noise.center_jitter * v.box.h;
      det.box.h = std::max(1.0, v.box.h * (1.0 + det_rng.normal() * noise.height_jitter));
      det.confidence = 0.95 - 0.3 * occlusion;
      if (noise.embedding_dim > 0) {
        if (noise.embedding_noise > 0.0) {
          std::vector<double> e(identity[v.ped].values().begin(), identity[v.ped].values().end());
          for (double& x : e) x += det_rng.normal() * noise.embedding_noise;
          det.embedding = Embedding::normalized(std::move(e));
        } else {
          det.embedding = identity[v.ped];
        }
      }
      dets.push_back(std::move(det));
      sources.push_back(pedestrians[v.ped].id);
    }

    const int n_fp = fp_rng.poisson(noise.false_positives);
    for (int f = 0; f < n_fp; ++f) {
      Detection det;
      const double h = fp_rng.uniform(8.0, 60.0);
      det.box = HeadBox{fp_rng.uniform(0.0, cam.image_width), fp_rng.uniform(0.0, cam.image_height),
                        fp_rng.uniform(0.65, 0.85), h};
      det.confidence = fp_rng.uniform(0.5, 0.7);
      if (noise.embedding_dim > 0) det.embedding = random_unit(fp_rng, noise.embedding_dim);
      dets.push_back(std::move(det));
      sources.push_back(-1);
    }

    // Fisher-Yates with the portable generator.
    for (std::size_t i = dets.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(det_rng.next() % i);
      std::swap(dets[i - 1], dets[j]);
      std::swap(sources[i - 1], sources[j]);
    }
    seq.detections[static_cast<std::size_t>(k)] = std::move(dets);
    seq.detection_sources[static_cast<std::size_t>(k)] = std::move(sources);
  }

  for (std::size_t i = 0; i < pedestrians.size(); ++i) {
    if (!seen[i]) continue;
    if (pedestrians[i].x < 0.0) {
      ++seq.truth.left;
    } else {
      ++seq.truth.right;
    }
  }
  return seq;
}

SimulatedSequence generate(const SceneConfig& scene, const NoiseConfig& noise) {
  return render(scene, sample_pedestrians(scene), noise);
}

std::vector<SceneConfig> benchmark_scenes(std::uint64_t base_seed, int count) {
  std::vector<SceneConfig> scenes;
  for (int i = 0; i < count; ++i) {
    SceneConfig s;
    s.seed = base_seed + static_cast<std::uint64_t>(i);
    s.num_pedestrians = count > 1 ? 10 + static_cast<int>(std::lround(50.0 * i / (count - 1))) : 10;
    scenes.push_back(s);
  }
  return scenes;
}

namespace {

void drop_detections(SimulatedSequence& seq, int frame, int source) {
  auto& dets = seq.detections[static_cast<std::size_t>(frame - 1)];
  auto& src = seq.detection_sources[static_cast<std::size_t>(frame - 1)];
  for (std::size_t i = 0; i < dets.size();) {
    if (src[i] == source) {
      dets.erase(dets.begin() + static_cast<std::ptrdiff_t>(i));
      src.erase(src.begin() + static_cast<std::ptrdiff_t>(i));
    } else {
      ++i;
    }
  }
}

void truncate(SimulatedSequence& seq, int frames) {
  seq.ground_truth.resize(static_cast<std::size_t>(frames));
  seq.detections.resize(static_cast<std::size_t>(frames));
  seq.detection_sources.resize(static_cast<std::size_t>(frames));
}

// Frames (1-based) where pedestrian `id` has its ground-truth center in the left band.
std::vector<int> left_band_frames(const SimulatedSequence& seq, int id, const BandConfig& band) {
  std::vector<int> frames;
  for (std::size_t k = 0; k < seq.ground_truth.size(); ++k) {
    for (const LabeledBox& b : seq.ground_truth[k]) {
      if (b.id == id && band_membership(b.box.x, seq.camera.image_width, band) == Side::Left) {
        frames.push_back(static_cast<int>(k) + 1);
      }
    }
  }
  return frames;
}

SceneConfig scripted_scene() {
  SceneConfig s;
  s.seed = 7;
  s.num_pedestrians = 0;
  s.walk_std = 0.0;
  return s;
}

Scenario occlusion_scenario() {
  SceneConfig scene = scripted_scene();
  scene.d0 = 30.0;
  scene.v0 = 6.0;
  scene.decel = 1.0;
  scene.duration = 8.0;
  const double d_end = camera_distance(scene, scene.duration);
  Pedestrian p{1, -3.0, 0.2, 0.3, 0.0, 0.75};
  // Comes to rest at the band's center line (x = 0.125 W).
  const double rest_offset = scene.camera.cx - 0.125 * scene.camera.image_width;
  p.platform_offset = scene.camera.fx * 3.0 / rest_offset - d_end;

  Scenario sc;
  sc.name = "occlusion-3";
  sc.description = "single target hidden for 3 frames mid-band after meeting persistence";
  sc.sequence = render(scene, {p}, NoiseConfig::zero());
  const std::vector<int> in_band = left_band_frames(sc.sequence, 1, BandConfig{});
  const int hide_from = in_band.at(5);
  for (int f = hide_from; f < hide_from + 3; ++f) drop_detections(sc.sequence, f, 1);
  sc.expected_count = 1;
  sc.expected_idsw = 0;
  return sc;
}

Scenario crossing_scenario() {
  SceneConfig scene = scripted_scene();
  Pedestrian near{1, -2.5, 0.1, 0.3, -13.0, 0.75};
  Pedestrian far{2, -6.0, 0.1, 0.3, -5.0, 0.75};

  Scenario sc;
  sc.name = "crossing-pair";
  sc.description = "two targets swap image order before reaching the band; orthogonal appearance";
  sc.sequence = render(scene, {near, far}, NoiseConfig::zero());
  for (std::size_t k = 0; k < sc.sequence.detections.size(); ++k) {
    auto& dets = sc.sequence.detections[k];
    for (std::size_t i = 0; i < dets.size(); ++i) {
      dets[i].embedding = basis_vector(static_cast<int>(Embedding::kDefaultDim), sc.sequence.detection_sources[k][i]);
    }
  }
  sc.expected_count = 2;
  sc.expected_idsw = 0;
  return sc;
}

Scenario edge_jitter_scenario() {
  Scenario sc;
  sc.name = "edge-jitter";
  sc.description = "static target jittering +-1 px around the band start; out-of-band frames undetected";
  SimulatedSequence& seq = sc.sequence;
  seq.camera = CameraIntrinsics{};
  seq.fps = 25.0;
  const double edge = 0.05 * seq.camera.image_width;
  const double h = 30.0;
  const Embedding e = basis_vector(static_cast<int>(Embedding::kDefaultDim), 1);
  const int frames = 40;
  for (int k = 0; k < frames; ++k) {
    const bool inside = k % 4 != 3;
    const HeadBox box{inside ? edge + 1.0 : edge - 1.0, 600.0, 0.75, h};
    seq.ground_truth.push_back({{1, box}});
    std::vector<Detection> dets;
    std::vector<int> src;
    if (inside) {
      dets.push_back({box, 0.95, e});
      src.push_back(1);
    }
    seq.detections.push_back(std::move(dets));
    seq.detection_sources.push_back(std::move(src));
  }
  seq.truth = CountTruth{1, 0};
  sc.expected_count = 1;
  sc.expected_idsw = 0;
  sc.line_fraction = 0.05;
  sc.expected_line_count = 0;
  return sc;
}

Scenario end_partial_scenario() {
  SceneConfig scene = scripted_scene();
  Pedestrian p{1, -3.0, 0.1, 0.3, -12.0, 0.75};

  Scenario sc;
  sc.name = "end-partial";
  sc.description = "target enters the band on the final frame; end-of-video compensation counts it";
  sc.sequence = render(scene, {p}, NoiseConfig::zero());
  const std::vector<int> in_band = left_band_frames(sc.sequence, 1, BandConfig{});
  truncate(sc.sequence, in_band.at(0));
  sc.expected_count = 1;
  sc.expected_idsw = 0;
  return sc;
}

}  // namespace

std::vector<Scenario> scripted_scenarios() {
  std::vector<Scenario> out;
  out.push_back(occlusion_scenario());
  out.push_back(crossing_scenario());
  out.push_back(edge_jitter_scenario());
  out.push_back(end_partial_scenario());
  return out;
}

}  // namespace phystrack
