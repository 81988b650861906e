#include "phystrack/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <functional>

#include "phystrack/errors.hpp"

namespace phystrack {
namespace {

template <typename T>
T parse_value(std::string_view text, std::string_view key);

template <>
double parse_value<double>(std::string_view text, std::string_view key) {
  return parse_double(text, key);
}
template <>
int parse_value<int>(std::string_view text, std::string_view key) {
  return parse_int(text, key);
}
template <>
bool parse_value<bool>(std::string_view text, std::string_view key) {
  return parse_bool(text, key);
}
template <>
std::uint64_t parse_value<std::uint64_t>(std::string_view text, std::string_view key) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw Error(ErrorCode::Parse, "invalid unsigned integer for " + std::string(key) + ": '" + std::string(text) + "'");
  }
  return v;
}
template <>
MotionModelKind parse_value<MotionModelKind>(std::string_view text, std::string_view) {
  return parse_motion_model(text);
}

std::string format_value(double v) { return format_shortest(v); }
std::string format_value(int v) { return std::to_string(v); }
std::string format_value(bool v) { return v ? "true" : "false"; }
std::string format_value(std::uint64_t v) { return std::to_string(v); }
std::string format_value(MotionModelKind v) { return std::string(to_string(v)); }

template <typename Cfg>
struct Field {
  std::string key;
  std::function<void(Cfg&, std::string_view)> set;
  std::function<std::string(const Cfg&)> get;
};

template <typename Cfg, typename Ref>
Field<Cfg> field(std::string key, Ref ref) {
  using T = std::remove_cvref_t<decltype(ref(std::declval<Cfg&>()))>;
  Field<Cfg> f;
  f.key = key;
  f.set = [ref, key](Cfg& c, std::string_view v) { ref(c) = parse_value<T>(v, key); };
  f.get = [ref](const Cfg& c) { return format_value(ref(const_cast<Cfg&>(c))); };
  return f;
}

#define PT_FIELD(Cfg, key, member) field<Cfg>(key, [](Cfg& c) -> auto& { return c.member; })

const std::vector<Field<PipelineConfig>>& pipeline_fields() {
  using C = PipelineConfig;
  static const std::vector<Field<C>> fields = {
      PT_FIELD(C, "model", tracker.model),
      PT_FIELD(C, "n_init", tracker.n_init),
      PT_FIELD(C, "max_age", tracker.max_age),
      PT_FIELD(C, "min_confidence", tracker.min_confidence),
      PT_FIELD(C, "fps", tracker.fps),
      PT_FIELD(C, "gallery_size", tracker.gallery_size),
      PT_FIELD(C, "max_predicted_frames", tracker.max_predicted_frames),
      PT_FIELD(C, "adaptive_ego_prior", tracker.adaptive_ego_prior),
      PT_FIELD(C, "ego_rate_std", tracker.ego_rate_std),
      PT_FIELD(C, "ego_min_offset_px", tracker.ego_min_offset_px),
      PT_FIELD(C, "ego_min_samples", tracker.ego_min_samples),
      PT_FIELD(C, "lambda", tracker.association.lambda),
      PT_FIELD(C, "chi2_gate_cv8d", tracker.association.chi2_gate_cv8d),
      PT_FIELD(C, "chi2_gate_ca12d", tracker.association.chi2_gate_ca12d),
      PT_FIELD(C, "chi2_gate_phys3d", tracker.association.chi2_gate_phys3d),
      PT_FIELD(C, "appearance_gate", tracker.association.appearance_gate),
      PT_FIELD(C, "cascade_depth", tracker.association.cascade_depth),
      PT_FIELD(C, "depth_jump_max", tracker.association.depth_jump_max),
      PT_FIELD(C, "depth_jump_ref_fps", tracker.association.depth_jump_ref_fps),
      PT_FIELD(C, "iou_fallback_threshold", tracker.association.iou_fallback_threshold),
      PT_FIELD(C, "use_appearance", tracker.association.use_appearance),
      PT_FIELD(C, "pos_weight", tracker.noise.pos_weight),
      PT_FIELD(C, "vel_weight", tracker.noise.vel_weight),
      PT_FIELD(C, "acc_weight", tracker.noise.acc_weight),
      PT_FIELD(C, "aspect_pos_std", tracker.noise.aspect_pos_std),
      PT_FIELD(C, "aspect_vel_std", tracker.noise.aspect_vel_std),
      PT_FIELD(C, "aspect_acc_std", tracker.noise.aspect_acc_std),
      PT_FIELD(C, "sigma_lateral", tracker.noise.sigma_lateral),
      PT_FIELD(C, "sigma_head", tracker.noise.sigma_head),
      PT_FIELD(C, "sigma_depth", tracker.noise.sigma_depth),
      PT_FIELD(C, "sigma_depth_rate", tracker.noise.sigma_depth_rate),
      PT_FIELD(C, "sigma_depth_accel", tracker.noise.sigma_depth_accel),
      PT_FIELD(C, "meas_rel", tracker.noise.meas_rel),
      PT_FIELD(C, "meas_min_px", tracker.noise.meas_min_px),
      PT_FIELD(C, "meas_aspect", tracker.noise.meas_aspect),
      PT_FIELD(C, "aspect_beta", tracker.noise.aspect_beta),
      PT_FIELD(C, "head_height", tracker.noise.head_height),
      PT_FIELD(C, "ego_velocity_prior", tracker.noise.ego_velocity_prior),
      PT_FIELD(C, "band_start", band.start),
      PT_FIELD(C, "band_end", band.end),
      PT_FIELD(C, "persistence", band.persistence),
      PT_FIELD(C, "end_of_video_min", band.end_of_video_min),
      PT_FIELD(C, "count_predicted", band.count_predicted),
      PT_FIELD(C, "line_fraction", line_fraction),
      PT_FIELD(C, "match_iou", match_iou),
  };
  return fields;
}

const std::vector<Field<SceneConfig>>& scene_fields() {
  using C = SceneConfig;
  static const std::vector<Field<C>> fields = {
      PT_FIELD(C, "seed", seed),
      PT_FIELD(C, "num_pedestrians", num_pedestrians),
      PT_FIELD(C, "lateral_min", lateral_min),
      PT_FIELD(C, "lateral_max", lateral_max),
      PT_FIELD(C, "vertical_min", vertical_min),
      PT_FIELD(C, "vertical_max", vertical_max),
      PT_FIELD(C, "head_height_mean", head_height_mean),
      PT_FIELD(C, "head_height_std", head_height_std),
      PT_FIELD(C, "walk_std", walk_std),
      PT_FIELD(C, "platform_length", platform_length),
      PT_FIELD(C, "exit_margin", exit_margin),
      PT_FIELD(C, "platform_side", platform_side),
      PT_FIELD(C, "opposite_fraction", opposite_fraction),
      PT_FIELD(C, "d0", d0),
      PT_FIELD(C, "v0", v0),
      PT_FIELD(C, "decel", decel),
      PT_FIELD(C, "fps", fps),
      PT_FIELD(C, "duration", duration),
      PT_FIELD(C, "fx", camera.fx),
      PT_FIELD(C, "fy", camera.fy),
      PT_FIELD(C, "cx", camera.cx),
      PT_FIELD(C, "cy", camera.cy),
      PT_FIELD(C, "image_width", camera.image_width),
      PT_FIELD(C, "image_height", camera.image_height),
  };
  return fields;
}

const std::vector<Field<NoiseConfig>>& noise_fields() {
  using C = NoiseConfig;
  static const std::vector<Field<C>> fields = {
      PT_FIELD(C, "center_jitter", center_jitter),
      PT_FIELD(C, "height_jitter", height_jitter),
      PT_FIELD(C, "miss_rate", miss_rate),
      PT_FIELD(C, "occlusion_iou", occlusion_iou),
      PT_FIELD(C, "occlusion_miss_rate", occlusion_miss_rate),
      PT_FIELD(C, "false_positives", false_positives),
      PT_FIELD(C, "embedding_dim", embedding_dim),
      PT_FIELD(C, "embedding_noise", embedding_noise),
  };
  return fields;
}

#undef PT_FIELD

template <typename Cfg>
Cfg apply(const std::vector<Field<Cfg>>& fields, const KeyValues& values, Cfg cfg, std::string_view what) {
  for (const auto& [key, value] : values) {
    auto it = std::find_if(fields.begin(), fields.end(), [&](const Field<Cfg>& f) { return f.key == key; });
    if (it == fields.end()) throw Error(ErrorCode::Config, "unknown " + std::string(what) + " key '" + key + "'");
    try {
      it->set(cfg, value);
    } catch (const Error& e) {
      throw Error(ErrorCode::Config, std::string(what) + " key '" + key + "': " + e.what());
    }
  }
  return cfg;
}

template <typename Cfg>
KeyValues snapshot(const std::vector<Field<Cfg>>& fields, const Cfg& cfg) {
  KeyValues kv;
  for (const auto& f : fields) kv.emplace(f.key, f.get(cfg));
  return kv;
}

template <typename Cfg>
std::vector<std::string> keys_of(const std::vector<Field<Cfg>>& fields) {
  std::vector<std::string> keys;
  for (const auto& f : fields) keys.push_back(f.key);
  return keys;
}

}  // namespace

void PipelineConfig::validate() {
  tracker.validate();
  band.validate();
  if (!(line_fraction >= 0.0 && line_fraction <= 0.5)) throw Error(ErrorCode::Config, "line_fraction must lie in [0, 0.5]");
  if (!(match_iou > 0.0 && match_iou <= 1.0)) throw Error(ErrorCode::Config, "match_iou must lie in (0, 1]");
}

PipelineConfig pipeline_config_from(const KeyValues& values, PipelineConfig base) {
  PipelineConfig cfg = apply(pipeline_fields(), values, std::move(base), "config");
  cfg.validate();
  return cfg;
}

KeyValues to_key_values(const PipelineConfig& config) { return snapshot(pipeline_fields(), config); }
std::vector<std::string> pipeline_config_keys() { return keys_of(pipeline_fields()); }

SceneConfig scene_config_from(const KeyValues& values, SceneConfig base) {
  SceneConfig cfg = apply(scene_fields(), values, std::move(base), "scene");
  cfg.validate();
  return cfg;
}

KeyValues to_key_values(const SceneConfig& config) { return snapshot(scene_fields(), config); }
std::vector<std::string> scene_config_keys() { return keys_of(scene_fields()); }

NoiseConfig noise_config_from(const KeyValues& values, NoiseConfig base) {
  NoiseConfig cfg = apply(noise_fields(), values, std::move(base), "noise");
  cfg.validate();
  return cfg;
}

KeyValues to_key_values(const NoiseConfig& config) { return snapshot(noise_fields(), config); }
std::vector<std::string> noise_config_keys() { return keys_of(noise_fields()); }

void apply_env_overrides(KeyValues& values, std::span<const std::string> keys) {
  for (const std::string& key : keys) {
    std::string name(kEnvPrefix);
    for (char c : key) name += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (const char* v = std::getenv(name.c_str())) values[key] = v;
  }
}

}  // namespace phystrack
