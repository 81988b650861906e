#include "phystrack/phystrack.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>
#include <vector>

#include "phystrack/config.hpp"
#include "phystrack/counting.hpp"
#include "phystrack/errors.hpp"
#include "phystrack/io.hpp"
#include "phystrack/pipeline.hpp"
#include "phystrack/tracker.hpp"

using namespace phystrack;

struct pt_config {
  KeyValues values;
};

struct pt_tracker {
  PipelineConfig config;
  CameraIntrinsics camera;
  Tracker tracker;
  FrameOutput last;
};

struct pt_ledger {
  BandConfig band;
  CountLedger ledger;
};

namespace {

thread_local std::string g_last_error;

static_assert(static_cast<int>(ErrorCode::InvalidArgument) == PT_ERR_INVALID_ARGUMENT);
static_assert(static_cast<int>(ErrorCode::Internal) == PT_ERR_INTERNAL);
static_assert(static_cast<int>(ErrorCode::Alignment) == PT_ERR_ALIGNMENT);

pt_status fail(pt_status s, std::string msg) {
  g_last_error = std::move(msg);
  return s;
}

template <typename F>
pt_status guarded(F&& f) {
  try {
    f();
    return PT_OK;
  } catch (const Error& e) {
    return fail(static_cast<pt_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(PT_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(PT_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(PT_ERR_INTERNAL, "unknown error");
  }
}

void require(const void* p, const char* name) {
  if (p == nullptr) throw Error(ErrorCode::InvalidArgument, std::string(name) + " must not be NULL");
}

const KeyValues& values_of(const pt_config* cfg) {
  static const KeyValues empty;
  return cfg ? cfg->values : empty;
}

std::filesystem::path opt_path(const char* p) { return p ? std::filesystem::path(p) : std::filesystem::path(); }

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void emit(char** table_text, const Table& t) {
  if (table_text) *table_text = dup_string(t.to_text());
}

std::vector<std::string> keys_for(pt_config_kind kind) {
  switch (kind) {
    case PT_CONFIG_PIPELINE: return pipeline_config_keys();
    case PT_CONFIG_SCENE: return scene_config_keys();
    case PT_CONFIG_NOISE: return noise_config_keys();
  }
  throw Error(ErrorCode::InvalidArgument, "unknown config kind");
}

KeyValues resolved(const pt_config* cfg, pt_config_kind kind) {
  switch (kind) {
    case PT_CONFIG_PIPELINE: return to_key_values(pipeline_config_from(values_of(cfg)));
    case PT_CONFIG_SCENE: return to_key_values(scene_config_from(values_of(cfg)));
    case PT_CONFIG_NOISE: return to_key_values(noise_config_from(values_of(cfg)));
  }
  throw Error(ErrorCode::InvalidArgument, "unknown config kind");
}

CameraIntrinsics camera_of(const pt_camera& c) {
  CameraIntrinsics cam;
  cam.fx = c.fx;
  cam.fy = c.fy;
  cam.cx = c.cx;
  cam.cy = c.cy;
  cam.image_width = c.image_width;
  cam.image_height = c.image_height;
  cam.validate();
  return cam;
}

}  // namespace

extern "C" {

const char* pt_version(void) { return "0.1.0"; }

const char* pt_status_string(pt_status status) {
  switch (status) {
    case PT_OK: return "ok";
    case PT_ERR_INVALID_ARGUMENT: return "invalid argument";
    case PT_ERR_DOMAIN: return "domain error";
    case PT_ERR_PARSE: return "parse error";
    case PT_ERR_IO: return "i/o error";
    case PT_ERR_NUMERICAL: return "numerical error";
    case PT_ERR_SEQUENCE: return "sequence error";
    case PT_ERR_EVALUATION: return "evaluation error";
    case PT_ERR_CONFIG: return "configuration error";
    case PT_ERR_ALIGNMENT: return "alignment error";
    case PT_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* pt_last_error(void) { return g_last_error.c_str(); }

void pt_free_string(char* s) { std::free(s); }

pt_status pt_config_create(pt_config** out) {
  return guarded([&] {
    require(out, "out");
    *out = new pt_config();
  });
}

void pt_config_destroy(pt_config* cfg) { delete cfg; }

pt_status pt_config_load(pt_config* cfg, const char* path) {
  return guarded([&] {
    require(cfg, "cfg");
    require(path, "path");
    for (auto& [k, v] : read_key_values(path)) cfg->values[k] = v;
  });
}

pt_status pt_config_set(pt_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    require(cfg, "cfg");
    require(key, "key");
    require(value, "value");
    if (*key == '\0') throw Error(ErrorCode::InvalidArgument, "empty key");
    cfg->values[key] = value;
  });
}

pt_status pt_config_apply_env(pt_config* cfg, pt_config_kind kind) {
  return guarded([&] {
    require(cfg, "cfg");
    const std::vector<std::string> keys = keys_for(kind);
    apply_env_overrides(cfg->values, keys);
  });
}

pt_status pt_config_validate(const pt_config* cfg, pt_config_kind kind) {
  return guarded([&] { resolved(cfg, kind); });
}

pt_status pt_config_get(const pt_config* cfg, pt_config_kind kind, const char* key, char** out) {
  return guarded([&] {
    require(key, "key");
    require(out, "out");
    const KeyValues kv = resolved(cfg, kind);
    auto it = kv.find(key);
    if (it == kv.end()) throw Error(ErrorCode::Config, std::string("unknown key '") + key + "'");
    *out = dup_string(it->second);
  });
}

pt_status pt_tracker_create(const pt_config* cfg, const pt_camera* cam, pt_tracker** out) {
  return guarded([&] {
    require(cam, "cam");
    require(out, "out");
    PipelineConfig config = pipeline_config_from(values_of(cfg));
    const CameraIntrinsics intr = camera_of(*cam);
    *out = new pt_tracker{config, intr, Tracker(config.tracker, intr), {}};
  });
}

void pt_tracker_destroy(pt_tracker* tracker) { delete tracker; }

pt_status pt_tracker_step(pt_tracker* tracker, int frame, const pt_detection* detections, size_t count,
                          size_t* num_outputs) {
  return guarded([&] {
    require(tracker, "tracker");
    if (count > 0) require(detections, "detections");
    std::vector<Detection> dets;
    dets.reserve(count);
    for (size_t i = 0; i < count; ++i) {
      const pt_detection& d = detections[i];
      Detection det;
      det.box = HeadBox{d.x, d.y, d.a, d.h};
      det.confidence = d.confidence;
      if (d.embedding != nullptr && d.embedding_dim > 0) {
        det.embedding = Embedding(std::vector<double>(d.embedding, d.embedding + d.embedding_dim));
      }
      dets.push_back(std::move(det));
    }
    tracker->last = tracker->tracker.step(frame, dets);
    if (num_outputs) *num_outputs = tracker->last.tracks.size();
  });
}

pt_status pt_tracker_output(const pt_tracker* tracker, size_t index, pt_track_output* out) {
  return guarded([&] {
    require(tracker, "tracker");
    require(out, "out");
    if (index >= tracker->last.tracks.size()) throw Error(ErrorCode::InvalidArgument, "output index out of range");
    const TrackOutput& t = tracker->last.tracks[index];
    *out = pt_track_output{t.id, t.box.x, t.box.y, t.box.a, t.box.h, t.status == TrackStatus::Confirmed ? 1 : 0,
                           t.predicted ? 1 : 0};
  });
}

pt_status pt_ledger_create(const pt_config* cfg, pt_ledger** out) {
  return guarded([&] {
    require(out, "out");
    const PipelineConfig config = pipeline_config_from(values_of(cfg));
    *out = new pt_ledger{config.band, {}};
  });
}

void pt_ledger_destroy(pt_ledger* ledger) { delete ledger; }

pt_status pt_ledger_observe(pt_ledger* ledger, const pt_tracker* tracker) {
  return guarded([&] {
    require(ledger, "ledger");
    require(tracker, "tracker");
    if (tracker->last.frame == 0) throw Error(ErrorCode::Sequence, "tracker has not processed a frame");
    ledger->ledger.observe(tracker->last, tracker->camera.image_width, ledger->band);
  });
}

pt_status pt_ledger_counts(const pt_ledger* ledger, int finalize, pt_counts* out) {
  return guarded([&] {
    require(ledger, "ledger");
    require(out, "out");
    if (finalize) {
      const CountSummary s = ledger->ledger.finalize(ledger->band);
      *out = pt_counts{s.left, s.right, s.total};
    } else {
      const int l = ledger->ledger.left();
      const int r = ledger->ledger.right();
      *out = pt_counts{l, r, l > r ? l : r};
    }
  });
}

pt_status pt_count_metrics(const double* predicted, const double* truth, size_t n, pt_count_report* out) {
  return guarded([&] {
    require(out, "out");
    if (n > 0) {
      require(predicted, "predicted");
      require(truth, "truth");
    }
    std::vector<std::pair<double, double>> pairs;
    for (size_t i = 0; i < n; ++i) pairs.emplace_back(predicted[i], truth[i]);
    const CountReport r = counting_metrics(pairs);
    *out = pt_count_report{r.mae, r.rmse, r.mape, r.me, r.n};
  });
}

pt_status pt_simulate(const pt_config* scene, const pt_config* noise, const char* out_dir, int64_t seed,
                      int benchmark, int scripted, int jobs) {
  return guarded([&] {
    require(out_dir, "out_dir");
    SimulateRequest req;
    req.scene = values_of(scene);
    req.noise = values_of(noise);
    if (seed >= 0) req.seed = static_cast<std::uint64_t>(seed);
    req.out = out_dir;
    req.benchmark = benchmark;
    req.scripted = scripted != 0;
    req.jobs = jobs;
    run_simulate(req);
  });
}

pt_status pt_track(const pt_config* cfg, const char* calib, const char* det, const char* emb, const char* seqinfo,
                   const char* out, const char* counts_path, pt_counts* band_counts) {
  return guarded([&] {
    require(calib, "calib");
    require(det, "det");
    require(out, "out");
    TrackRequest req;
    req.config = values_of(cfg);
    req.calib = calib;
    req.det = det;
    req.emb = opt_path(emb);
    req.seqinfo = opt_path(seqinfo);
    req.out = out;
    req.counts = opt_path(counts_path);
    const CountSummary s = run_track(req);
    if (band_counts) *band_counts = pt_counts{s.left, s.right, s.total};
  });
}

pt_status pt_evaluate(const pt_config* cfg, const char* gt, const char* res, int truth_count, const char* truth_path,
                      const char* counts_path, const char* calib, const char* seqinfo, const char* out_dir,
                      char** table_text) {
  return guarded([&] {
    require(gt, "gt");
    require(res, "res");
    EvaluateRequest req;
    req.config = values_of(cfg);
    req.gt = gt;
    req.res = res;
    if (truth_count > 0) req.truth_count = truth_count;
    req.truth = opt_path(truth_path);
    req.counts = opt_path(counts_path);
    req.calib = opt_path(calib);
    req.seqinfo = opt_path(seqinfo);
    req.out = opt_path(out_dir);
    emit(table_text, run_evaluate(req));
  });
}

pt_status pt_sweep(const pt_config* cfg, const char* sequences, const char* out_dir, const double* starts,
                   size_t num_starts, const double* ends, size_t num_ends, int jobs, char** table_text) {
  return guarded([&] {
    require(sequences, "sequences");
    if (num_starts > 0) require(starts, "starts");
    if (num_ends > 0) require(ends, "ends");
    SweepRequest req;
    req.config = values_of(cfg);
    req.sequences = sequences;
    req.out = opt_path(out_dir);
    req.starts.assign(starts, starts + num_starts);
    req.ends.assign(ends, ends + num_ends);
    req.jobs = jobs;
    emit(table_text, run_sweep(req));
  });
}

pt_status pt_benchmark(const pt_config* cfg, const char* sequences, const char* out_dir, const char* models,
                       int jobs) {
  return guarded([&] {
    require(sequences, "sequences");
    require(out_dir, "out_dir");
    require(models, "models");
    BenchmarkRequest req;
    req.config = values_of(cfg);
    req.sequences = sequences;
    req.out = out_dir;
    req.jobs = jobs;
    std::string list = models;
    std::size_t start = 0;
    while (start <= list.size()) {
      const std::size_t comma = list.find(',', start);
      const std::string item = list.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      if (!item.empty()) req.models.push_back(parse_motion_model(item));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    run_benchmark(req);
  });
}

pt_status pt_report(const char* runs_dir, const char* out_dir, char** table_text) {
  return guarded([&] {
    require(runs_dir, "runs_dir");
    emit(table_text, run_report({runs_dir, opt_path(out_dir)}));
  });
}

pt_status pt_rerun(const char* manifest_path) {
  return guarded([&] {
    require(manifest_path, "manifest_path");
    rerun_manifest(manifest_path);
  });
}

}  // extern "C"
