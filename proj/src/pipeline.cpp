#include "phystrack/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "phystrack/errors.hpp"
#include "phystrack/io.hpp"

namespace phystrack {
namespace {

using json = nlohmann::ordered_json;

constexpr const char* kVersion = "0.1.0";
constexpr const char* kCountsFile = "counts.txt";
constexpr const char* kRunCountsFile = "counts.csv";

std::string f2(double v) { return format_fixed(v, 2); }

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create directory " + dir.string() + ": " + ec.message());
}

json kv_json(const KeyValues& kv) {
  json j = json::object();
  for (const auto& [k, v] : kv) j[k] = v;
  return j;
}

KeyValues json_kv(const json& j) {
  KeyValues kv;
  for (auto it = j.begin(); it != j.end(); ++it) kv[it.key()] = it.value().get<std::string>();
  return kv;
}

std::string path_str(const fs::path& p) { return p.generic_string(); }

void write_manifest(const fs::path& dir, const std::string& subcommand, const json& request, const KeyValues& config,
                    std::optional<std::uint64_t> seed, const std::vector<fs::path>& outputs) {
  json m;
  m["tool"] = "phystrack";
  m["version"] = kVersion;
  m["subcommand"] = subcommand;
  m["timestamp"] = manifest_timestamp();
  m["seed"] = seed ? json(*seed) : json(nullptr);
  m["config"] = kv_json(config);
  m["request"] = request;
  json outs = json::array();
  for (const fs::path& p : outputs) outs.push_back(path_str(p));
  m["outputs"] = outs;
  write_text_file(dir / kManifestFile, m.dump(2) + "\n");
}

json read_manifest(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::Io, "missing manifest " + path.string());
  try {
    return json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, path.string() + ": " + e.what());
  }
}

int max_frame(std::span<const MotRecord> records) {
  int m = 0;
  for (const MotRecord& r : records) m = std::max(m, r.frame);
  return m;
}

PipelineConfig resolve(const KeyValues& kv) { return pipeline_config_from(kv); }

void write_table(const fs::path& dir, const std::string& stem, const Table& t, std::vector<fs::path>& outputs) {
  write_text_file(dir / (stem + ".csv"), t.to_csv());
  write_text_file(dir / (stem + ".txt"), t.to_text());
  outputs.push_back(dir / (stem + ".csv"));
  outputs.push_back(dir / (stem + ".txt"));
}

KeyValues counts_kv(const TrackResult& r) {
  return {{"band_left", std::to_string(r.band.left)},   {"band_right", std::to_string(r.band.right)},
          {"band_total", std::to_string(r.band.total)}, {"line_left", std::to_string(r.line.left)},
          {"line_right", std::to_string(r.line.right)}, {"line_total", std::to_string(r.line.total)}};
}

// Confirmed, observed boxes read back from a results file, as tracker output.
std::vector<FrameOutput> outputs_from_results(const BoxSequence& hyp) {
  std::vector<FrameOutput> out(hyp.size());
  for (std::size_t k = 0; k < hyp.size(); ++k) {
    out[k].frame = static_cast<int>(k) + 1;
    for (const LabeledBox& b : hyp[k]) out[k].tracks.push_back({b.id, b.box, TrackStatus::Confirmed, false});
    std::sort(out[k].tracks.begin(), out[k].tracks.end(),
              [](const TrackOutput& a, const TrackOutput& b) { return a.id < b.id; });
  }
  return out;
}

EvaluationRow evaluate_row(const std::string& name, const BoxSequence& gt, const BoxSequence& hyp,
                           const CountSummary& counts, int true_count, double match_iou) {
  EvaluationRow row;
  row.name = name;
  row.mot = evaluate_mot(gt, hyp, match_iou);
  row.counts = counts;
  row.true_count = true_count;
  return row;
}

std::vector<double> parse_double_list(const json& j) {
  std::vector<double> v;
  for (const auto& x : j) v.push_back(x.get<double>());
  return v;
}

struct SequenceRun {
  LoadedSequence seq;
  TrackResult result;
};

std::vector<SequenceRun> track_all(const std::vector<fs::path>& dirs, const PipelineConfig& config, int jobs) {
  std::vector<SequenceRun> runs(dirs.size());
  parallel_for(dirs.size(), jobs, [&](std::size_t i) {
    runs[i].seq = load_sequence_dir(dirs[i], config.tracker.association.use_appearance);
    PipelineConfig cfg = config;
    cfg.tracker.fps = runs[i].seq.fps;
    runs[i].result = track_detections(runs[i].seq.detections, runs[i].seq.camera, cfg);
  });
  return runs;
}

}  // namespace

std::string manifest_timestamp() {
  std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  if (const char* sde = std::getenv("SOURCE_DATE_EPOCH")) {
    try {
      t = static_cast<std::time_t>(std::stoll(sde));
    } catch (const std::exception&) {
      throw Error(ErrorCode::Config, "SOURCE_DATE_EPOCH is not an integer");
    }
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

SequenceInfo read_seqinfo(const fs::path& path) {
  const KeyValues kv = read_key_values(path);
  SequenceInfo info;
  for (const auto& [k, v] : kv) {
    if (k == "fps") {
      info.fps = parse_double(v, "fps");
    } else if (k == "frames") {
      info.num_frames = parse_int(v, "frames");
    } else {
      throw Error(ErrorCode::Config, path.string() + ": unknown seqinfo key '" + k + "'");
    }
  }
  if (!(info.fps > 0.0) || info.num_frames < 0) throw Error(ErrorCode::Config, path.string() + ": invalid fps/frames");
  return info;
}

void write_seqinfo(const fs::path& path, const SequenceInfo& info) {
  write_key_values(path, {{"fps", format_shortest(info.fps)}, {"frames", std::to_string(info.num_frames)}});
}

CountTruth read_truth(const fs::path& path) {
  const KeyValues kv = read_key_values(path);
  CountTruth t;
  auto get = [&](const char* key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw Error(ErrorCode::Config, path.string() + ": missing '" + key + "'");
    return parse_int(it->second, key);
  };
  t.left = get("left");
  t.right = get("right");
  if (auto it = kv.find("total"); it != kv.end() && parse_int(it->second, "total") != t.total()) {
    throw Error(ErrorCode::Config, path.string() + ": total must equal max(left, right)");
  }
  return t;
}

void write_truth(const fs::path& path, const CountTruth& truth) {
  write_key_values(path, {{"left", std::to_string(truth.left)},
                          {"right", std::to_string(truth.right)},
                          {"total", std::to_string(truth.total())}});
}

void write_sequence_dir(const fs::path& dir, const SimulatedSequence& seq) {
  ensure_dir(dir);
  write_mot(dir / kGtFile, records_from_boxes(seq.ground_truth));
  write_mot(dir / kDetFile, records_from_detections(seq.detections));
  write_embeddings(dir / kEmbFile, seq.detections);
  write_calibration(dir / kCalibFile, seq.camera);
  write_seqinfo(dir / kSeqInfoFile, {seq.fps, seq.num_frames()});
  write_truth(dir / kTruthFile, seq.truth);
}

LoadedSequence load_sequence_dir(const fs::path& dir, bool with_embeddings) {
  LoadedSequence s;
  s.name = dir.filename().string();
  if (s.name.empty()) s.name = dir.parent_path().filename().string();
  s.camera = read_calibration(dir / kCalibFile);
  const std::vector<MotRecord> det = read_mot(dir / kDetFile);
  std::vector<MotRecord> gt;
  const bool has_gt = fs::exists(dir / kGtFile);
  if (has_gt) gt = read_mot(dir / kGtFile);
  if (fs::exists(dir / kSeqInfoFile)) {
    const SequenceInfo info = read_seqinfo(dir / kSeqInfoFile);
    s.fps = info.fps;
    s.num_frames = info.num_frames;
  } else {
    s.num_frames = std::max(max_frame(det), max_frame(gt));
  }
  s.detections = to_detections(det, s.num_frames);
  if (with_embeddings) {
    if (!fs::exists(dir / kEmbFile)) {
      throw Error(ErrorCode::Io, "missing " + (dir / kEmbFile).string() + " (set use_appearance=false to run without)");
    }
    attach_embeddings(s.detections, read_embeddings(dir / kEmbFile));
  }
  if (has_gt) s.ground_truth = to_box_sequence(gt, s.num_frames);
  if (fs::exists(dir / kTruthFile)) s.truth = read_truth(dir / kTruthFile);
  return s;
}

std::vector<fs::path> list_sequence_dirs(const fs::path& root) {
  if (!fs::is_directory(root)) throw Error(ErrorCode::InvalidArgument, "not a directory: " + root.string());
  if (fs::exists(root / kDetFile)) return {root};
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory() && fs::exists(entry.path() / kDetFile)) dirs.push_back(entry.path());
  }
  if (dirs.empty()) throw Error(ErrorCode::InvalidArgument, "no sequences under " + root.string());
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

TrackResult track_detections(std::span<const std::vector<Detection>> detections, const CameraIntrinsics& cam,
                             const PipelineConfig& config) {
  PipelineConfig cfg = config;
  cfg.validate();
  TrackResult r;
  r.outputs = run_sequence(detections, cfg.tracker, cam);
  r.band = count_band(r.outputs, cam.image_width, cfg.band);
  r.line = count_lines(r.outputs, cfg.line_fraction, cam.image_width);
  return r;
}

std::string Table::to_csv() const {
  std::string s;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) s += ',';
      s += cells[i];
    }
    s += '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return s;
}

std::string Table::to_text() const {
  std::vector<std::size_t> width(header.size(), 0);
  for (std::size_t i = 0; i < header.size(); ++i) width[i] = header[i].size();
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size() && i < width.size(); ++i) width[i] = std::max(width[i], r[i].size());
  }
  std::string s;
  auto line = [&](const std::vector<std::string>& cells) {
    std::string l;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) l += "  ";
      // first column left-aligned, numbers right-aligned
      const std::size_t pad = width[i] - std::min(width[i], cells[i].size());
      if (i == 0) {
        l += cells[i] + std::string(pad, ' ');
      } else {
        l += std::string(pad, ' ') + cells[i];
      }
    }
    while (!l.empty() && l.back() == ' ') l.pop_back();
    s += l + '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return s;
}

Table evaluation_table(std::span<const EvaluationRow> rows) {
  Table t;
  t.header = {"Video", "MOTA", "MOTP",      "IDF1",   "IDP", "IDR", "IDSW", "Matches", "FP", "Misses", "FAF",
              "Precision", "Recall", "MT", "PT", "ML",  "LC",  "RC",   "TC",      "TV", "MAPE"};
  std::vector<double> sum(t.header.size() - 1, 0.0);
  for (const EvaluationRow& r : rows) {
    const MotReport& m = r.mot;
    const double mape = r.true_count > 0 ? std::abs(r.counts.total - r.true_count) * 100.0 / r.true_count : 0.0;
    const std::vector<double> v = {m.mota,      m.motp,   m.idf1, m.idp,  m.idr,  double(m.idsw), double(m.matches),
                                   double(m.fp), double(m.fn), m.faf, m.precision, m.recall, double(m.mt),
                                   double(m.pt), double(m.ml), double(r.counts.left), double(r.counts.right),
                                   double(r.counts.total), double(r.true_count), mape};
    std::vector<std::string> cells = {r.name};
    for (std::size_t i = 0; i < v.size(); ++i) {
      sum[i] += v[i];
      // integer-valued columns
      const bool integral = (i >= 5 && i <= 8) || (i >= 12 && i <= 18);
      cells.push_back(integral ? std::to_string(static_cast<long>(v[i])) : f2(v[i]));
    }
    t.rows.push_back(std::move(cells));
  }
  if (!rows.empty()) {
    std::vector<std::string> avg = {"Avg"};
    for (double s : sum) avg.push_back(f2(s / static_cast<double>(rows.size())));
    t.rows.push_back(std::move(avg));
  }
  return t;
}

Table count_report_table(const std::string& label_header,
                         std::span<const std::pair<std::string, CountReport>> rows) {
  Table t;
  t.header = {label_header, "MAE", "RMSE", "MAPE(%)", "ME"};
  for (const auto& [label, r] : rows) t.rows.push_back({label, f2(r.mae), f2(r.rmse), f2(r.mape), f2(r.me)});
  return t;
}

std::vector<double> default_sweep_starts() { return {0.05, 0.10, 0.15, 0.20, 0.30}; }
std::vector<double> default_sweep_ends() { return {0.15, 0.20, 0.25, 0.30, 0.35, 0.40}; }

std::vector<SweepRow> sweep_bands(std::span<const std::vector<FrameOutput>> outputs, std::span<const int> true_counts,
                                  double image_width, const BandConfig& base, std::span<const double> starts,
                                  std::span<const double> ends) {
  if (outputs.empty()) throw Error(ErrorCode::InvalidArgument, "sweep needs at least one sequence");
  if (outputs.size() != true_counts.size()) throw Error(ErrorCode::InvalidArgument, "one true count per sequence");
  std::vector<std::pair<double, double>> grid;
  for (double s : starts) {
    for (double e : ends) {
      if (s < e) grid.emplace_back(s, e);
    }
    grid.emplace_back(s, s);
  }
  std::vector<SweepRow> rows;
  for (auto [s, e] : grid) {
    BandConfig band = base;
    band.start = s;
    band.end = e;
    band.validate(true);
    std::vector<std::pair<double, double>> pairs;
    for (std::size_t i = 0; i < outputs.size(); ++i) {
      pairs.emplace_back(count_band(outputs[i], image_width, band).total, true_counts[i]);
    }
    rows.push_back({s, e, counting_metrics(pairs)});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    if (a.report.mae != b.report.mae) return a.report.mae < b.report.mae;
    return a.report.rmse < b.report.rmse;
  });
  return rows;
}

Table sweep_table(std::span<const SweepRow> rows) {
  Table t;
  t.header = {"Start", "End", "MAE", "RMSE", "MAPE(%)", "ME"};
  for (const SweepRow& r : rows) {
    t.rows.push_back({f2(r.start), f2(r.end), f2(r.report.mae), f2(r.report.rmse), f2(r.report.mape), f2(r.report.me)});
  }
  return t;
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs < 1) throw Error(ErrorCode::InvalidArgument, "jobs must be >= 1");
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// ---------------------------------------------------------------------------
// simulate

namespace {

json to_json(const SimulateRequest& r) {
  return {{"scene", kv_json(r.scene)}, {"noise", kv_json(r.noise)},   {"seed", r.seed ? json(*r.seed) : json(nullptr)},
          {"out", path_str(r.out)},    {"benchmark", r.benchmark},    {"scripted", r.scripted},
          {"jobs", r.jobs}};
}

SimulateRequest simulate_from_json(const json& j) {
  SimulateRequest r;
  r.scene = json_kv(j.at("scene"));
  r.noise = json_kv(j.at("noise"));
  if (!j.at("seed").is_null()) r.seed = j.at("seed").get<std::uint64_t>();
  r.out = j.at("out").get<std::string>();
  r.benchmark = j.at("benchmark").get<int>();
  r.scripted = j.at("scripted").get<bool>();
  r.jobs = j.value("jobs", 1);
  return r;
}

std::string seq_dir_name(int i) {
  std::string n = std::to_string(i + 1);
  if (n.size() < 2) n.insert(0, "0");
  return "seq-" + n;
}

}  // namespace

void run_simulate(const SimulateRequest& req) {
  if (req.out.empty()) throw Error(ErrorCode::InvalidArgument, "simulate needs an output directory");
  if (req.benchmark < 0) throw Error(ErrorCode::InvalidArgument, "benchmark count must be >= 0");
  if (req.benchmark > 0 && req.scripted) throw Error(ErrorCode::InvalidArgument, "choose benchmark or scripted, not both");
  SceneConfig scene = scene_config_from(req.scene);
  if (req.seed) scene.seed = *req.seed;
  const NoiseConfig noise = noise_config_from(req.noise);
  ensure_dir(req.out);
  std::vector<fs::path> outputs;

  if (req.scripted) {
    for (const Scenario& sc : scripted_scenarios()) {
      const fs::path dir = req.out / sc.name;
      write_sequence_dir(dir, sc.sequence);
      write_key_values(dir / "scenario.txt", {{"name", sc.name},
                                              {"description", sc.description},
                                              {"expected_count", std::to_string(sc.expected_count)},
                                              {"expected_idsw", std::to_string(sc.expected_idsw)},
                                              {"line_fraction", format_shortest(sc.line_fraction)},
                                              {"expected_line_count", std::to_string(sc.expected_line_count)}});
      outputs.push_back(dir);
    }
  } else if (req.benchmark > 0) {
    const std::vector<SceneConfig> scenes = benchmark_scenes(req.seed.value_or(2024), req.benchmark);
    parallel_for(scenes.size(), req.jobs, [&](std::size_t i) {
      SceneConfig s = scene;
      s.seed = scenes[i].seed;
      s.num_pedestrians = scenes[i].num_pedestrians;
      const fs::path dir = req.out / seq_dir_name(static_cast<int>(i));
      write_sequence_dir(dir, generate(s, noise));
      write_key_values(dir / "scene.txt", to_key_values(s));
      write_key_values(dir / "noise.txt", to_key_values(noise));
    });
    for (std::size_t i = 0; i < scenes.size(); ++i) outputs.push_back(req.out / seq_dir_name(static_cast<int>(i)));
  } else {
    write_sequence_dir(req.out, generate(scene, noise));
    write_key_values(req.out / "scene.txt", to_key_values(scene));
    write_key_values(req.out / "noise.txt", to_key_values(noise));
    for (const char* f : {kGtFile, kDetFile, kEmbFile, kCalibFile, kSeqInfoFile, kTruthFile}) {
      outputs.push_back(req.out / f);
    }
  }
  KeyValues snapshot;
  for (const auto& [k, v] : to_key_values(scene)) snapshot["scene." + k] = v;
  for (const auto& [k, v] : to_key_values(noise)) snapshot["noise." + k] = v;
  write_manifest(req.out, "simulate", to_json(req), snapshot, scene.seed, outputs);
}

// ---------------------------------------------------------------------------
// track

namespace {

json to_json(const TrackRequest& r) {
  return {{"calib", path_str(r.calib)},     {"det", path_str(r.det)}, {"emb", path_str(r.emb)},
          {"seqinfo", path_str(r.seqinfo)}, {"out", path_str(r.out)}, {"counts", path_str(r.counts)},
          {"config", kv_json(r.config)}};
}

TrackRequest track_from_json(const json& j) {
  TrackRequest r;
  r.calib = j.at("calib").get<std::string>();
  r.det = j.at("det").get<std::string>();
  r.emb = j.at("emb").get<std::string>();
  r.seqinfo = j.at("seqinfo").get<std::string>();
  r.out = j.at("out").get<std::string>();
  r.counts = j.at("counts").get<std::string>();
  r.config = json_kv(j.at("config"));
  return r;
}

fs::path parent_or_cwd(const fs::path& p) { return p.has_parent_path() ? p.parent_path() : fs::path("."); }

}  // namespace

CountSummary run_track(const TrackRequest& req) {
  if (req.det.empty() || req.calib.empty() || req.out.empty()) {
    throw Error(ErrorCode::InvalidArgument, "track needs --det, --cam and --out");
  }
  PipelineConfig cfg = resolve(req.config);
  const CameraIntrinsics cam = read_calibration(req.calib);
  const std::vector<MotRecord> det = read_mot(req.det);
  int frames = max_frame(det);
  if (!req.seqinfo.empty()) {
    const SequenceInfo info = read_seqinfo(req.seqinfo);
    cfg.tracker.fps = info.fps;
    if (info.num_frames < frames) {
      throw Error(ErrorCode::Alignment, "detections extend past the " + std::to_string(info.num_frames) +
                                            " frames declared in " + req.seqinfo.string());
    }
    frames = info.num_frames;
  }
  std::vector<std::vector<Detection>> dets = to_detections(det, frames);
  if (cfg.tracker.association.use_appearance) {
    if (req.emb.empty()) throw Error(ErrorCode::InvalidArgument, "--emb is required unless appearance is disabled");
    attach_embeddings(dets, read_embeddings(req.emb));
  }
  const TrackResult result = track_detections(dets, cam, cfg);

  const fs::path counts = req.counts.empty() ? parent_or_cwd(req.out) / kCountsFile : req.counts;
  if (!req.out.parent_path().empty()) ensure_dir(req.out.parent_path());
  write_mot(req.out, records_from_outputs(result.outputs));
  write_key_values(counts, counts_kv(result));
  write_manifest(parent_or_cwd(req.out), "track", to_json(req), to_key_values(cfg), std::nullopt, {req.out, counts});
  return result.band;
}

// ---------------------------------------------------------------------------
// evaluate

namespace {

json to_json(const EvaluateRequest& r) {
  return {{"gt", path_str(r.gt)},
          {"res", path_str(r.res)},
          {"truth_count", r.truth_count ? json(*r.truth_count) : json(nullptr)},
          {"truth", path_str(r.truth)},
          {"counts", path_str(r.counts)},
          {"calib", path_str(r.calib)},
          {"seqinfo", path_str(r.seqinfo)},
          {"out", path_str(r.out)},
          {"config", kv_json(r.config)}};
}

EvaluateRequest evaluate_from_json(const json& j) {
  EvaluateRequest r;
  r.gt = j.at("gt").get<std::string>();
  r.res = j.at("res").get<std::string>();
  if (!j.at("truth_count").is_null()) r.truth_count = j.at("truth_count").get<int>();
  r.truth = j.at("truth").get<std::string>();
  r.counts = j.at("counts").get<std::string>();
  r.calib = j.at("calib").get<std::string>();
  r.seqinfo = j.at("seqinfo").get<std::string>();
  r.out = j.at("out").get<std::string>();
  r.config = json_kv(j.at("config"));
  return r;
}

}  // namespace

Table run_evaluate(const EvaluateRequest& req) {
  if (req.gt.empty() || req.res.empty()) throw Error(ErrorCode::InvalidArgument, "evaluate needs --gt and --res");
  const PipelineConfig cfg = resolve(req.config);
  const std::vector<MotRecord> gt = read_mot(req.gt);
  const std::vector<MotRecord> res = read_mot(req.res);
  int frames = max_frame(gt);
  if (!req.seqinfo.empty()) frames = read_seqinfo(req.seqinfo).num_frames;
  if (max_frame(res) > frames) {
    throw Error(ErrorCode::Alignment, "results reach frame " + std::to_string(max_frame(res)) +
                                          " but ground truth covers " + std::to_string(frames) + " frames");
  }
  const BoxSequence gt_seq = to_box_sequence(gt, frames);
  const BoxSequence hyp = to_box_sequence(res, frames);

  int truth = 0;
  if (req.truth_count) {
    truth = *req.truth_count;
  } else if (!req.truth.empty()) {
    truth = read_truth(req.truth).total();
  } else {
    throw Error(ErrorCode::InvalidArgument, "evaluate needs --truth-count or --truth");
  }
  if (truth <= 0) throw Error(ErrorCode::Evaluation, "true count must be positive");

  CountSummary counts;
  if (!req.counts.empty()) {
    const KeyValues kv = read_key_values(req.counts);
    auto get = [&](const char* k) {
      auto it = kv.find(k);
      if (it == kv.end()) throw Error(ErrorCode::Config, req.counts.string() + ": missing '" + k + "'");
      return parse_int(it->second, k);
    };
    counts = {get("band_left"), get("band_right"), get("band_total")};
  } else if (!req.calib.empty()) {
    const CameraIntrinsics cam = read_calibration(req.calib);
    counts = count_band(outputs_from_results(hyp), cam.image_width, cfg.band);
  } else {
    throw Error(ErrorCode::InvalidArgument, "evaluate needs --counts (from track) or --cam to count the results");
  }

  const std::string name = parent_or_cwd(req.res).filename().string();
  const EvaluationRow row = evaluate_row(name.empty() ? "sequence" : name, gt_seq, hyp, counts, truth, cfg.match_iou);
  const Table table = evaluation_table(std::span<const EvaluationRow>(&row, 1));
  if (!req.out.empty()) {
    ensure_dir(req.out);
    std::vector<fs::path> outputs;
    write_table(req.out, "evaluation", table, outputs);
    write_manifest(req.out, "evaluate", to_json(req), to_key_values(cfg), std::nullopt, outputs);
  }
  return table;
}

// ---------------------------------------------------------------------------
// sweep

namespace {

json to_json(const SweepRequest& r) {
  return {{"sequences", path_str(r.sequences)}, {"out", path_str(r.out)}, {"config", kv_json(r.config)},
          {"starts", r.starts},                 {"ends", r.ends},         {"jobs", r.jobs}};
}

SweepRequest sweep_from_json(const json& j) {
  SweepRequest r;
  r.sequences = j.at("sequences").get<std::string>();
  r.out = j.at("out").get<std::string>();
  r.config = json_kv(j.at("config"));
  r.starts = parse_double_list(j.at("starts"));
  r.ends = parse_double_list(j.at("ends"));
  r.jobs = j.value("jobs", 1);
  return r;
}

std::vector<int> true_counts_of(const std::vector<SequenceRun>& runs) {
  std::vector<int> t;
  for (const SequenceRun& r : runs) {
    if (!r.seq.truth) throw Error(ErrorCode::Evaluation, "sequence " + r.seq.name + " has no truth.txt");
    t.push_back(r.seq.truth->total());
  }
  return t;
}

}  // namespace

Table run_sweep(const SweepRequest& req) {
  const PipelineConfig cfg = resolve(req.config);
  const std::vector<fs::path> dirs = list_sequence_dirs(req.sequences);
  const std::vector<SequenceRun> runs = track_all(dirs, cfg, req.jobs);
  const std::vector<int> truth = true_counts_of(runs);
  std::vector<std::vector<FrameOutput>> outputs;
  double width = 0.0;
  for (const SequenceRun& r : runs) {
    if (width != 0.0 && r.seq.camera.image_width != width) {
      throw Error(ErrorCode::InvalidArgument, "sweep sequences must share an image width");
    }
    width = r.seq.camera.image_width;
    outputs.push_back(r.result.outputs);
  }
  const std::vector<double> starts = req.starts.empty() ? default_sweep_starts() : req.starts;
  const std::vector<double> ends = req.ends.empty() ? default_sweep_ends() : req.ends;
  const Table table = sweep_table(sweep_bands(outputs, truth, width, cfg.band, starts, ends));
  if (!req.out.empty()) {
    ensure_dir(req.out);
    std::vector<fs::path> written;
    write_table(req.out, "sweep", table, written);
    write_manifest(req.out, "sweep", to_json(req), to_key_values(cfg), std::nullopt, written);
  }
  return table;
}

// ---------------------------------------------------------------------------
// benchmark / report

namespace {

json to_json(const BenchmarkRequest& r) {
  json models = json::array();
  for (MotionModelKind m : r.models) models.push_back(std::string(to_string(m)));
  return {{"sequences", path_str(r.sequences)}, {"out", path_str(r.out)}, {"models", models},
          {"config", kv_json(r.config)},        {"jobs", r.jobs}};
}

BenchmarkRequest benchmark_from_json(const json& j) {
  BenchmarkRequest r;
  r.sequences = j.at("sequences").get<std::string>();
  r.out = j.at("out").get<std::string>();
  for (const auto& m : j.at("models")) r.models.push_back(parse_motion_model(m.get<std::string>()));
  r.config = json_kv(j.at("config"));
  r.jobs = j.value("jobs", 1);
  return r;
}

json to_json(const ReportRequest& r) { return {{"runs", path_str(r.runs)}, {"out", path_str(r.out)}}; }

struct RunCounts {
  std::string model;
  std::vector<std::pair<double, double>> band;
  std::vector<std::pair<double, double>> line;
};

RunCounts read_run(const fs::path& dir) {
  const json manifest = read_manifest(dir / kManifestFile);
  RunCounts rc;
  try {
    rc.model = manifest.at("config").at("model").get<std::string>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::Parse, (dir / kManifestFile).string() + ": manifest has no config.model");
  }
  std::istringstream in(read_text_file(dir / kRunCountsFile));
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    if (++number == 1 || line.empty()) continue;  // header
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
    if (cells.size() != 4) {
      throw Error(ErrorCode::Parse, (dir / kRunCountsFile).string() + ":" + std::to_string(number) + ": expected 4 fields");
    }
    const double truth = parse_int(cells[3], "truth");
    rc.band.emplace_back(parse_int(cells[1], "band"), truth);
    rc.line.emplace_back(parse_int(cells[2], "line"), truth);
  }
  if (rc.band.empty()) throw Error(ErrorCode::Evaluation, (dir / kRunCountsFile).string() + " has no rows");
  return rc;
}

}  // namespace

void run_benchmark(const BenchmarkRequest& req) {
  if (req.models.empty()) throw Error(ErrorCode::InvalidArgument, "benchmark needs at least one model");
  const PipelineConfig base = resolve(req.config);
  const std::vector<fs::path> dirs = list_sequence_dirs(req.sequences);
  for (MotionModelKind model : req.models) {
    PipelineConfig cfg = base;
    cfg.tracker.model = model;
    const std::vector<SequenceRun> runs = track_all(dirs, cfg, req.jobs);
    const std::vector<int> truth = true_counts_of(runs);

    std::vector<EvaluationRow> rows(runs.size());
    parallel_for(runs.size(), req.jobs, [&](std::size_t i) {
      const SequenceRun& r = runs[i];
      if (!r.seq.ground_truth) throw Error(ErrorCode::Evaluation, "sequence " + r.seq.name + " has no gt.txt");
      const BoxSequence hyp = hypotheses_from_outputs(r.result.outputs, r.seq.num_frames);
      rows[i] = evaluate_row(r.seq.name, *r.seq.ground_truth, hyp, r.result.band, truth[i], cfg.match_iou);
    });

    const fs::path dir = req.out / std::string(to_string(model));
    ensure_dir(dir);
    std::vector<fs::path> outputs;
    std::string counts = "sequence,band,line,truth\n";
    for (std::size_t i = 0; i < runs.size(); ++i) {
      counts += runs[i].seq.name + ',' + std::to_string(runs[i].result.band.total) + ',' +
                std::to_string(runs[i].result.line.total) + ',' + std::to_string(truth[i]) + '\n';
    }
    write_text_file(dir / kRunCountsFile, counts);
    outputs.push_back(dir / kRunCountsFile);
    write_table(dir, "evaluation", evaluation_table(rows), outputs);
    BenchmarkRequest single = req;
    single.models = {model};
    const json request = to_json(single);
    write_manifest(dir, "benchmark", request, to_key_values(cfg), std::nullopt, outputs);
  }
}

Table run_report(const ReportRequest& req) {
  if (!fs::is_directory(req.runs)) throw Error(ErrorCode::InvalidArgument, "not a directory: " + req.runs.string());
  std::vector<fs::path> dirs;
  if (fs::exists(req.runs / kRunCountsFile)) {
    dirs.push_back(req.runs);
  } else {
    for (const auto& e : fs::directory_iterator(req.runs)) {
      if (e.is_directory() && fs::exists(e.path() / kRunCountsFile)) dirs.push_back(e.path());
    }
    std::sort(dirs.begin(), dirs.end());
  }
  if (dirs.empty()) throw Error(ErrorCode::InvalidArgument, "no runs under " + req.runs.string());

  std::vector<std::pair<std::string, CountReport>> models, methods;
  for (const fs::path& d : dirs) {
    const RunCounts rc = read_run(d);
    const CountReport band = counting_metrics(rc.band);
    models.emplace_back(rc.model, band);
    methods.emplace_back(rc.model + " line", counting_metrics(rc.line));
    methods.emplace_back(rc.model + " band", band);
  }
  const Table table = count_report_table("Model", models);
  const fs::path out = req.out.empty() ? req.runs : req.out;
  ensure_dir(out);
  std::vector<fs::path> outputs;
  write_table(out, "report", table, outputs);
  write_table(out, "methods", count_report_table("Method", methods), outputs);
  // A report over a single run directory must not replace that run's manifest.
  const fs::path manifest_dir = out == dirs.front() ? out / "report" : out;
  ensure_dir(manifest_dir);
  write_manifest(manifest_dir, "report", to_json(req), {}, std::nullopt, outputs);
  return table;
}

void rerun_manifest(const fs::path& path) {
  const json m = read_manifest(path);
  std::string sub;
  json request;
  try {
    sub = m.at("subcommand").get<std::string>();
    request = m.at("request");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, path.string() + ": " + e.what());
  }
  try {
    if (sub == "simulate") {
      run_simulate(simulate_from_json(request));
    } else if (sub == "track") {
      run_track(track_from_json(request));
    } else if (sub == "evaluate") {
      run_evaluate(evaluate_from_json(request));
    } else if (sub == "sweep") {
      run_sweep(sweep_from_json(request));
    } else if (sub == "benchmark") {
      run_benchmark(benchmark_from_json(request));
    } else if (sub == "report") {
      run_report({request.at("runs").get<std::string>(), request.at("out").get<std::string>()});
    } else {
      throw Error(ErrorCode::Parse, path.string() + ": unknown subcommand '" + sub + "'");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, path.string() + ": malformed request: " + e.what());
  }
}

}  // namespace phystrack
