// phystrack command-line tool. Everything goes through the C API.
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "phystrack/phystrack.h"

namespace {

struct RunError {
  pt_status status;
  std::string message;
};

void check(pt_status s) {
  if (s != PT_OK) throw RunError{s, pt_last_error()};
}

struct ConfigDeleter {
  void operator()(pt_config* c) const { pt_config_destroy(c); }
};
using ConfigPtr = std::unique_ptr<pt_config, ConfigDeleter>;

ConfigPtr make_config() {
  pt_config* c = nullptr;
  check(pt_config_create(&c));
  return ConfigPtr(c);
}

const char* opt(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

void print_and_free(char* text) {
  if (text) {
    std::fputs(text, stdout);
    pt_free_string(text);
  }
}

// Shared pipeline options: file, then environment, then flags, then --set.
struct PipelineOptions {
  std::string config_file;
  std::string model;
  std::optional<double> band_start, band_end;
  std::optional<int> persistence;
  bool no_appearance = false;
  std::vector<std::string> sets;

  void add(CLI::App* app, bool band_flags) {
    app->add_option("--config", config_file, "key=value tracker/counting config")->check(CLI::ExistingFile);
    app->add_option("--model", model, "motion model")
        ->transform(CLI::IsMember({"cv8d", "ca12d", "phys3d"}, CLI::ignore_case));
    if (band_flags) {
      app->add_option("--band-start", band_start, "band start, fraction of width");
      app->add_option("--band-end", band_end, "band end, fraction of width");
      app->add_option("--persistence", persistence, "consecutive in-band frames required");
    }
    app->add_flag("--no-appearance", no_appearance, "motion-only association; no embeddings needed");
    app->add_option("--set", sets, "override a config key (key=value), repeatable");
  }

  ConfigPtr build() const {
    ConfigPtr cfg = make_config();
    if (!config_file.empty()) check(pt_config_load(cfg.get(), config_file.c_str()));
    check(pt_config_apply_env(cfg.get(), PT_CONFIG_PIPELINE));
    if (!model.empty()) check(pt_config_set(cfg.get(), "model", model.c_str()));
    if (band_start) check(pt_config_set(cfg.get(), "band_start", std::to_string(*band_start).c_str()));
    if (band_end) check(pt_config_set(cfg.get(), "band_end", std::to_string(*band_end).c_str()));
    if (persistence) check(pt_config_set(cfg.get(), "persistence", std::to_string(*persistence).c_str()));
    if (no_appearance) check(pt_config_set(cfg.get(), "use_appearance", "false"));
    for (const std::string& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos || eq == 0) throw CLI::ValidationError("--set", "expected key=value, got '" + s + "'");
      check(pt_config_set(cfg.get(), s.substr(0, eq).c_str(), s.substr(eq + 1).c_str()));
    }
    check(pt_config_validate(cfg.get(), PT_CONFIG_PIPELINE));
    return cfg;
  }
};

// "start:{0.05,0.1}" or "end:0.15,0.2"; "{a..b}" selects the default values in [a, b].
void parse_grid(const std::vector<std::string>& tokens, std::vector<double>& starts, std::vector<double>& ends) {
  const std::vector<double> default_starts = {0.05, 0.10, 0.15, 0.20, 0.30};
  const std::vector<double> default_ends = {0.15, 0.20, 0.25, 0.30, 0.35, 0.40};
  for (const std::string& tok : tokens) {
    const auto colon = tok.find(':');
    if (colon == std::string::npos) throw CLI::ValidationError("--grid", "expected start:... or end:...");
    const std::string key = tok.substr(0, colon);
    std::string body = tok.substr(colon + 1);
    if (!body.empty() && body.front() == '{') body.erase(0, 1);
    if (!body.empty() && body.back() == '}') body.pop_back();
    std::vector<double>* dst = key == "start" ? &starts : key == "end" ? &ends : nullptr;
    if (!dst) throw CLI::ValidationError("--grid", "unknown grid key '" + key + "'");
    dst->clear();
    if (const auto dots = body.find(".."); dots != std::string::npos) {
      const double lo = std::stod(body.substr(0, dots));
      const double hi = std::stod(body.substr(dots + 2));
      for (double v : key == "start" ? default_starts : default_ends) {
        if (v >= lo - 1e-12 && v <= hi + 1e-12) dst->push_back(v);
      }
    } else {
      std::stringstream ss(body);
      for (std::string item; std::getline(ss, item, ',');) dst->push_back(std::stod(item));
    }
    if (dst->empty()) throw CLI::ValidationError("--grid", "empty value list for '" + key + "'");
  }
}

constexpr int kUsageError = 2;

// --help and --version exit 0; every other parse or validation problem is a usage error.
int usage_exit(const CLI::App& app, const CLI::Error& e) {
  const int code = app.exit(e);
  return code == 0 ? 0 : kUsageError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"phystrack: multi-object head tracking and platform counting"};
  app.require_subcommand(1);
  app.set_version_flag("--version", pt_version());

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate a seeded synthetic sequence");
  std::string scene_file, noise_file, sim_out;
  std::optional<std::int64_t> seed;
  int benchmark = 0, jobs = 1;
  bool scripted = false, zero_noise = false;
  sim->add_option("--scene", scene_file, "scene config (key=value)")->check(CLI::ExistingFile);
  sim->add_option("--noise", noise_file, "noise config (key=value)")->check(CLI::ExistingFile);
  sim->add_option("--out", sim_out, "output directory")->required();
  sim->add_option("--seed", seed, "override the scene seed")->check(CLI::NonNegativeNumber);
  sim->add_option("--benchmark", benchmark, "write N benchmark sequences (10 to 60 pedestrians)")
      ->check(CLI::PositiveNumber);
  sim->add_flag("--scripted", scripted, "write the scripted scenarios");
  sim->add_flag("--zero-noise", zero_noise, "disable all detection noise");
  sim->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);

  // track
  auto* trk = app.add_subcommand("track", "track detections and count");
  PipelineOptions trk_opts;
  trk_opts.add(trk, true);
  std::string cam, det, emb, seqinfo, res_out, counts_out;
  trk->add_option("--cam", cam, "calibration file")->required()->check(CLI::ExistingFile);
  trk->add_option("--det", det, "detections (MOT format)")->required()->check(CLI::ExistingFile);
  trk->add_option("--emb", emb, "embeddings file")->check(CLI::ExistingFile);
  trk->add_option("--seqinfo", seqinfo, "fps and frame count")->check(CLI::ExistingFile);
  trk->add_option("--out", res_out, "results file (MOT format)")->required();
  trk->add_option("--counts", counts_out, "counts summary (default: counts.txt next to --out)");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "CLEAR-MOT, identity and counting metrics");
  PipelineOptions ev_opts;
  ev_opts.add(ev, true);
  std::string gt, res, truth_file, ev_counts, ev_cam, ev_seqinfo, ev_out;
  std::optional<int> truth_count;
  bool ev_csv = false;
  ev->add_option("--gt", gt, "ground truth (MOT format)")->required()->check(CLI::ExistingFile);
  ev->add_option("--res", res, "tracker results (MOT format)")->required()->check(CLI::ExistingFile);
  ev->add_option("--truth-count", truth_count, "true person count")->check(CLI::PositiveNumber);
  ev->add_option("--truth", truth_file, "truth.txt with left/right counts")->check(CLI::ExistingFile);
  ev->add_option("--counts", ev_counts, "counts.txt written by track")->check(CLI::ExistingFile);
  ev->add_option("--cam", ev_cam, "calibration, to count bands from --res")->check(CLI::ExistingFile);
  ev->add_option("--seqinfo", ev_seqinfo, "frame count")->check(CLI::ExistingFile);
  ev->add_option("--out", ev_out, "directory for evaluation.csv/.txt");
  ev->add_flag("--csv", ev_csv, "print CSV instead of aligned text");

  // sweep
  auto* sw = app.add_subcommand("sweep", "band ablation over a grid of start/end values");
  PipelineOptions sw_opts;
  sw_opts.add(sw, false);
  std::string sequences, sw_out, param = "band";
  std::vector<std::string> grid;
  int sw_jobs = 1;
  sw->add_option("--param", param, "swept parameter")->check(CLI::IsMember({"band"}));
  sw->add_option("--grid", grid, "start:{...} end:{...}");
  sw->add_option("--sequences", sequences, "directory of sequences")->required()->check(CLI::ExistingDirectory);
  sw->add_option("--out", sw_out, "directory for sweep.csv/.txt");
  sw->add_option("--jobs", sw_jobs, "worker threads")->check(CLI::PositiveNumber);

  // benchmark
  auto* bm = app.add_subcommand("benchmark", "run several models over a sequence directory");
  PipelineOptions bm_opts;
  bm_opts.add(bm, true);
  std::string bm_sequences, bm_out, models = "cv8d,ca12d,phys3d";
  int bm_jobs = 1;
  bm->add_option("--sequences", bm_sequences, "directory of sequences")->required()->check(CLI::ExistingDirectory);
  bm->add_option("--out", bm_out, "runs directory")->required();
  bm->add_option("--models", models, "comma-separated models");
  bm->add_option("--jobs", bm_jobs, "worker threads")->check(CLI::PositiveNumber);

  // report
  auto* rp = app.add_subcommand("report", "compare runs: MAE, RMSE, MAPE, ME per model");
  std::string runs, rp_out;
  rp->add_option("--runs", runs, "runs directory")->required()->check(CLI::ExistingDirectory);
  rp->add_option("--out", rp_out, "output directory (default: --runs)");

  // rerun
  auto* rr = app.add_subcommand("rerun", "replay the operation recorded in a manifest");
  std::string manifest;
  rr->add_option("--manifest", manifest, "manifest.json")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return usage_exit(app, e);
  }

  try {
    if (*sim) {
      if (benchmark > 0 && scripted) throw CLI::ValidationError("--scripted", "cannot be combined with --benchmark");
      ConfigPtr scene = make_config();
      ConfigPtr noise = make_config();
      if (!scene_file.empty()) check(pt_config_load(scene.get(), scene_file.c_str()));
      if (!noise_file.empty()) check(pt_config_load(noise.get(), noise_file.c_str()));
      if (zero_noise) {
        for (const char* k : {"center_jitter", "height_jitter", "miss_rate", "occlusion_miss_rate", "false_positives",
                              "embedding_noise"}) {
          check(pt_config_set(noise.get(), k, "0"));
        }
      }
      check(pt_simulate(scene.get(), noise.get(), sim_out.c_str(), seed.value_or(-1), benchmark, scripted ? 1 : 0,
                        jobs));
    } else if (*trk) {
      if (emb.empty() && !trk_opts.no_appearance) {
        throw CLI::ValidationError("--emb", "required unless --no-appearance is given");
      }
      ConfigPtr cfg = trk_opts.build();
      pt_counts counts{};
      check(pt_track(cfg.get(), cam.c_str(), det.c_str(), trk_opts.no_appearance ? nullptr : opt(emb), opt(seqinfo),
                     res_out.c_str(), opt(counts_out), &counts));
      std::printf("LC=%d RC=%d TC=%d\n", counts.left, counts.right, counts.total);
    } else if (*ev) {
      if (!truth_count && truth_file.empty()) throw CLI::ValidationError("--truth-count", "or --truth is required");
      if (ev_counts.empty() && ev_cam.empty()) throw CLI::ValidationError("--counts", "or --cam is required");
      ConfigPtr cfg = ev_opts.build();
      char* text = nullptr;
      check(pt_evaluate(cfg.get(), gt.c_str(), res.c_str(), truth_count.value_or(0), opt(truth_file), opt(ev_counts),
                        opt(ev_cam), opt(ev_seqinfo), opt(ev_out), &text));
      if (ev_csv && !ev_out.empty()) {
        pt_free_string(text);
        std::FILE* f = std::fopen((ev_out + "/evaluation.csv").c_str(), "rb");
        if (!f) throw RunError{PT_ERR_IO, "cannot read back evaluation.csv"};
        char buf[4096];
        for (std::size_t n; (n = std::fread(buf, 1, sizeof(buf), f)) > 0;) std::fwrite(buf, 1, n, stdout);
        std::fclose(f);
      } else {
        print_and_free(text);
      }
    } else if (*sw) {
      std::vector<double> starts, ends;
      parse_grid(grid, starts, ends);
      ConfigPtr cfg = sw_opts.build();
      char* text = nullptr;
      check(pt_sweep(cfg.get(), sequences.c_str(), opt(sw_out), starts.data(), starts.size(), ends.data(), ends.size(),
                     sw_jobs, &text));
      print_and_free(text);
    } else if (*bm) {
      ConfigPtr cfg = bm_opts.build();
      check(pt_benchmark(cfg.get(), bm_sequences.c_str(), bm_out.c_str(), models.c_str(), bm_jobs));
      char* text = nullptr;
      check(pt_report(bm_out.c_str(), nullptr, &text));
      print_and_free(text);
    } else if (*rp) {
      char* text = nullptr;
      check(pt_report(runs.c_str(), opt(rp_out), &text));
      print_and_free(text);
    } else if (*rr) {
      check(pt_rerun(manifest.c_str()));
    }
  } catch (const CLI::Error& e) {
    return usage_exit(app, e);
  } catch (const RunError& e) {
    std::fprintf(stderr, "error (%s): %s\n", pt_status_string(e.status), e.message.c_str());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
