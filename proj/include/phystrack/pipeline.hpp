#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "phystrack/config.hpp"
#include "phystrack/counting.hpp"
#include "phystrack/metrics.hpp"
#include "phystrack/simulator.hpp"

namespace phystrack {

namespace fs = std::filesystem;

// Sequence directory layout.
inline constexpr const char* kGtFile = "gt.txt";
inline constexpr const char* kDetFile = "det.txt";
inline constexpr const char* kEmbFile = "emb.txt";
inline constexpr const char* kCalibFile = "calib.txt";
inline constexpr const char* kSeqInfoFile = "seqinfo.txt";
inline constexpr const char* kTruthFile = "truth.txt";
inline constexpr const char* kManifestFile = "manifest.json";

struct SequenceInfo {
  double fps = 25.0;
  int num_frames = 0;
};

SequenceInfo read_seqinfo(const fs::path& path);
void write_seqinfo(const fs::path& path, const SequenceInfo& info);
CountTruth read_truth(const fs::path& path);
void write_truth(const fs::path& path, const CountTruth& truth);

/// Writes gt, det, emb, calib, seqinfo and truth files into `dir` (created).
void write_sequence_dir(const fs::path& dir, const SimulatedSequence& seq);

struct LoadedSequence {
  std::string name;
  CameraIntrinsics camera;
  double fps = 25.0;
  int num_frames = 0;
  std::optional<BoxSequence> ground_truth;
  std::vector<std::vector<Detection>> detections;
  std::optional<CountTruth> truth;
};

/// Requires det.txt and calib.txt; emb.txt is read when `with_embeddings`.
LoadedSequence load_sequence_dir(const fs::path& dir, bool with_embeddings);

/// Subdirectories of `root` holding a det.txt, in sorted path order; `root`
/// itself when it is a sequence. Throws Error(InvalidArgument) when empty.
std::vector<fs::path> list_sequence_dirs(const fs::path& root);

struct TrackResult {
  std::vector<FrameOutput> outputs;
  CountSummary band;
  CountSummary line;
};

TrackResult track_detections(std::span<const std::vector<Detection>> detections, const CameraIntrinsics& cam,
                             const PipelineConfig& config);

/// A header plus string cells; emitted as CSV and as aligned text.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string to_csv() const;
  std::string to_text() const;
};

struct EvaluationRow {
  std::string name;
  MotReport mot;
  CountSummary counts;
  int true_count = 0;
};

/// Per-sequence MOT and counting columns followed by an average row.
Table evaluation_table(std::span<const EvaluationRow> rows);
/// Rows of (label, count report) under a first column named `label_header`.
Table count_report_table(const std::string& label_header,
                         std::span<const std::pair<std::string, CountReport>> rows);

struct SweepRow {
  double start = 0.0;
  double end = 0.0;
  CountReport report;
};

/// Start < End pairs from the grid plus one degenerate Start = End row per
/// start value, sorted ascending by MAE then RMSE.
std::vector<SweepRow> sweep_bands(std::span<const std::vector<FrameOutput>> outputs,
                                  std::span<const int> true_counts, double image_width, const BandConfig& base,
                                  std::span<const double> starts, std::span<const double> ends);
Table sweep_table(std::span<const SweepRow> rows);

std::vector<double> default_sweep_starts();
std::vector<double> default_sweep_ends();

/// Runs fn(i) for i in [0, n) on up to `jobs` threads; the first exception
/// (lowest index) is rethrown after all workers finish.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

// File-level operations. Each writes a manifest.json next to its outputs.

struct SimulateRequest {
  KeyValues scene;
  KeyValues noise;
  std::optional<std::uint64_t> seed;
  fs::path out;
  int benchmark = 0;      // > 0: that many benchmark scenes in out/seq-XX
  bool scripted = false;  // scripted scenarios in out/<name>
  int jobs = 1;
};
void run_simulate(const SimulateRequest& req);

struct TrackRequest {
  fs::path calib;
  fs::path det;
  fs::path emb;      // empty: motion-only
  fs::path seqinfo;  // optional; frame count and fps
  fs::path out;      // MOT results
  fs::path counts;   // default: counts.txt next to `out`
  KeyValues config;
};
CountSummary run_track(const TrackRequest& req);

struct EvaluateRequest {
  fs::path gt;
  fs::path res;
  std::optional<int> truth_count;
  fs::path truth;    // truth.txt alternative to truth_count
  fs::path counts;   // counts.txt from track; otherwise counted from res
  fs::path calib;    // image width for counting from res
  fs::path seqinfo;  // optional frame count; default: last gt frame
  fs::path out;      // directory for evaluation.csv/.txt
  KeyValues config;
};
Table run_evaluate(const EvaluateRequest& req);

struct SweepRequest {
  fs::path sequences;
  fs::path out;
  KeyValues config;
  std::vector<double> starts;  // empty: default grid
  std::vector<double> ends;
  int jobs = 1;
};
Table run_sweep(const SweepRequest& req);

struct BenchmarkRequest {
  fs::path sequences;
  fs::path out;  // one run directory per model
  std::vector<MotionModelKind> models;
  KeyValues config;
  int jobs = 1;
};
void run_benchmark(const BenchmarkRequest& req);

struct ReportRequest {
  fs::path runs;
  fs::path out;  // default: runs
};
Table run_report(const ReportRequest& req);

/// Re-executes the operation recorded in a manifest.
void rerun_manifest(const fs::path& manifest);

/// UTC ISO-8601; SOURCE_DATE_EPOCH overrides the clock.
std::string manifest_timestamp();

}  // namespace phystrack
