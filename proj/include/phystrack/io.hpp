#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "phystrack/geometry.hpp"
#include "phystrack/metrics.hpp"
#include "phystrack/track.hpp"
#include "phystrack/tracker.hpp"

namespace phystrack {

/// One line of a MOTChallenge-style file. The box is held center-based; the
/// file stores bb_left, bb_top, bb_width, bb_height.
struct MotRecord {
  int frame = 1;
  int id = -1;  // -1 for detections
  HeadBox box;
  double confidence = 1.0;
};

struct EmbeddingRecord {
  int frame = 1;
  int index = 0;  // position of the detection within its frame, file order
  std::vector<double> values;
};

using KeyValues = std::map<std::string, std::string, std::less<>>;

constexpr double kEmbeddingNormTolerance = 1e-4;
constexpr int kMotDecimals = 2;
constexpr int kEmbeddingDecimals = 6;

/// Fixed-point formatting with '.' as separator regardless of locale; never
/// prints a negative zero.
std::string format_fixed(double value, int decimals);
/// Shortest representation that parses back to the same double.
std::string format_shortest(double value);
/// Locale-independent strict parsers (whole field must be consumed).
double parse_double(std::string_view text, std::string_view what);
int parse_int(std::string_view text, std::string_view what);
bool parse_bool(std::string_view text, std::string_view what);

/// Accepts 7 to 10 comma-separated fields per line. Errors carry the source
/// name and line number. Records are returned stably sorted by frame.
std::vector<MotRecord> parse_mot(std::istream& in, std::string_view source = "<stream>");
std::vector<MotRecord> read_mot(const std::filesystem::path& path);
std::string format_mot_line(const MotRecord& record);
void write_mot(std::ostream& out, std::span<const MotRecord> records);
void write_mot(const std::filesystem::path& path, std::span<const MotRecord> records);

/// Groups records by frame (index frame - 1). Throws Error(Alignment) when a
/// frame is outside 1..num_frames.
BoxSequence to_box_sequence(std::span<const MotRecord> records, int num_frames);
std::vector<std::vector<Detection>> to_detections(std::span<const MotRecord> records, int num_frames);
std::vector<MotRecord> records_from_boxes(const BoxSequence& sequence);
std::vector<MotRecord> records_from_detections(std::span<const std::vector<Detection>> detections);
/// Confirmed tracks with an observed (non-predicted) box; confidence 1.
std::vector<MotRecord> records_from_outputs(std::span<const FrameOutput> outputs);

std::vector<EmbeddingRecord> parse_embeddings(std::istream& in, std::string_view source = "<stream>");
std::vector<EmbeddingRecord> read_embeddings(const std::filesystem::path& path);
void write_embeddings(std::ostream& out, std::span<const std::vector<Detection>> detections);
void write_embeddings(const std::filesystem::path& path, std::span<const std::vector<Detection>> detections);
/// Requires exactly one record per detection, in the same (frame, index)
/// order; throws Error(Alignment) otherwise.
void attach_embeddings(std::vector<std::vector<Detection>>& detections, std::span<const EmbeddingRecord> records);

/// key=value lines; '#' starts a comment, blank lines ignored, duplicate keys rejected.
KeyValues parse_key_values(std::istream& in, std::string_view source = "<stream>");
KeyValues read_key_values(const std::filesystem::path& path);
void write_key_values(std::ostream& out, const KeyValues& values);
void write_key_values(const std::filesystem::path& path, const KeyValues& values);

/// Keys fx, fy, cx, cy, image_width, image_height; all required, no others.
CameraIntrinsics calibration_from(const KeyValues& values);
KeyValues to_key_values(const CameraIntrinsics& cam);
CameraIntrinsics read_calibration(const std::filesystem::path& path);
void write_calibration(const std::filesystem::path& path, const CameraIntrinsics& cam);

/// Writes the whole text atomically enough for our purposes: to a sibling
/// temporary file, then renamed over the target.
void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace phystrack
