#include "phystrack/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "phystrack/errors.hpp"

namespace phystrack {
namespace {

std::string_view trim(std::string_view s) {
  const auto not_space = [](char c) { return c != ' ' && c != '\t' && c != '\r' && c != '\n'; };
  while (!s.empty() && !not_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && !not_space(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

[[noreturn]] void parse_error(std::string_view source, int line, const std::string& msg) {
  throw Error(ErrorCode::Parse, std::string(source) + ":" + std::to_string(line) + ": " + msg);
}

// Runs `body` for every non-blank line, rethrowing field errors with a location.
template <typename F>
void for_each_line(std::istream& in, std::string_view source, F&& body) {
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::string_view view = line;
    if (number == 1 && view.starts_with("\xEF\xBB\xBF")) view.remove_prefix(3);
    view = trim(view);
    if (view.empty()) continue;
    try {
      body(view, number);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::Parse && std::string_view(e.what()).starts_with(source)) throw;
      parse_error(source, number, e.what());
    }
  }
  if (in.bad()) throw Error(ErrorCode::Io, std::string(source) + ": read failure");
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return in;
}

}  // namespace

std::string format_fixed(double value, int decimals) {
  if (!std::isfinite(value)) throw Error(ErrorCode::Domain, "cannot format a non-finite value");
  char buf[128];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::fixed, decimals);
  if (res.ec != std::errc()) throw Error(ErrorCode::Domain, "value too large to format");
  std::string s(buf, res.ptr);
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

std::string format_shortest(double value) {
  if (!std::isfinite(value)) throw Error(ErrorCode::Domain, "cannot format a non-finite value");
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text, std::string_view what) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw Error(ErrorCode::Parse, "invalid number for " + std::string(what) + ": '" + std::string(text) + "'");
  }
  return v;
}

int parse_int(std::string_view text, std::string_view what) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  int v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw Error(ErrorCode::Parse, "invalid integer for " + std::string(what) + ": '" + std::string(text) + "'");
  }
  return v;
}

bool parse_bool(std::string_view text, std::string_view what) {
  text = trim(text);
  if (text == "1" || text == "true" || text == "yes" || text == "on") return true;
  if (text == "0" || text == "false" || text == "no" || text == "off") return false;
  throw Error(ErrorCode::Parse, "invalid boolean for " + std::string(what) + ": '" + std::string(text) + "'");
}

std::vector<MotRecord> parse_mot(std::istream& in, std::string_view source) {
  std::vector<MotRecord> records;
  for_each_line(in, source, [&](std::string_view line, int) {
    const auto f = split(line, ',');
    if (f.size() < 7 || f.size() > 10) {
      throw Error(ErrorCode::Parse, "expected 7 to 10 fields, got " + std::to_string(f.size()));
    }
    MotRecord r;
    r.frame = parse_int(f[0], "frame");
    if (r.frame < 1) throw Error(ErrorCode::Parse, "frame must be >= 1");
    r.id = parse_int(f[1], "id");
    const double left = parse_double(f[2], "bb_left");
    const double top = parse_double(f[3], "bb_top");
    const double width = parse_double(f[4], "bb_width");
    const double height = parse_double(f[5], "bb_height");
    if (!(width > 0.0) || !(height > 0.0)) throw Error(ErrorCode::Parse, "non-positive box dimension");
    r.box = HeadBox::from_tlwh(left, top, width, height);
    r.confidence = parse_double(f[6], "conf");
    if (r.confidence < 0.0 || r.confidence > 1.0) throw Error(ErrorCode::Parse, "conf outside [0, 1]");
    for (std::size_t i = 7; i < f.size(); ++i) parse_double(f[i], "placeholder");
    records.push_back(r);
  });
  std::stable_sort(records.begin(), records.end(),
                   [](const MotRecord& a, const MotRecord& b) { return a.frame < b.frame; });
  return records;
}

std::vector<MotRecord> read_mot(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_mot(in, path.string());
}

std::string format_mot_line(const MotRecord& r) {
  std::string s = std::to_string(r.frame);
  s += ',';
  s += std::to_string(r.id);
  for (double v : {r.box.left(), r.box.top(), r.box.width(), r.box.h, r.confidence}) {
    s += ',';
    s += format_fixed(v, kMotDecimals);
  }
  s += ",-1,-1,-1";
  return s;
}

void write_mot(std::ostream& out, std::span<const MotRecord> records) {
  for (const MotRecord& r : records) out << format_mot_line(r) << '\n';
}

void write_mot(const std::filesystem::path& path, std::span<const MotRecord> records) {
  std::ostringstream os;
  write_mot(os, records);
  write_text_file(path, os.str());
}

BoxSequence to_box_sequence(std::span<const MotRecord> records, int num_frames) {
  BoxSequence seq(static_cast<std::size_t>(std::max(num_frames, 0)));
  for (const MotRecord& r : records) {
    if (r.frame < 1 || r.frame > num_frames) {
      throw Error(ErrorCode::Alignment,
                  "frame " + std::to_string(r.frame) + " outside 1.." + std::to_string(num_frames));
    }
    seq[static_cast<std::size_t>(r.frame - 1)].push_back({r.id, r.box});
  }
  return seq;
}

std::vector<std::vector<Detection>> to_detections(std::span<const MotRecord> records, int num_frames) {
  std::vector<std::vector<Detection>> dets(static_cast<std::size_t>(std::max(num_frames, 0)));
  for (const MotRecord& r : records) {
    if (r.frame < 1 || r.frame > num_frames) {
      throw Error(ErrorCode::Alignment,
                  "detection frame " + std::to_string(r.frame) + " outside 1.." + std::to_string(num_frames));
    }
    dets[static_cast<std::size_t>(r.frame - 1)].push_back(Detection{r.box, r.confidence, {}});
  }
  return dets;
}

std::vector<MotRecord> records_from_boxes(const BoxSequence& sequence) {
  std::vector<MotRecord> out;
  for (std::size_t k = 0; k < sequence.size(); ++k) {
    for (const LabeledBox& b : sequence[k]) out.push_back({static_cast<int>(k) + 1, b.id, b.box, 1.0});
  }
  return out;
}

std::vector<MotRecord> records_from_detections(std::span<const std::vector<Detection>> detections) {
  std::vector<MotRecord> out;
  for (std::size_t k = 0; k < detections.size(); ++k) {
    for (const Detection& d : detections[k]) out.push_back({static_cast<int>(k) + 1, -1, d.box, d.confidence});
  }
  return out;
}

std::vector<MotRecord> records_from_outputs(std::span<const FrameOutput> outputs) {
  std::vector<MotRecord> out;
  for (const FrameOutput& f : outputs) {
    for (const TrackOutput& t : f.tracks) {
      if (t.status == TrackStatus::Confirmed && !t.predicted) out.push_back({f.frame, t.id, t.box, 1.0});
    }
  }
  return out;
}

std::vector<EmbeddingRecord> parse_embeddings(std::istream& in, std::string_view source) {
  std::vector<EmbeddingRecord> records;
  std::size_t dim = 0;
  for_each_line(in, source, [&](std::string_view line, int) {
    const auto f = split(line, ',');
    if (f.size() < 3) throw Error(ErrorCode::Parse, "embedding line needs frame, index and values");
    EmbeddingRecord r;
    r.frame = parse_int(f[0], "frame");
    r.index = parse_int(f[1], "index");
    if (r.frame < 1 || r.index < 0) throw Error(ErrorCode::Parse, "frame must be >= 1 and index >= 0");
    r.values.reserve(f.size() - 2);
    double norm2 = 0.0;
    for (std::size_t i = 2; i < f.size(); ++i) {
      r.values.push_back(parse_double(f[i], "embedding value"));
      norm2 += r.values.back() * r.values.back();
    }
    if (dim == 0) dim = r.values.size();
    if (r.values.size() != dim) {
      throw Error(ErrorCode::Parse, "embedding dimension " + std::to_string(r.values.size()) + " differs from " +
                                        std::to_string(dim));
    }
    if (std::abs(std::sqrt(norm2) - 1.0) > kEmbeddingNormTolerance) {
      throw Error(ErrorCode::Parse, "embedding norm " + format_shortest(std::sqrt(norm2)) + " is not 1");
    }
    records.push_back(std::move(r));
  });
  return records;
}

std::vector<EmbeddingRecord> read_embeddings(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_embeddings(in, path.string());
}

void write_embeddings(std::ostream& out, std::span<const std::vector<Detection>> detections) {
  bool any = false, missing = false;
  for (const auto& frame : detections) {
    for (const Detection& d : frame) (d.embedding.empty() ? missing : any) = true;
  }
  if (!any) return;
  if (missing) throw Error(ErrorCode::Alignment, "some detections have no embedding");
  std::string line;
  for (std::size_t k = 0; k < detections.size(); ++k) {
    for (std::size_t i = 0; i < detections[k].size(); ++i) {
      line = std::to_string(k + 1) + ',' + std::to_string(i);
      for (double v : detections[k][i].embedding.values()) {
        line += ',';
        line += format_fixed(v, kEmbeddingDecimals);
      }
      out << line << '\n';
    }
  }
}

void write_embeddings(const std::filesystem::path& path, std::span<const std::vector<Detection>> detections) {
  std::ostringstream os;
  write_embeddings(os, detections);
  write_text_file(path, os.str());
}

void attach_embeddings(std::vector<std::vector<Detection>>& detections, std::span<const EmbeddingRecord> records) {
  std::vector<std::vector<const EmbeddingRecord*>> by_frame(detections.size());
  for (const EmbeddingRecord& r : records) {
    if (r.frame < 1 || static_cast<std::size_t>(r.frame) > detections.size()) {
      throw Error(ErrorCode::Alignment, "embedding for frame " + std::to_string(r.frame) + " has no detections");
    }
    auto& slot = by_frame[static_cast<std::size_t>(r.frame - 1)];
    const auto idx = static_cast<std::size_t>(r.index);
    if (idx >= detections[static_cast<std::size_t>(r.frame - 1)].size()) {
      throw Error(ErrorCode::Alignment, "frame " + std::to_string(r.frame) + ": embedding index " +
                                            std::to_string(r.index) + " exceeds detection count " +
                                            std::to_string(detections[static_cast<std::size_t>(r.frame - 1)].size()));
    }
    if (slot.empty()) slot.resize(detections[static_cast<std::size_t>(r.frame - 1)].size(), nullptr);
    if (slot[idx] != nullptr) {
      throw Error(ErrorCode::Alignment,
                  "frame " + std::to_string(r.frame) + ": duplicate embedding index " + std::to_string(r.index));
    }
    slot[idx] = &r;
  }
  for (std::size_t k = 0; k < detections.size(); ++k) {
    const std::size_t have = std::count_if(by_frame[k].begin(), by_frame[k].end(), [](auto* p) { return p; });
    if (have != detections[k].size()) {
      throw Error(ErrorCode::Alignment, "frame " + std::to_string(k + 1) + ": " + std::to_string(detections[k].size()) +
                                            " detections but " + std::to_string(have) + " embeddings");
    }
    for (std::size_t i = 0; i < detections[k].size(); ++i) {
      detections[k][i].embedding = Embedding::normalized(by_frame[k][i]->values);
    }
  }
}

KeyValues parse_key_values(std::istream& in, std::string_view source) {
  KeyValues kv;
  for_each_line(in, source, [&](std::string_view line, int) {
    if (line.front() == '#') return;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw Error(ErrorCode::Parse, "expected key=value");
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key.empty()) throw Error(ErrorCode::Parse, "empty key");
    for (char c : key) {
      const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
                      c == '.' || c == '-';
      if (!ok) throw Error(ErrorCode::Parse, "invalid character in key '" + std::string(key) + "'");
    }
    if (!kv.emplace(std::string(key), std::string(value)).second) {
      throw Error(ErrorCode::Parse, "duplicate key '" + std::string(key) + "'");
    }
  });
  return kv;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_key_values(in, path.string());
}

void write_key_values(std::ostream& out, const KeyValues& values) {
  for (const auto& [k, v] : values) out << k << '=' << v << '\n';
}

void write_key_values(const std::filesystem::path& path, const KeyValues& values) {
  std::ostringstream os;
  write_key_values(os, values);
  write_text_file(path, os.str());
}

CameraIntrinsics calibration_from(const KeyValues& values) {
  CameraIntrinsics cam;
  const std::pair<const char*, double*> fields[] = {{"fx", &cam.fx},           {"fy", &cam.fy},
                                                    {"cx", &cam.cx},           {"cy", &cam.cy},
                                                    {"image_width", &cam.image_width},
                                                    {"image_height", &cam.image_height}};
  for (const auto& [key, _] : values) {
    const bool known = std::any_of(std::begin(fields), std::end(fields), [&](const auto& f) { return key == f.first; });
    if (!known) throw Error(ErrorCode::Config, "unknown calibration key '" + key + "'");
  }
  for (const auto& [key, dst] : fields) {
    auto it = values.find(key);
    if (it == values.end()) throw Error(ErrorCode::Config, std::string("calibration is missing '") + key + "'");
    *dst = parse_double(it->second, key);
  }
  cam.validate();
  return cam;
}

KeyValues to_key_values(const CameraIntrinsics& cam) {
  return {{"fx", format_shortest(cam.fx)},
          {"fy", format_shortest(cam.fy)},
          {"cx", format_shortest(cam.cx)},
          {"cy", format_shortest(cam.cy)},
          {"image_width", format_shortest(cam.image_width)},
          {"image_height", format_shortest(cam.image_height)}};
}

CameraIntrinsics read_calibration(const std::filesystem::path& path) {
  try {
    return calibration_from(read_key_values(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Config) throw Error(ErrorCode::Config, path.string() + ": " + e.what());
    throw;
  }
}

void write_calibration(const std::filesystem::path& path, const CameraIntrinsics& cam) {
  write_key_values(path, to_key_values(cam));
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string read_text_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace phystrack
