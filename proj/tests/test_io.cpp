#include <functional>
#include <sstream>

#include "doctest.h"
#include "phystrack/errors.hpp"
#include "phystrack/io.hpp"
#include "test_support.hpp"

using namespace phystrack;
using phystrack::testing::Gen;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::Internal;
}

std::vector<MotRecord> parse(const std::string& text) {
  std::istringstream in(text);
  return parse_mot(in, "t.txt");
}

std::string two_decimals(Gen& g, double lo, double hi) { return format_fixed(g.integer(int(lo * 100), int(hi * 100)) / 100.0, 2); }

}  // namespace

TEST_CASE("format_fixed") {
  CHECK(format_fixed(1.005, 2) == "1.00");  // binary value just below 1.005
  CHECK(format_fixed(2.5, 0) == "2");
  CHECK(format_fixed(-0.0001, 2) == "0.00");
  CHECK(format_fixed(-1.25, 1) == "-1.2");
  CHECK(format_fixed(1234567.891, 3) == "1234567.891");
  CHECK_THROWS_AS(format_fixed(std::nan(""), 2), Error);
  CHECK(parse_double(format_shortest(0.1 + 0.2), "x") == 0.1 + 0.2);
}

TEST_CASE("strict field parsers") {
  CHECK(parse_double("1.5", "x") == 1.5);
  CHECK(parse_double(" -2 ", "x") == -2.0);
  CHECK(code_of([] { parse_double("1.5abc", "x"); }) == ErrorCode::Parse);
  CHECK(code_of([] { parse_double("", "x"); }) == ErrorCode::Parse);
  CHECK(parse_int("42", "n") == 42);
  CHECK(code_of([] { parse_int("4.2", "n"); }) == ErrorCode::Parse);
  CHECK(parse_bool("true", "b"));
  CHECK_FALSE(parse_bool("0", "b"));
  CHECK(code_of([] { parse_bool("maybe", "b"); }) == ErrorCode::Parse);
}

TEST_CASE("MOT line becomes a center-based head box") {
  const auto r = parse("1,-1,100,50,20,30,0.9,-1,-1,-1\n");
  REQUIRE(r.size() == 1);
  CHECK(r[0].frame == 1);
  CHECK(r[0].id == -1);
  CHECK(r[0].box.x == doctest::Approx(110));
  CHECK(r[0].box.y == doctest::Approx(65));
  CHECK(r[0].box.a == doctest::Approx(20.0 / 30.0));
  CHECK(r[0].box.h == doctest::Approx(30));
  CHECK(r[0].confidence == doctest::Approx(0.9));
  CHECK(format_mot_line(r[0]) == "1,-1,100.00,50.00,20.00,30.00,0.90,-1,-1,-1");
  // Seven fields are enough.
  CHECK(parse("3,2,1,1,4,4,1\n").size() == 1);
}

TEST_CASE("MOT errors carry the line number") {
  try {
    parse("1,-1,100,50,20,30,0.9\n\n2,-1,100,50,0,30,0.9\n");
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Parse);
    CHECK(std::string(e.what()).find("t.txt:3") != std::string::npos);
    CHECK(std::string(e.what()).find("non-positive box dimension") != std::string::npos);
  }
  CHECK(code_of([] { parse("1,2,3\n"); }) == ErrorCode::Parse);
  CHECK(code_of([] { parse("0,-1,1,1,1,1,0.5\n"); }) == ErrorCode::Parse);
  CHECK(code_of([] { parse("1,-1,1,1,1,1,1.5\n"); }) == ErrorCode::Parse);
  CHECK(code_of([] { parse("1,-1,1,x,1,1,0.5\n"); }) == ErrorCode::Parse);
  CHECK(code_of([] { read_mot("/nonexistent/phystrack/file.txt"); }) == ErrorCode::Io);
}

TEST_CASE("records are stably sorted by frame") {
  const auto r = parse("3,1,0,0,1,1,1\n1,7,0,0,1,1,1\n3,2,0,0,1,1,1\n1,5,0,0,1,1,1\n");
  REQUIRE(r.size() == 4);
  CHECK(r[0].id == 7);
  CHECK(r[1].id == 5);
  CHECK(r[2].id == 1);
  CHECK(r[3].id == 2);
}

TEST_CASE("property: write(read(file)) reproduces canonical files") {
  Gen g(601);
  for (int trial = 0; trial < 200; ++trial) {
    std::string text;
    const int frames = g.integer(1, 20);
    for (int f = 1; f <= frames; ++f) {
      for (int n = g.integer(0, 5); n > 0; --n) {
        text += std::to_string(f) + ',' + std::to_string(g.integer(-1, 50)) + ',' + two_decimals(g, -50, 1900) + ',' +
                two_decimals(g, -50, 1000) + ',' + two_decimals(g, 1, 200) + ',' + two_decimals(g, 1, 200) + ',' +
                two_decimals(g, 0, 1) + ",-1,-1,-1\n";
      }
    }
    std::ostringstream out;
    write_mot(out, parse(text));
    REQUIRE(out.str() == text);
  }
}

TEST_CASE("property: mutated input never crashes") {
  Gen g(602);
  const std::string base = "1,-1,100,50,20,30,0.9,-1,-1,-1\n2,3,10.5,20.25,15,18,1,-1,-1,-1\n";
  const std::string alphabet = "0123456789,.-+eEx \n\tnaif";
  for (int trial = 0; trial < 3000; ++trial) {
    std::string s = base;
    for (int m = g.integer(1, 6); m > 0; --m) {
      const auto pos = static_cast<std::size_t>(g.integer(0, static_cast<int>(s.size()) - 1));
      const char c = alphabet[static_cast<std::size_t>(g.integer(0, static_cast<int>(alphabet.size()) - 1))];
      switch (g.integer(0, 2)) {
        case 0: s[pos] = c; break;
        case 1: s.insert(pos, 1, c); break;
        default: s.erase(pos, 1); break;
      }
    }
    try {
      for (const MotRecord& r : parse(s)) {
        REQUIRE(r.frame >= 1);
        REQUIRE(r.box.h > 0.0);
        REQUIRE(r.box.a > 0.0);
      }
    } catch (const Error& e) {
      REQUIRE(e.code() == ErrorCode::Parse);
    }
  }
}

TEST_CASE("to_box_sequence and to_detections") {
  const auto r = parse("1,1,0,0,10,10,1\n3,2,0,0,10,10,0.6\n");
  const BoxSequence s = to_box_sequence(r, 3);
  REQUIRE(s.size() == 3);
  CHECK(s[0].size() == 1);
  CHECK(s[1].empty());
  CHECK(s[2][0].id == 2);
  const auto d = to_detections(r, 3);
  CHECK(d[2][0].confidence == doctest::Approx(0.6));
  CHECK(code_of([&] { to_box_sequence(r, 2); }) == ErrorCode::Alignment);
  CHECK(code_of([&] { to_detections(r, 2); }) == ErrorCode::Alignment);
  CHECK(records_from_boxes(s).size() == 2);
}

TEST_CASE("records_from_outputs keeps observed confirmed boxes only") {
  std::vector<FrameOutput> out{
      {1, {{1, {10, 10, 1, 5}, TrackStatus::Confirmed, false}, {2, {10, 10, 1, 5}, TrackStatus::Tentative, false}}},
      {2, {{1, {11, 10, 1, 5}, TrackStatus::Confirmed, true}}}};
  const auto r = records_from_outputs(out);
  REQUIRE(r.size() == 1);
  CHECK(r[0].id == 1);
  CHECK(r[0].frame == 1);
}

TEST_CASE("embeddings: round trip and alignment") {
  Gen g(603);
  std::vector<std::vector<Detection>> dets(3);
  for (auto& frame : dets) {
    for (int n = g.integer(1, 3); n > 0; --n) frame.push_back({{100, 100, 1, 10}, 0.9, g.embedding(16)});
  }
  std::ostringstream os;
  write_embeddings(os, dets);
  std::istringstream is(os.str());
  const auto records = parse_embeddings(is);

  std::vector<std::vector<Detection>> target = dets;
  for (auto& f : target) {
    for (auto& d : f) d.embedding = Embedding();
  }
  attach_embeddings(target, records);
  for (std::size_t k = 0; k < dets.size(); ++k) {
    for (std::size_t i = 0; i < dets[k].size(); ++i) {
      for (std::size_t j = 0; j < 16; ++j) {
        REQUIRE(target[k][i].embedding.values()[j] == doctest::Approx(dets[k][i].embedding.values()[j]).epsilon(1e-5));
      }
    }
  }

  // One detection more than embeddings.
  std::vector<std::vector<Detection>> extra = dets;
  extra[1].push_back(dets[1][0]);
  CHECK(code_of([&] { attach_embeddings(extra, records); }) == ErrorCode::Alignment);
  // One detection fewer.
  std::vector<std::vector<Detection>> fewer = dets;
  fewer[2].pop_back();
  CHECK(code_of([&] { attach_embeddings(fewer, records); }) == ErrorCode::Alignment);
  // Duplicate index.
  std::vector<EmbeddingRecord> dup = records;
  dup.push_back(records.front());
  CHECK(code_of([&] { attach_embeddings(target, dup); }) == ErrorCode::Alignment);
}

TEST_CASE("embedding parse errors") {
  auto parse_emb = [](const std::string& s) {
    std::istringstream in(s);
    return parse_embeddings(in);
  };
  CHECK(parse_emb("1,0,1,0\n1,1,0,1\n").size() == 2);
  CHECK(code_of([&] { parse_emb("1,0,1,0\n1,1,0,1,0\n"); }) == ErrorCode::Parse);  // dimension change
  CHECK(code_of([&] { parse_emb("1,0,2,0\n"); }) == ErrorCode::Parse);             // not unit norm
  CHECK(code_of([&] { parse_emb("1,0\n"); }) == ErrorCode::Parse);
}

TEST_CASE("key-values and calibration") {
  std::istringstream in("# camera\nfx=1200\n\nfy = 1100\ncx=640\ncy=360\nimage_width=1280\nimage_height=720\n");
  const KeyValues kv = parse_key_values(in);
  const CameraIntrinsics cam = calibration_from(kv);
  CHECK(cam.fx == 1200);
  CHECK(cam.fy == 1100);
  CHECK(cam.image_height == 720);
  CHECK(calibration_from(to_key_values(cam)).cx == 640);

  KeyValues unknown = kv;
  unknown["skew"] = "0";
  CHECK(code_of([&] { calibration_from(unknown); }) == ErrorCode::Config);
  KeyValues missing = kv;
  missing.erase("cy");
  CHECK(code_of([&] { calibration_from(missing); }) == ErrorCode::Config);
  std::istringstream dup("a=1\na=2\n");
  CHECK(code_of([&] { parse_key_values(dup); }) == ErrorCode::Parse);
  std::istringstream bad("novalue\n");
  CHECK(code_of([&] { parse_key_values(bad); }) == ErrorCode::Parse);

  const auto dir = phystrack::testing::temp_dir("io_calibration");
  write_calibration(dir / "cam.txt", cam);
  const CameraIntrinsics back = read_calibration(dir / "cam.txt");
  CHECK(back.fx == cam.fx);
  CHECK(back.image_width == cam.image_width);
  CHECK(read_text_file(dir / "cam.txt").find("fx=") != std::string::npos);
}
