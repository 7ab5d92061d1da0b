#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "lipo/features.hpp"
#include "support/synthetic.hpp"

using namespace lipo;
namespace ts = lipo::testsupport;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("uniform images yield no features") {
  const Image flat(320, 240, 128);
  const ExtractionConfig cfg;
  CHECK(extract_points(flat, cfg).empty());
  CHECK(extract_lines(flat, cfg).empty());
}

TEST_CASE("tiny images yield no keypoints") {
  const Image tiny(16, 16, 0);
  CHECK(extract_points(tiny, ExtractionConfig{}).empty());
}

TEST_CASE("extraction is deterministic") {
  const Image img = ts::make_checkerboard(240, 240, 24, 5);
  const ExtractionConfig cfg;
  const auto points_a = extract_points(img, cfg);
  const auto points_b = extract_points(img, cfg);
  REQUIRE(points_a.size() == points_b.size());
  for (std::size_t i = 0; i < points_a.size(); ++i) {
    CHECK(points_a[i].keypoint.x == points_b[i].keypoint.x);
    CHECK(points_a[i].keypoint.y == points_b[i].keypoint.y);
    CHECK(points_a[i].descriptor == points_b[i].descriptor);
  }
  const auto lines_a = extract_lines(img, cfg);
  const auto lines_b = extract_lines(img, cfg);
  REQUIRE(lines_a.size() == lines_b.size());
  for (std::size_t i = 0; i < lines_a.size(); ++i) {
    CHECK(lines_a[i].descriptor == lines_b[i].descriptor);
    CHECK(hamming_distance(lines_a[i].descriptor, lines_b[i].descriptor) == 0);
  }
}

TEST_CASE("keypoints respect the response ordering and config limits") {
  const Image img = ts::make_checkerboard(300, 300, 20, 9);
  ExtractionConfig cfg;
  cfg.max_points = 25;
  const auto points = extract_points(img, cfg);
  CHECK(points.size() <= 25);
  REQUIRE(points.size() >= 2);
  for (std::size_t i = 1; i < points.size(); ++i)
    CHECK(points[i - 1].keypoint.response >= points[i].keypoint.response);
  for (const auto& p : points) {
    CHECK(p.keypoint.x >= 0);
    CHECK(p.keypoint.x < img.width);
    CHECK(p.keypoint.orientation >= 0.0f);
    CHECK(p.keypoint.orientation < static_cast<float>(kTwoPi));
  }
}

TEST_CASE("descriptors tolerate a 90 degree rotation") {
  const Image img = ts::make_checkerboard(260, 260, 26, 7);
  const Image rotated = ts::rotate90(img);
  const ExtractionConfig cfg;
  const auto a = extract_points(img, cfg);
  const auto b = extract_points(rotated, cfg);
  REQUIRE(a.size() >= 20);
  REQUIRE(b.size() >= 20);

  // Brute-force mutual nearest neighbours over descriptors.
  std::vector<int> best_b_for_a(a.size(), -1);
  std::vector<int> best_a_for_b(b.size(), -1);
  auto nearest = [](const auto& from, const auto& to) {
    std::vector<int> best(from.size(), -1);
    for (std::size_t i = 0; i < from.size(); ++i) {
      int lo = 999;
      for (std::size_t j = 0; j < to.size(); ++j) {
        const int d = hamming_distance(from[i].descriptor, to[j].descriptor);
        if (d < lo) {
          lo = d;
          best[i] = static_cast<int>(j);
        }
      }
    }
    return best;
  };
  best_b_for_a = nearest(a, b);
  best_a_for_b = nearest(b, a);

  std::vector<double> mutual_distances;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const int j = best_b_for_a[i];
    if (j >= 0 && best_a_for_b[static_cast<std::size_t>(j)] == static_cast<int>(i))
      mutual_distances.push_back(
          hamming_distance(a[i].descriptor, b[static_cast<std::size_t>(j)].descriptor));
  }
  REQUIRE(mutual_distances.size() >= 10);
  std::sort(mutual_distances.begin(), mutual_distances.end());
  CHECK(mutual_distances[mutual_distances.size() / 2] < 64.0);
}

TEST_CASE("a black rectangle produces segments hugging its edges") {
  const int x0 = 60, y0 = 40, x1 = 240, y1 = 160;
  const Image img = ts::make_rectangle_image(300, 200, x0, y0, x1, y1);
  const auto lines = extract_lines(img, ExtractionConfig{});
  REQUIRE(lines.size() >= 4);

  auto edge_distance = [&](float x, float y) {
    const double d_top = std::abs(y - y0);
    const double d_bottom = std::abs(y - y1);
    const double d_left = std::abs(x - x0);
    const double d_right = std::abs(x - x1);
    return std::min(std::min(d_top, d_bottom), std::min(d_left, d_right));
  };
  int hugging = 0;
  for (const auto& l : lines) {
    if (edge_distance(l.segment.start_x, l.segment.start_y) <= 3.0 &&
        edge_distance(l.segment.end_x, l.segment.end_y) <= 3.0)
      ++hugging;
  }
  CHECK(hugging >= 4);
}

TEST_CASE("line segments satisfy their length invariant") {
  const Image img = ts::make_rectangle_image(300, 200, 50, 50, 250, 150);
  ExtractionConfig cfg;
  cfg.min_line_length = 30.0f;
  for (const auto& l : extract_lines(img, cfg)) {
    CHECK(l.segment.length() >= 30.0f);
    const double theta = l.segment.orientation();
    CHECK(theta >= 0.0);
    CHECK(theta < kTwoPi);
  }
}

TEST_CASE("band pair table has 32 entries starting with all adjacent pairs") {
  const auto pairs = line_descriptor_band_pairs(9);
  REQUIRE(pairs.size() == 32);
  for (int i = 0; i < 8; ++i) {
    CHECK(pairs[static_cast<std::size_t>(i)].first == i);
    CHECK(pairs[static_cast<std::size_t>(i)].second == i + 1);
  }
  for (int i = 0; i < 7; ++i) {
    CHECK(pairs[static_cast<std::size_t>(8 + i)].first == i);
    CHECK(pairs[static_cast<std::size_t>(8 + i)].second == i + 2);
  }
  for (const auto& [a, b] : pairs) {
    CHECK(a >= 0);
    CHECK(b < 9);
    CHECK(a < b);
  }
}

TEST_CASE("extraction config validation rejects bad values") {
  ExtractionConfig cfg;
  cfg.band_count = 8;  // must be odd
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.max_points = -1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.band_width = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("feature files round-trip exactly") {
  const fs::path dir = fs::temp_directory_path() / "lipo_feat_test";
  fs::create_directories(dir);

  ts::Rng rng(55);
  FrameFeatures f;
  f.frame_id = 17;
  for (int i = 0; i < 12; ++i) {
    PointFeature p;
    p.keypoint = {1.5f + i, 2.25f + i, 0.125f, 10.0f - i};
    p.descriptor = ts::random_descriptor(rng);
    f.points.push_back(p);
  }
  for (int i = 0; i < 5; ++i) {
    LineFeature l;
    l.segment = {10.0f + i, 20.0f, 110.0f, 25.0f + i};
    l.descriptor = ts::random_descriptor(rng);
    f.lines.push_back(l);
  }

  const std::string path = (dir / "frame.feat").string();
  save_features(f, path);
  const FrameFeatures g = load_features(path);
  CHECK(g.frame_id == f.frame_id);
  REQUIRE(g.points.size() == f.points.size());
  REQUIRE(g.lines.size() == f.lines.size());
  for (std::size_t i = 0; i < f.points.size(); ++i) {
    CHECK(g.points[i].keypoint.x == f.points[i].keypoint.x);
    CHECK(g.points[i].keypoint.y == f.points[i].keypoint.y);
    CHECK(g.points[i].keypoint.orientation == f.points[i].keypoint.orientation);
    CHECK(g.points[i].keypoint.response == f.points[i].keypoint.response);
    CHECK(g.points[i].descriptor == f.points[i].descriptor);
  }
  for (std::size_t i = 0; i < f.lines.size(); ++i) {
    CHECK(g.lines[i].segment.start_x == f.lines[i].segment.start_x);
    CHECK(g.lines[i].segment.end_y == f.lines[i].segment.end_y);
    CHECK(g.lines[i].descriptor == f.lines[i].descriptor);
  }

  // identical bytes across saves
  const std::string path2 = (dir / "frame2.feat").string();
  save_features(f, path2);
  CHECK(slurp(path) == slurp(path2));

  fs::remove_all(dir);
}

TEST_CASE("header-only feature files load as empty frames") {
  const fs::path dir = fs::temp_directory_path() / "lipo_feat_empty";
  fs::create_directories(dir);
  const std::string path = (dir / "empty.feat").string();
  FrameFeatures f;
  f.frame_id = 3;
  save_features(f, path);
  const FrameFeatures g = load_features(path);
  CHECK(g.frame_id == 3);
  CHECK(g.points.empty());
  CHECK(g.lines.empty());
  fs::remove_all(dir);
}

TEST_CASE("malformed feature files raise parse errors naming the line") {
  const fs::path dir = fs::temp_directory_path() / "lipo_feat_bad";
  fs::create_directories(dir);

  auto write = [&](const std::string& name, const std::string& text) {
    const std::string path = (dir / name).string();
    std::ofstream(path) << text;
    return path;
  };

  const std::string good_hex(64, 'a');
  CHECK_THROWS_AS(load_features(write("magic.feat", "WRONG v1 0 0 0 256\n")), ParseError);
  CHECK_THROWS_AS(load_features(write("width.feat", "LIPO-FEATURES v1 0 0 0 128\n")),
                  ParseError);
  CHECK_THROWS_AS(
      load_features(write("trunc.feat",
                          "LIPO-FEATURES v1 0 1 0 256\nP 1 2 0.5 9 abcdef\n")),
      ParseError);
  CHECK_THROWS_AS(
      load_features(write("missing.feat", "LIPO-FEATURES v1 0 2 0 256\nP 1 2 0.5 9 " +
                                              good_hex + "\n")),
      ParseError);
  try {
    load_features(write("lineno.feat",
                        "LIPO-FEATURES v1 0 1 0 256\nP 1 2 notanumber 9 " + good_hex + "\n"));
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("saving to an unwritable path is an I/O error") {
  FrameFeatures f;
  CHECK_THROWS_AS(save_features(f, "/nonexistent_dir_zzz/f.feat"), std::runtime_error);
}
