#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "lipo/geometry.hpp"
#include "support/synthetic.hpp"

using namespace lipo;
namespace ts = lipo::testsupport;

namespace {

constexpr double kDeg = 3.141592653589793 / 180.0;

MatchSet identity_matches(const ts::TwoViewScene& scene) {
  MatchSet m;
  for (std::size_t i = 0; i < scene.query.points.size(); ++i)
    m.point_matches.push_back({static_cast<int>(i), static_cast<int>(i), 0});
  for (std::size_t i = 0; i < scene.query.lines.size(); ++i)
    m.line_matches.push_back(
        {static_cast<int>(i), static_cast<int>(i), 0, EndpointPairing::kParallel});
  return m;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

}  // namespace

TEST_CASE("relative orientation evaluates the rotation-compensated difference") {
  CHECK(relative_orientation(30 * kDeg, 50 * kDeg, 20 * kDeg) == doctest::Approx(0.0));
  CHECK(relative_orientation(10 * kDeg, 100 * kDeg, 0.0) == doctest::Approx(90 * kDeg));
}

TEST_CASE("relative orientation wraps into [0, pi)") {
  ts::Rng rng(21);
  auto angle = [&rng] { return (static_cast<double>(rng() % 1000000) / 1000000.0 - 0.5) * 40.0; };
  for (int i = 0; i < 5000; ++i) {
    const double a = relative_orientation(angle(), angle(), angle());
    CHECK(a >= 0.0);
    CHECK(a < 3.141592653589794);
  }
}

TEST_CASE("identical point sets self-match at distance zero") {
  ts::Rng rng(22);
  std::vector<PointFeature> set;
  for (int i = 0; i < 40; ++i) {
    PointFeature p;
    p.keypoint = {static_cast<float>(i), static_cast<float>(i), 0.0f, 1.0f};
    p.descriptor = ts::random_descriptor(rng);
    set.push_back(p);
  }
  const auto matches = match_points(set, set, GeometryConfig{});
  REQUIRE(matches.size() == set.size());
  for (const PointMatch& m : matches) {
    CHECK(m.query_index == m.train_index);
    CHECK(m.distance == 0);
  }
}

TEST_CASE("equidistant neighbours fail the distance-ratio test") {
  ts::Rng rng(23);
  const BinaryDescriptor base = ts::random_descriptor(rng);
  std::vector<PointFeature> query(1), train(2);
  query[0].descriptor = base;
  train[0].descriptor = ts::perturb_descriptor(base, 10, rng);
  train[1].descriptor = ts::perturb_descriptor(base, 10, rng);  // same distance
  CHECK(match_points(query, train, GeometryConfig{}).empty());
}

TEST_CASE("random descriptor sets produce almost no matches") {
  ts::Rng rng(24);
  std::vector<PointFeature> query(100), train(100);
  for (auto& p : query) p.descriptor = ts::random_descriptor(rng);
  for (auto& p : train) p.descriptor = ts::random_descriptor(rng);
  CHECK(match_points(query, train, GeometryConfig{}).size() <= 5);
}

TEST_CASE("single candidate falls back to the distance threshold") {
  ts::Rng rng(25);
  std::vector<PointFeature> query(1), train(1);
  query[0].descriptor = ts::random_descriptor(rng);
  train[0].descriptor = ts::perturb_descriptor(query[0].descriptor, 20, rng);
  CHECK(match_points(query, train, GeometryConfig{}).size() == 1);
  train[0].descriptor = ts::perturb_descriptor(query[0].descriptor, 100, rng);
  CHECK(match_points(query, train, GeometryConfig{}).empty());
}

TEST_CASE("global rotation of identical line sets is near zero") {
  const auto scene = ts::make_line_match_scene(26, 40, 0, 0.0, 0);
  const auto rotation = estimate_global_rotation(scene.query, scene.query, GeometryConfig{});
  CHECK(rotation.reliable);
  const double folded = std::min(rotation.angle, kTwoPi - rotation.angle);
  CHECK(folded <= GeometryConfig{}.theta_bin);
}

TEST_CASE("global rotation recovers a 30 degree turn within 2 degrees") {
  for (std::uint64_t seed = 27; seed < 32; ++seed) {
    const auto scene = ts::make_line_match_scene(seed, 50, 0, 30.0 * kDeg, 6);
    const auto rotation = estimate_global_rotation(scene.query, scene.train, GeometryConfig{});
    REQUIRE(rotation.reliable);
    CHECK(std::abs(rotation.angle - 30.0 * kDeg) <= 2.0 * kDeg);
  }
}

TEST_CASE("uniformly random orientation differences are not salient") {
  ts::Rng rng(33);
  std::vector<LineFeature> query, train;
  const BinaryDescriptor shared = ts::random_descriptor(rng);
  for (int i = 0; i < 40; ++i) {
    LineFeature q, t;
    const double theta_q = static_cast<double>(rng() % 628) / 100.0;
    const double theta_t = static_cast<double>(rng() % 628) / 100.0;
    q.segment = {0.0f, 0.0f, static_cast<float>(100 * std::cos(theta_q)),
                 static_cast<float>(100 * std::sin(theta_q))};
    t.segment = {0.0f, 0.0f, static_cast<float>(100 * std::cos(theta_t)),
                 static_cast<float>(100 * std::sin(theta_t))};
    // all descriptors plausible pairs: forces voting from unrelated angles
    q.descriptor = ts::perturb_descriptor(shared, 3, rng);
    t.descriptor = ts::perturb_descriptor(shared, 3, rng);
    query.push_back(q);
    train.push_back(t);
  }
  const auto rotation = estimate_global_rotation(query, train, GeometryConfig{});
  CHECK_FALSE(rotation.reliable);
  CHECK(rotation.angle == 0.0);
}

TEST_CASE("empty line sets give an unreliable zero rotation") {
  const auto rotation = estimate_global_rotation({}, {}, GeometryConfig{});
  CHECK_FALSE(rotation.reliable);
  CHECK(rotation.angle == 0.0);
}

TEST_CASE("orientation gate recovers matches that the plain ratio test loses") {
  int strictly_better = 0;
  for (std::uint64_t seed = 40; seed < 50; ++seed) {
    const auto scene = ts::make_line_match_scene(seed, 50, 20, 15.0 * kDeg, 10);
    const GeometryConfig cfg;

    const auto rotation = estimate_global_rotation(scene.query, scene.train, cfg);
    const auto gated = match_lines(scene.query, scene.train, rotation, cfg);
    const auto plain = match_lines(scene.query, scene.train, GlobalRotation{}, cfg);

    auto correct = [&scene](const std::vector<LineMatch>& matches) {
      int n = 0;
      for (const LineMatch& m : matches)
        if (scene.truth[static_cast<std::size_t>(m.query_index)] == m.train_index) ++n;
      return n;
    };
    const int with_gate = correct(gated);
    const int without = correct(plain);
    CHECK(with_gate >= without);
    if (with_gate > without) ++strictly_better;
  }
  CHECK(strictly_better >= 8);
}

TEST_CASE("tightening the orientation gate never adds matches") {
  const auto scene = ts::make_line_match_scene(51, 40, 15, 20.0 * kDeg, 8);
  GeometryConfig cfg;
  const auto rotation = estimate_global_rotation(scene.query, scene.train, cfg);
  std::size_t previous = std::numeric_limits<std::size_t>::max();
  for (double alpha_deg : {40.0, 25.0, 15.0, 10.0, 5.0, 2.0}) {
    cfg.alpha_max = alpha_deg * kDeg;
    const std::size_t n = match_lines(scene.query, scene.train, rotation, cfg).size();
    CHECK(n <= previous);
    previous = n;
  }
}

TEST_CASE("endpoint pairing keeps aligned segments parallel and reversed ones crossed") {
  const LineSegment s{10.0f, 20.0f, 110.0f, 90.0f};
  const LineSegment reversed{110.0f, 90.0f, 10.0f, 20.0f};
  CHECK(pair_endpoints(s, s, 0.0) == EndpointPairing::kParallel);
  CHECK(pair_endpoints(s, reversed, 0.0) == EndpointPairing::kCrossed);
}

TEST_CASE("perpendicular ambiguity resolves to parallel") {
  const LineSegment a{0.0f, 0.0f, 100.0f, 0.0f};   // along +x
  const LineSegment b{0.0f, 0.0f, 0.0f, 100.0f};   // along +y: both pairings 90 deg off
  CHECK(pair_endpoints(a, b, 0.0) == EndpointPairing::kParallel);
}

TEST_CASE("endpoint pairing is symmetric under swapping frames and negating the rotation") {
  ts::Rng rng(52);
  for (int i = 0; i < 500; ++i) {
    auto segment = [&rng] {
      LineSegment s;
      s.start_x = static_cast<float>(rng() % 500);
      s.start_y = static_cast<float>(rng() % 500);
      s.end_x = s.start_x + static_cast<float>(rng() % 200) - 100.0f;
      s.end_y = s.start_y + static_cast<float>(rng() % 200) - 100.0f;
      return s;
    };
    const LineSegment a = segment();
    const LineSegment b = segment();
    if (a.length() < 1.0f || b.length() < 1.0f) continue;
    const double theta_g = static_cast<double>(rng() % 628) / 100.0;
    CHECK(pair_endpoints(a, b, theta_g) == pair_endpoints(b, a, -theta_g));
  }
}

TEST_CASE("verification recovers the analytic epipolar geometry") {
  for (std::uint64_t seed = 60; seed < 65; ++seed) {
    const auto scene = ts::make_two_view_scene(seed, 60, 20, 0);
    const MatchSet matches = identity_matches(scene);
    const auto result = verify_epipolar(scene.query, scene.train, matches, 0.0, GeometryConfig{});

    REQUIRE(result.accepted);
    const std::size_t planted = matches.point_matches.size() + matches.line_matches.size();
    CHECK(result.point_inliers + result.line_inliers >=
          static_cast<int>(0.95 * static_cast<double>(planted)));

    std::vector<double> residuals;
    for (std::size_t i = 0; i < scene.query.points.size(); ++i) {
      const auto& q = scene.query.points[i].keypoint;
      const auto& t = scene.train.points[i].keypoint;
      residuals.push_back(
          ts::symmetric_epipolar_distance_oracle(result.fundamental, q.x, q.y, t.x, t.y));
    }
    CHECK(median(residuals) <= 0.5);

    // rank-2, unit-norm invariants
    const auto& f = result.fundamental;
    const double det = f[0][0] * (f[1][1] * f[2][2] - f[1][2] * f[2][1]) -
                       f[0][1] * (f[1][0] * f[2][2] - f[1][2] * f[2][0]) +
                       f[0][2] * (f[1][0] * f[2][1] - f[1][1] * f[2][0]);
    CHECK(std::abs(det) <= 1e-9);
    double norm2 = 0.0;
    for (const auto& row : f)
      for (double v : row) norm2 += v * v;
    CHECK(std::sqrt(norm2) == doctest::Approx(1.0));
  }
}

TEST_CASE("planted outlier matches are excluded from the consensus") {
  const auto scene = ts::make_two_view_scene(70, 60, 20, 0);
  MatchSet matches = identity_matches(scene);

  // Derange 30% of the point matches so they stay one-to-one but wrong.
  ts::Rng rng(71);
  std::vector<int> corrupt;
  for (int i = 0; i < static_cast<int>(matches.point_matches.size()); ++i)
    if (rng() % 10 < 3) corrupt.push_back(i);
  REQUIRE(corrupt.size() >= 2);
  for (std::size_t k = 0; k < corrupt.size(); ++k) {
    const int src = corrupt[k];
    const int dst = corrupt[(k + 1) % corrupt.size()];
    matches.point_matches[static_cast<std::size_t>(src)].train_index = dst;
  }

  const GeometryConfig cfg;
  const auto result = verify_epipolar(scene.query, scene.train, matches, 0.0, cfg);
  REQUIRE(result.accepted);

  int excluded = 0;
  for (std::size_t k = 0; k < corrupt.size(); ++k) {
    const PointMatch& m = matches.point_matches[static_cast<std::size_t>(corrupt[k])];
    const auto& q = scene.query.points[static_cast<std::size_t>(m.query_index)].keypoint;
    const auto& t = scene.train.points[static_cast<std::size_t>(m.train_index)].keypoint;
    if (ts::symmetric_epipolar_distance_oracle(result.fundamental, q.x, q.y, t.x, t.y) >
        cfg.epi_tolerance)
      ++excluded;
  }
  CHECK(static_cast<double>(excluded) >= 0.9 * static_cast<double>(corrupt.size()));
}

TEST_CASE("fewer than eight correspondences are rejected outright") {
  const auto scene = ts::make_two_view_scene(72, 5, 1, 0);  // 5 + 2 = 7 correspondences
  const MatchSet matches = identity_matches(scene);
  const auto result = verify_epipolar(scene.query, scene.train, matches, 0.0, GeometryConfig{});
  CHECK_FALSE(result.accepted);
  CHECK(result.point_inliers == 0);
  CHECK(result.line_inliers == 0);
}

TEST_CASE("a line with one displaced endpoint still counts as an inlier") {
  auto scene = ts::make_two_view_scene(73, 30, 6, 0);
  // Push one endpoint far off the epipolar geometry; the other endpoint
  // still supports the model.
  scene.train.lines[0].segment.end_x += 60.0f;
  scene.train.lines[0].segment.end_y -= 45.0f;
  const MatchSet matches = identity_matches(scene);
  const auto result = verify_epipolar(scene.query, scene.train, matches, 0.0, GeometryConfig{});
  REQUIRE(result.accepted);
  CHECK(result.line_inliers == static_cast<int>(scene.query.lines.size()));
}

TEST_CASE("inlier counts never exceed the match counts") {
  for (std::uint64_t seed = 80; seed < 84; ++seed) {
    const auto scene = ts::make_two_view_scene(seed, 25, 8, 4);
    MatchSet matches;
    const auto result = verify_candidate(scene.query, scene.train, GeometryConfig{}, &matches);
    CHECK(result.point_inliers <= static_cast<int>(matches.point_matches.size()));
    CHECK(result.line_inliers <= static_cast<int>(matches.line_matches.size()));
  }
}

TEST_CASE("full candidate verification works end to end on a clean scene") {
  const auto scene = ts::make_two_view_scene(90, 60, 20, 4);
  MatchSet matches;
  const auto result = verify_candidate(scene.query, scene.train, GeometryConfig{}, &matches);
  CHECK(result.accepted);
  CHECK(matches.point_matches.size() >= 50);
  CHECK(matches.line_matches.size() >= 15);
  CHECK(result.point_inliers >= 45);
  CHECK(result.line_inliers >= 12);
}
