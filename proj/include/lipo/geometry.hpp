#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "lipo/core.hpp"

namespace lipo {

struct GeometryConfig {
  double nndr_ratio = 0.8;            // best/second-best distance ratio bound
  int single_match_max_distance = 64; // fallback when no second neighbour exists
  double alpha_max = 0.17453292519943295;  // 10 deg; relative-orientation gate
  double theta_bin = 0.17453292519943295;  // 10 deg histogram bins
  double theta_salience = 0.1;        // dominant-bin mass fraction required
  int theta_prefilter = 80;           // Hamming bound for rotation voting pairs
  double epi_tolerance = 3.0;         // px, symmetric epipolar distance
  int min_inliers = 12;               // accepted point+line matches required
  int ransac_max_iterations = 2000;
  double ransac_confidence = 0.99;
  std::uint64_t ransac_seed = 7;
};

struct PointMatch {
  int query_index = -1;  // into the query frame's points
  int train_index = -1;  // into the candidate frame's points
  int distance = 0;
};

enum class EndpointPairing { kParallel, kCrossed };

struct LineMatch {
  int query_index = -1;
  int train_index = -1;
  int distance = 0;
  EndpointPairing pairing = EndpointPairing::kParallel;
};

struct MatchSet {
  std::vector<PointMatch> point_matches;
  std::vector<LineMatch> line_matches;
};

/// Dominant in-plane orientation offset between two frames' line sets.
/// `reliable` is false when no orientation-difference bin was salient; the
/// relative-orientation gate must then be skipped.
struct GlobalRotation {
  double angle = 0.0;  // radians; candidate orientation minus query orientation
  bool reliable = false;
};

struct VerificationResult {
  bool accepted = false;
  std::array<std::array<double, 3>, 3> fundamental{};  // rank 2, unit Frobenius norm
  int point_inliers = 0;
  int line_inliers = 0;
  double theta_g = 0.0;
};

/// Relative orientation of two lines under a global rotation, Eq-style
/// |theta_t - theta_c + theta_g| folded into [0, pi].
double relative_orientation(double theta_t, double theta_c, double theta_g);

/// Mutual-best nearest-neighbour point matching with the distance-ratio
/// test. Each query descriptor is matched to its nearest candidate when the
/// best/second-best Hamming ratio is below nndr_ratio; with fewer than two
/// candidates the single neighbour is kept when within
/// single_match_max_distance.
std::vector<PointMatch> match_points(const std::vector<PointFeature>& query,
                                     const std::vector<PointFeature>& train,
                                     const GeometryConfig& cfg);

/// Estimates the global rotation from a histogram of pairwise orientation
/// differences over appearance-plausible line pairs. Returns the circular
/// mean of the dominant bin, or an unreliable zero rotation when the bin
/// mass is below theta_salience (or no pairs exist).
GlobalRotation estimate_global_rotation(const std::vector<LineFeature>& query,
                                        const std::vector<LineFeature>& train,
                                        const GeometryConfig& cfg);

/// Line matching with the relative-orientation gate: candidates whose
/// orientation disagrees with the global rotation by more than alpha_max
/// are discarded before the distance-ratio test (skipped when rotation is
/// unreliable). Mutual-best one-to-one; each match carries the endpoint
/// pairing that minimizes the relative orientation.
std::vector<LineMatch> match_lines(const std::vector<LineFeature>& query,
                                   const std::vector<LineFeature>& train,
                                   const GlobalRotation& rotation, const GeometryConfig& cfg);

/// Endpoint association for one matched line pair: parallel keeps
/// start-start / end-end, crossed swaps. The pairing minimizing the relative
/// orientation wins; ties go to parallel.
EndpointPairing pair_endpoints(const LineSegment& query, const LineSegment& train,
                               double theta_g);

/// Epipolar verification over point matches plus paired line endpoints.
/// Runs RANSAC with the normalized eight-point algorithm; a point match is
/// an inlier when its correspondence is within epi_tolerance of the epipolar
/// line (symmetric), a line match when at least one of its two endpoint
/// correspondences is. Accepts when point + line inliers reach min_inliers.
/// Pools smaller than 8 correspondences are rejected outright.
VerificationResult verify_epipolar(const FrameFeatures& query, const FrameFeatures& train,
                                   const MatchSet& matches, double theta_g,
                                   const GeometryConfig& cfg);

/// Full spatial check of a loop candidate: point matching, global rotation,
/// gated line matching, endpoint pairing, epipolar verification.
VerificationResult verify_candidate(const FrameFeatures& query, const FrameFeatures& train,
                                    const GeometryConfig& cfg, MatchSet* matches = nullptr);

}  // namespace lipo
