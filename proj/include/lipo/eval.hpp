#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "lipo/pipeline.hpp"

namespace lipo {

/// Valid loop pairs for a sequence. A detection (q, m) counts as correct
/// when some (q, m') is listed with |m - m'| <= tolerance.
struct GroundTruth {
  std::set<std::pair<std::int64_t, std::int64_t>> pairs;
  std::int64_t tolerance = 0;

  bool allows(std::int64_t query, std::int64_t match) const;
  std::size_t queries_with_match() const;
};

/// Text format: optional `TOL <n>` header, then `G <query_id> <match_id>`
/// lines; '#' starts a comment.
GroundTruth load_ground_truth(const std::string& path);
void save_ground_truth(const GroundTruth& gt, const std::string& path);

struct PRStats {
  double precision = 1.0;  // TP/(TP+FP), 0/0 treated as 1
  double recall = 0.0;     // TP / queries with a valid match
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
};

/// Classifies each accepted decision against the ground truth. Throws when
/// the ground truth references frames absent from the log.
PRStats score_run(const std::vector<LoopDecision>& decisions, const GroundTruth& gt);

struct PRPoint {
  int threshold = 0;  // min_inliers value
  double precision = 1.0;
  double recall = 0.0;
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
};

/// Precision-recall sweep over the verification inlier threshold. The
/// sequence is processed once at the lowest threshold; higher thresholds are
/// replayed from the recorded inlier counts, so the accepted set shrinks
/// monotonically along the sweep.
std::vector<PRPoint> pr_sweep(const std::vector<FrameFeatures>& frames,
                              const PipelineConfig& cfg, const GroundTruth& gt,
                              const std::vector<int>& min_inlier_values);

/// Highest recall among sweep points with zero false positives.
double max_recall_at_full_precision(const std::vector<PRPoint>& points);

std::string pr_points_to_csv(const std::vector<PRPoint>& points);

struct LineInlierComparison {
  double mean_nndr = 0.0;      // plain distance-ratio line matching
  double mean_proposed = 0.0;  // orientation-gated line matching
  std::size_t pairs = 0;       // verified candidate pairs evaluated
};

/// Reruns spatial verification for every accepted candidate pair of a
/// sequence, once with plain distance-ratio line matching and once with the
/// orientation-gated matcher, reporting the mean line inlier counts.
LineInlierComparison line_inlier_comparison(const std::vector<FrameFeatures>& frames,
                                            const PipelineConfig& cfg);

}  // namespace lipo
