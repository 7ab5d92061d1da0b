#include "lipo/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace lipo {

bool GroundTruth::allows(std::int64_t query, std::int64_t match) const {
  // pairs is ordered; scan the window of entries for this query.
  auto it = pairs.lower_bound({query, std::numeric_limits<std::int64_t>::min()});
  for (; it != pairs.end() && it->first == query; ++it)
    if (std::llabs(it->second - match) <= tolerance) return true;
  return false;
}

std::size_t GroundTruth::queries_with_match() const {
  std::size_t n = 0;
  std::int64_t last = std::numeric_limits<std::int64_t>::min();
  for (const auto& [q, m] : pairs) {
    if (q != last) {
      ++n;
      last = q;
    }
  }
  return n;
}

GroundTruth load_ground_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open file");
  GroundTruth gt;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream is(line);
    std::string tag;
    if (!(is >> tag)) continue;
    if (tag == "TOL") {
      if (!(is >> gt.tolerance) || gt.tolerance < 0)
        throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad TOL value");
    } else if (tag == "G") {
      std::int64_t q, m;
      if (!(is >> q >> m))
        throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                 ": expected 'G <query_id> <match_id>'");
      gt.pairs.emplace(q, m);
    } else {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": unknown record '" +
                               tag + "'");
    }
  }
  return gt;
}

void save_ground_truth(const GroundTruth& gt, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open file for writing");
  out << "TOL " << gt.tolerance << "\n";
  for (const auto& [q, m] : gt.pairs) out << "G " << q << " " << m << "\n";
  if (!out.flush()) throw std::runtime_error(path + ": write failed");
}

namespace {

PRStats classify(const std::vector<std::pair<std::int64_t, std::int64_t>>& accepted,
                 const GroundTruth& gt) {
  PRStats stats;
  for (const auto& [query, match] : accepted) {
    if (gt.allows(query, match))
      ++stats.true_positives;
    else
      ++stats.false_positives;
  }
  const std::size_t total = stats.true_positives + stats.false_positives;
  stats.precision = total == 0 ? 1.0
                               : static_cast<double>(stats.true_positives) /
                                     static_cast<double>(total);
  const std::size_t closable = gt.queries_with_match();
  stats.recall = closable == 0 ? 0.0
                               : static_cast<double>(stats.true_positives) /
                                     static_cast<double>(closable);
  return stats;
}

}  // namespace

PRStats score_run(const std::vector<LoopDecision>& decisions, const GroundTruth& gt) {
  std::unordered_set<std::int64_t> logged;
  std::int64_t max_frame = std::numeric_limits<std::int64_t>::min();
  for (const LoopDecision& d : decisions) {
    logged.insert(d.frame_id);
    max_frame = std::max(max_frame, d.frame_id);
  }

  std::vector<std::int64_t> offenders;
  for (const auto& [q, m] : gt.pairs) {
    if (!logged.count(q)) offenders.push_back(q);
    if (m > max_frame || m < 0) offenders.push_back(m);
  }
  if (!offenders.empty()) {
    std::ostringstream os;
    os << "ground truth references frames outside the decision log:";
    for (std::size_t i = 0; i < offenders.size() && i < 10; ++i) os << " " << offenders[i];
    if (offenders.size() > 10) os << " ... (" << offenders.size() << " total)";
    throw std::runtime_error(os.str());
  }

  std::vector<std::pair<std::int64_t, std::int64_t>> accepted;
  for (const LoopDecision& d : decisions)
    if (d.status == LoopStatus::kAccepted) accepted.emplace_back(d.frame_id, d.matched_frame);
  return classify(accepted, gt);
}

std::vector<PRPoint> pr_sweep(const std::vector<FrameFeatures>& frames,
                              const PipelineConfig& cfg, const GroundTruth& gt,
                              const std::vector<int>& min_inlier_values) {
  std::vector<PRPoint> points;
  if (min_inlier_values.empty()) return points;

  std::vector<int> thresholds = min_inlier_values;
  std::sort(thresholds.begin(), thresholds.end());

  // One pass at the most permissive threshold; stricter points replay the
  // recorded inlier counts.
  struct Verified {
    std::int64_t query;
    std::int64_t match;
    int inliers;
  };
  std::vector<Verified> verified;
  PipelineConfig base = cfg;
  base.geometry.min_inliers = thresholds.front();
  LoopPipeline pipeline(base);
  for (const FrameFeatures& f : frames) {
    const LoopDecision d = pipeline.process_frame(f);
    if (d.status != LoopStatus::kNoCandidates)
      verified.push_back({d.frame_id, d.matched_frame, d.point_inliers + d.line_inliers});
  }

  points.reserve(thresholds.size());
  for (int threshold : thresholds) {
    std::vector<std::pair<std::int64_t, std::int64_t>> accepted;
    for (const Verified& v : verified)
      if (v.inliers >= threshold) accepted.emplace_back(v.query, v.match);
    const PRStats stats = classify(accepted, gt);
    PRPoint p;
    p.threshold = threshold;
    p.precision = stats.precision;
    p.recall = stats.recall;
    p.true_positives = stats.true_positives;
    p.false_positives = stats.false_positives;
    points.push_back(p);
  }
  return points;
}

double max_recall_at_full_precision(const std::vector<PRPoint>& points) {
  double best = 0.0;
  for (const PRPoint& p : points)
    if (p.false_positives == 0) best = std::max(best, p.recall);
  return best;
}

std::string pr_points_to_csv(const std::vector<PRPoint>& points) {
  std::string out = "threshold,precision,recall,tp,fp\n";
  char buf[128];
  for (const PRPoint& p : points) {
    std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f,%zu,%zu\n", p.threshold, p.precision, p.recall,
                  p.true_positives, p.false_positives);
    out += buf;
  }
  return out;
}

LineInlierComparison line_inlier_comparison(const std::vector<FrameFeatures>& frames,
                                            const PipelineConfig& cfg) {
  LineInlierComparison cmp;

  std::vector<std::pair<std::size_t, std::size_t>> accepted_pairs;
  {
    std::unordered_map<std::int64_t, std::size_t> index;
    LoopPipeline pipeline(cfg);
    for (std::size_t i = 0; i < frames.size(); ++i) {
      index[frames[i].frame_id] = i;
      const LoopDecision d = pipeline.process_frame(frames[i]);
      if (d.status == LoopStatus::kAccepted)
        accepted_pairs.emplace_back(i, index.at(d.matched_frame));
    }
  }
  if (accepted_pairs.empty()) return cmp;

  auto line_inliers_with = [&](const FrameFeatures& q, const FrameFeatures& t,
                               bool orientation_gate) {
    MatchSet matches;
    matches.point_matches = match_points(q.points, t.points, cfg.geometry);
    GlobalRotation rotation;  // unreliable zero rotation: plain distance-ratio path
    if (orientation_gate) rotation = estimate_global_rotation(q.lines, t.lines, cfg.geometry);
    matches.line_matches = match_lines(q.lines, t.lines, rotation, cfg.geometry);
    const double theta_g = rotation.reliable ? rotation.angle : 0.0;
    return verify_epipolar(q, t, matches, theta_g, cfg.geometry).line_inliers;
  };

  for (const auto& [qi, ti] : accepted_pairs) {
    cmp.mean_nndr += line_inliers_with(frames[qi], frames[ti], false);
    cmp.mean_proposed += line_inliers_with(frames[qi], frames[ti], true);
  }
  cmp.pairs = accepted_pairs.size();
  cmp.mean_nndr /= static_cast<double>(cmp.pairs);
  cmp.mean_proposed /= static_cast<double>(cmp.pairs);
  return cmp;
}

}  // namespace lipo
