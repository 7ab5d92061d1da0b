#include "lipo/fusion.hpp"

#include <algorithm>
#include <cmath>

namespace lipo {

std::map<std::int64_t, double> borda_scores(const CandidateList& list, std::size_t c) {
  std::map<std::int64_t, double> scores;
  const std::size_t n = std::min(c, list.entries.size());
  for (std::size_t i = 0; i < n; ++i) {
    const CandidateEntry& e = list.entries[i];
    scores[e.frame_id] = static_cast<double>(c - i) * e.normalized_score;
  }
  return scores;
}

std::vector<FusedCandidate> merge_candidate_lists(const CandidateList& points,
                                                  const CandidateList& lines,
                                                  double penalty_factor) {
  std::vector<FusedCandidate> out;
  const std::size_t np = points.entries.size();
  const std::size_t nl = lines.entries.size();
  if (np == 0 && nl == 0) return out;

  // The vote count is the shorter list's length; a single-feature frame
  // (one list empty) still produces candidates, all on the penalty path.
  std::size_t c;
  if (np == 0)
    c = nl;
  else if (nl == 0)
    c = np;
  else
    c = std::min(np, nl);

  const auto bp = borda_scores(points, c);
  const auto bl = borda_scores(lines, c);

  std::map<std::int64_t, FusedCandidate> merged;
  for (const auto& [frame, score] : bp) {
    FusedCandidate& f = merged[frame];
    f.frame_id = frame;
    f.point_borda = score;
  }
  for (const auto& [frame, score] : bl) {
    FusedCandidate& f = merged[frame];
    f.frame_id = frame;
    f.line_borda = score;
  }

  out.reserve(merged.size());
  for (auto& [frame, f] : merged) {
    if (f.point_borda && f.line_borda)
      f.beta = std::sqrt(*f.point_borda * *f.line_borda);
    else if (f.point_borda)
      f.beta = penalty_factor * *f.point_borda;
    else
      f.beta = penalty_factor * *f.line_borda;
    out.push_back(f);
  }

  std::sort(out.begin(), out.end(), [](const FusedCandidate& a, const FusedCandidate& b) {
    if (a.beta != b.beta) return a.beta > b.beta;
    return a.frame_id < b.frame_id;
  });
  return out;
}

}  // namespace lipo
