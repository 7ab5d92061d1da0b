#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "lipo/vocab_index.hpp"

namespace lipo {

struct FusedCandidate {
  std::int64_t frame_id = -1;
  std::optional<double> point_borda;  // absent when not in the point top-c
  std::optional<double> line_borda;
  double beta = 0.0;  // combined score
};

/// Rank-weighted scores for the top-c entries of one candidate list: the
/// entry at position i receives (c - i) * normalized_score. Entries beyond
/// the top c get no score; c == 0 yields an empty map.
std::map<std::int64_t, double> borda_scores(const CandidateList& list, std::size_t c);

/// Merges the point and line candidate lists. c is the minimum of the two
/// list lengths (the length of the non-empty list when exactly one is
/// empty). Frames scored in both lists combine as the geometric mean of the
/// two Borda scores; frames scored in exactly one list carry
/// penalty_factor times their single score. Output sorted by combined score
/// descending, ties broken by lower frame id.
std::vector<FusedCandidate> merge_candidate_lists(const CandidateList& points,
                                                  const CandidateList& lines,
                                                  double penalty_factor);

}  // namespace lipo
