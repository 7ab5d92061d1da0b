#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "lipo/fusion.hpp"

namespace lipo {

/// Group of candidate frames whose ids fall in the interval [min_frame,
/// max_frame]. The island score averages the members' combined scores over
/// the interval SPAN (max - min + 1), not the member count, so sparse
/// islands are penalized.
struct Island {
  std::int64_t min_frame = 0;
  std::int64_t max_frame = 0;
  std::vector<FusedCandidate> members;
  double score = 0.0;

  bool overlaps(const Island& other) const {
    return min_frame <= other.max_frame && other.min_frame <= max_frame;
  }
  std::int64_t span() const { return max_frame - min_frame + 1; }
};

struct IslandSelection {
  Island island;
  std::int64_t representative = -1;  // member with the highest combined score
  double representative_beta = 0.0;
  bool priority_used = false;
};

/// Groups candidates (processed in list order) into islands: a candidate
/// joins an island when its frame id lies within the island's interval
/// extended by `gap` on both sides, extending the interval; otherwise it
/// seeds a new island. Islands whose gap-extended intervals come to overlap
/// are merged, so the returned intervals are pairwise disjoint even after
/// extension. Result sorted by island score descending (ties by lower
/// min_frame).
std::vector<Island> build_islands(const std::vector<FusedCandidate>& candidates,
                                  std::int64_t gap);

/// Picks the island to verify. When `previous` is set and islands overlap
/// it in time, the best-scoring overlapping island wins (priority path);
/// otherwise the globally best island. Empty input yields nullopt.
std::optional<IslandSelection> select_island(const std::vector<Island>& islands,
                                             const std::optional<Island>& previous);

/// The island carried to the next time step: the chosen island when the
/// loop candidate passed spatial verification, nothing otherwise.
std::optional<Island> retain_for_next(const std::optional<IslandSelection>& selection,
                                      bool verified);

}  // namespace lipo
