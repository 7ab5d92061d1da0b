#include "lipo/islands.hpp"

#include <algorithm>

namespace lipo {

namespace {

double island_score(const Island& island) {
  double sum = 0.0;
  for (const FusedCandidate& m : island.members) sum += m.beta;
  return sum / static_cast<double>(island.span());
}

bool within_reach(const Island& island, std::int64_t frame, std::int64_t gap) {
  return frame >= island.min_frame - gap && frame <= island.max_frame + gap;
}

bool reach_overlap(const Island& a, const Island& b, std::int64_t gap) {
  return a.min_frame - gap <= b.max_frame + gap && b.min_frame - gap <= a.max_frame + gap;
}

}  // namespace

std::vector<Island> build_islands(const std::vector<FusedCandidate>& candidates,
                                  std::int64_t gap) {
  std::vector<Island> islands;
  for (const FusedCandidate& cand : candidates) {
    int joined = -1;
    for (std::size_t i = 0; i < islands.size(); ++i) {
      if (within_reach(islands[i], cand.frame_id, gap)) {
        islands[i].members.push_back(cand);
        islands[i].min_frame = std::min(islands[i].min_frame, cand.frame_id);
        islands[i].max_frame = std::max(islands[i].max_frame, cand.frame_id);
        joined = static_cast<int>(i);
        break;
      }
    }
    if (joined < 0) {
      Island island;
      island.min_frame = cand.frame_id;
      island.max_frame = cand.frame_id;
      island.members.push_back(cand);
      islands.push_back(std::move(island));
      joined = static_cast<int>(islands.size()) - 1;
    }
    // Extending or seeding an interval can bring it within reach of another
    // island; merge until the gap-extended intervals are pairwise disjoint
    // again.
    bool merged = true;
    while (merged) {
      merged = false;
      for (std::size_t i = 0; i < islands.size(); ++i) {
        if (static_cast<int>(i) == joined) continue;
        if (reach_overlap(islands[static_cast<std::size_t>(joined)], islands[i], gap)) {
          Island& dst = islands[static_cast<std::size_t>(joined)];
          Island& src = islands[i];
          dst.min_frame = std::min(dst.min_frame, src.min_frame);
          dst.max_frame = std::max(dst.max_frame, src.max_frame);
          dst.members.insert(dst.members.end(), src.members.begin(), src.members.end());
          islands.erase(islands.begin() + static_cast<std::ptrdiff_t>(i));
          if (static_cast<std::size_t>(joined) > i) --joined;
          merged = true;
          break;
        }
      }
    }
  }

  for (Island& island : islands) island.score = island_score(island);
  std::sort(islands.begin(), islands.end(), [](const Island& a, const Island& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.min_frame < b.min_frame;
  });
  return islands;
}

std::optional<IslandSelection> select_island(const std::vector<Island>& islands,
                                             const std::optional<Island>& previous) {
  if (islands.empty()) return std::nullopt;

  const Island* chosen = nullptr;
  bool priority = false;
  if (previous) {
    for (const Island& island : islands) {
      if (island.overlaps(*previous)) {  // first hit has the highest score
        chosen = &island;
        priority = true;
        break;
      }
    }
  }
  if (chosen == nullptr) chosen = &islands.front();

  IslandSelection selection;
  selection.island = *chosen;
  selection.priority_used = priority;
  const FusedCandidate* best = &chosen->members.front();
  for (const FusedCandidate& m : chosen->members) {
    if (m.beta > best->beta || (m.beta == best->beta && m.frame_id < best->frame_id))
      best = &m;
  }
  selection.representative = best->frame_id;
  selection.representative_beta = best->beta;
  return selection;
}

std::optional<Island> retain_for_next(const std::optional<IslandSelection>& selection,
                                      bool verified) {
  if (!selection || !verified) return std::nullopt;
  return selection->island;
}

}  // namespace lipo
