#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "lipo/core.hpp"

namespace lipo {

struct VocabConfig {
  int branching = 16;          // children per internal node
  int leaf_capacity = 150;     // words per leaf before a split
  int merge_threshold = 16;    // max Hamming distance to merge into a word
  int backtrack_branches = 4;  // extra branches explored per descriptor
  bool exact_search = false;   // linear word scan instead of tree descent
  double prune_threshold = 0.3;
  int max_candidates = 50;
};

struct CandidateEntry {
  std::int64_t frame_id = -1;
  double raw_score = 0.0;
  double normalized_score = 0.0;
};

/// Ranked retrieval result of one vocabulary, sorted by raw score descending.
struct CandidateList {
  std::int64_t query_frame_id = -1;
  std::vector<CandidateEntry> entries;
};

/// Min-max normalization of raw scores onto [0, 1], followed by removal of
/// entries whose normalized score falls below prune_threshold. When all raw
/// scores are equal (including a single entry) every score normalizes to 1.
std::vector<CandidateEntry> normalize_scores(const std::vector<CandidateEntry>& entries,
                                             double prune_threshold);

/// Incremental visual vocabulary over 256-bit binary descriptors.
///
/// Descriptors are clustered into words: an inserted descriptor merges into
/// the nearest word when within merge_threshold, otherwise it becomes a new
/// word. Words are indexed by a hierarchical tree of bitwise-majority
/// centroids for sublinear nearest-word lookup, and an inverted file maps
/// each word to the frames that contain it. Frame similarity is accumulated
/// as tf-idf-weighted descriptor similarity:
///   score(f) += tf(word, f) * log(1 + N / df(word)) * (1 - d/256)
class VocabIndex {
 public:
  static constexpr std::int64_t kNoFrameLimit = std::numeric_limits<std::int64_t>::max();

  explicit VocabIndex(const VocabConfig& cfg = {});

  /// Registers a frame and folds its descriptors into the vocabulary.
  /// Throws std::invalid_argument on a duplicate frame_id.
  void insert_frame(std::int64_t frame_id, const std::vector<BinaryDescriptor>& descriptors);

  /// Retrieves the frames most similar to the query descriptors. Frames with
  /// id greater than max_frame_allowed are excluded from the result (they
  /// remain indexed). Returns at most cfg.max_candidates entries, normalized
  /// and pruned. Empty vocabulary yields an empty list.
  CandidateList query(std::int64_t query_frame_id,
                      const std::vector<BinaryDescriptor>& descriptors,
                      std::int64_t max_frame_allowed = kNoFrameLimit) const;

  std::size_t word_count() const { return words_.size(); }
  std::size_t frame_count() const { return frame_totals_.size(); }
  std::size_t total_postings() const;
  /// Longest root-to-leaf path, in edges. Empty tree depth is 0.
  int tree_depth() const;

  /// Versioned binary snapshot; round-trips bit-exactly.
  void save_snapshot(const std::string& path) const;
  void load_snapshot(const std::string& path);

  const VocabConfig& config() const { return cfg_; }

 private:
  struct Posting {
    std::int64_t frame_id;
    std::uint32_t count;
  };

  struct Word {
    BinaryDescriptor centroid;
    std::vector<Posting> postings;
  };

  struct Node {
    BinaryDescriptor centroid;
    bool leaf = true;
    std::uint32_t parent = kNoParent;
    std::vector<std::uint32_t> children;  // node ids, or word ids when leaf
  };

  static constexpr std::uint32_t kNoParent = 0xFFFFFFFFu;

  struct NearestWord {
    std::int64_t word_id = -1;
    int distance = std::numeric_limits<int>::max();
  };

  NearestWord find_nearest_word(const BinaryDescriptor& d) const;
  NearestWord find_nearest_word_exact(const BinaryDescriptor& d) const;
  NearestWord find_nearest_word_tree(const BinaryDescriptor& d) const;
  void scan_leaf(const BinaryDescriptor& d, std::uint32_t node_id, NearestWord* best) const;
  std::uint32_t descend_to_leaf(const BinaryDescriptor& d) const;
  void add_word_to_tree(std::uint32_t word_id);
  void split_leaf(std::uint32_t node_id);
  void refresh_ancestor_centroids(std::uint32_t node_id);
  BinaryDescriptor majority_of_words(const std::vector<std::uint32_t>& word_ids) const;
  BinaryDescriptor majority_of_children(const Node& node) const;

  VocabConfig cfg_;
  std::vector<Word> words_;
  std::vector<Node> nodes_;
  std::uint32_t root_ = 0;
  std::unordered_map<std::int64_t, std::uint64_t> frame_totals_;
  std::unordered_set<std::int64_t> frames_seen_;
};

}  // namespace lipo
