#include "lipo/vocab_index.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <stdexcept>

namespace lipo {

namespace {

BinaryDescriptor bitwise_majority(const std::vector<const BinaryDescriptor*>& descs) {
  BinaryDescriptor out;
  if (descs.empty()) return out;
  const std::size_t half2 = descs.size();  // bit set when 2*count >= size
  for (unsigned bit = 0; bit < BinaryDescriptor::kBits; ++bit) {
    std::size_t count = 0;
    for (const BinaryDescriptor* d : descs) count += d->bit(bit);
    if (2 * count >= half2) out.set_bit(bit, true);
  }
  return out;
}

}  // namespace

std::vector<CandidateEntry> normalize_scores(const std::vector<CandidateEntry>& entries,
                                             double prune_threshold) {
  std::vector<CandidateEntry> out;
  if (entries.empty()) return out;

  double s_min = entries.front().raw_score;
  double s_max = s_min;
  for (const CandidateEntry& e : entries) {
    s_min = std::min(s_min, e.raw_score);
    s_max = std::max(s_max, e.raw_score);
  }

  out.reserve(entries.size());
  const bool degenerate = s_max == s_min;
  for (const CandidateEntry& e : entries) {
    CandidateEntry n = e;
    n.normalized_score = degenerate ? 1.0 : (e.raw_score - s_min) / (s_max - s_min);
    if (n.normalized_score >= prune_threshold) out.push_back(n);
  }
  return out;
}

VocabIndex::VocabIndex(const VocabConfig& cfg) : cfg_(cfg) {
  if (cfg_.branching < 2) throw std::invalid_argument("branching must be >= 2");
  if (cfg_.leaf_capacity < cfg_.branching)
    throw std::invalid_argument("leaf_capacity must be >= branching");
}

void VocabIndex::insert_frame(std::int64_t frame_id,
                              const std::vector<BinaryDescriptor>& descriptors) {
  if (!frames_seen_.insert(frame_id).second)
    throw std::invalid_argument("frame " + std::to_string(frame_id) + " already inserted");
  frame_totals_[frame_id] = descriptors.size();

  for (const BinaryDescriptor& d : descriptors) {
    const NearestWord nearest = find_nearest_word(d);
    if (nearest.word_id >= 0 && nearest.distance <= cfg_.merge_threshold) {
      auto& postings = words_[static_cast<std::size_t>(nearest.word_id)].postings;
      if (!postings.empty() && postings.back().frame_id == frame_id)
        ++postings.back().count;
      else
        postings.push_back({frame_id, 1});
    } else {
      Word w;
      w.centroid = d;
      w.postings.push_back({frame_id, 1});
      words_.push_back(std::move(w));
      add_word_to_tree(static_cast<std::uint32_t>(words_.size() - 1));
    }
  }
}

CandidateList VocabIndex::query(std::int64_t query_frame_id,
                                const std::vector<BinaryDescriptor>& descriptors,
                                std::int64_t max_frame_allowed) const {
  CandidateList list;
  list.query_frame_id = query_frame_id;
  if (words_.empty() || descriptors.empty()) return list;

  const double n_frames = static_cast<double>(frame_totals_.size());
  std::unordered_map<std::int64_t, double> scores;
  for (const BinaryDescriptor& d : descriptors) {
    const NearestWord nearest = find_nearest_word(d);
    if (nearest.word_id < 0) continue;
    const Word& w = words_[static_cast<std::size_t>(nearest.word_id)];
    const double sim = 1.0 - static_cast<double>(nearest.distance) / BinaryDescriptor::kBits;
    const double idf = std::log(1.0 + n_frames / static_cast<double>(w.postings.size()));
    for (const Posting& p : w.postings) {
      if (p.frame_id > max_frame_allowed) continue;
      const double tf =
          static_cast<double>(p.count) / static_cast<double>(frame_totals_.at(p.frame_id));
      scores[p.frame_id] += tf * idf * sim;
    }
  }

  list.entries.reserve(scores.size());
  for (const auto& [frame, score] : scores) list.entries.push_back({frame, score, 0.0});
  std::sort(list.entries.begin(), list.entries.end(),
            [](const CandidateEntry& a, const CandidateEntry& b) {
              if (a.raw_score != b.raw_score) return a.raw_score > b.raw_score;
              return a.frame_id < b.frame_id;
            });
  if (static_cast<int>(list.entries.size()) > cfg_.max_candidates)
    list.entries.resize(static_cast<std::size_t>(cfg_.max_candidates));
  list.entries = normalize_scores(list.entries, cfg_.prune_threshold);
  return list;
}

std::size_t VocabIndex::total_postings() const {
  std::size_t n = 0;
  for (const Word& w : words_)
    for (const Posting& p : w.postings) n += p.count;
  return n;
}

int VocabIndex::tree_depth() const {
  if (nodes_.empty()) return 0;
  int max_depth = 0;
  // Iterative DFS; the tree is shallow but wide.
  std::vector<std::pair<std::uint32_t, int>> stack{{root_, 0}};
  while (!stack.empty()) {
    auto [id, depth] = stack.back();
    stack.pop_back();
    const Node& node = nodes_[id];
    if (node.leaf) {
      max_depth = std::max(max_depth, depth);
    } else {
      for (std::uint32_t c : node.children) stack.emplace_back(c, depth + 1);
    }
  }
  return max_depth;
}

VocabIndex::NearestWord VocabIndex::find_nearest_word(const BinaryDescriptor& d) const {
  if (words_.empty()) return {};
  return cfg_.exact_search ? find_nearest_word_exact(d) : find_nearest_word_tree(d);
}

VocabIndex::NearestWord VocabIndex::find_nearest_word_exact(const BinaryDescriptor& d) const {
  NearestWord best;
  for (std::size_t i = 0; i < words_.size(); ++i) {
    const int dist = hamming_distance(d, words_[i].centroid);
    if (dist < best.distance) {
      best.distance = dist;
      best.word_id = static_cast<std::int64_t>(i);
    }
  }
  return best;
}

void VocabIndex::scan_leaf(const BinaryDescriptor& d, std::uint32_t node_id,
                           NearestWord* best) const {
  for (std::uint32_t word_id : nodes_[node_id].children) {
    const int dist = hamming_distance(d, words_[word_id].centroid);
    if (dist < best->distance ||
        (dist == best->distance && static_cast<std::int64_t>(word_id) < best->word_id)) {
      best->distance = dist;
      best->word_id = word_id;
    }
  }
}

VocabIndex::NearestWord VocabIndex::find_nearest_word_tree(const BinaryDescriptor& d) const {
  NearestWord best;
  if (nodes_.empty()) return best;

  using HeapItem = std::pair<int, std::uint32_t>;  // (distance, node id)
  std::priority_queue<HeapItem, std::vector<HeapItem>, std::greater<>> skipped;

  auto descend = [&](std::uint32_t start) {
    std::uint32_t id = start;
    while (!nodes_[id].leaf) {
      const Node& node = nodes_[id];
      int best_dist = std::numeric_limits<int>::max();
      std::uint32_t best_child = node.children.front();
      for (std::uint32_t c : node.children) {
        const int dist = hamming_distance(d, nodes_[c].centroid);
        if (dist < best_dist) {
          best_dist = dist;
          best_child = c;
        }
      }
      for (std::uint32_t c : node.children)
        if (c != best_child) skipped.emplace(hamming_distance(d, nodes_[c].centroid), c);
      id = best_child;
    }
    scan_leaf(d, id, &best);
  };

  descend(root_);
  for (int budget = cfg_.backtrack_branches; budget > 0 && !skipped.empty(); --budget) {
    const std::uint32_t next = skipped.top().second;
    skipped.pop();
    descend(next);
  }
  return best;
}

std::uint32_t VocabIndex::descend_to_leaf(const BinaryDescriptor& d) const {
  std::uint32_t id = root_;
  while (!nodes_[id].leaf) {
    const Node& node = nodes_[id];
    int best_dist = std::numeric_limits<int>::max();
    std::uint32_t best_child = node.children.front();
    for (std::uint32_t c : node.children) {
      const int dist = hamming_distance(d, nodes_[c].centroid);
      if (dist < best_dist) {
        best_dist = dist;
        best_child = c;
      }
    }
    id = best_child;
  }
  return id;
}

void VocabIndex::add_word_to_tree(std::uint32_t word_id) {
  if (nodes_.empty()) {
    Node root;
    root.leaf = true;
    root.centroid = words_[word_id].centroid;
    root.children.push_back(word_id);
    nodes_.push_back(std::move(root));
    root_ = 0;
    return;
  }
  const std::uint32_t leaf = descend_to_leaf(words_[word_id].centroid);
  nodes_[leaf].children.push_back(word_id);
  if (static_cast<int>(nodes_[leaf].children.size()) > cfg_.leaf_capacity) split_leaf(leaf);
}

BinaryDescriptor VocabIndex::majority_of_words(const std::vector<std::uint32_t>& word_ids) const {
  std::vector<const BinaryDescriptor*> descs;
  descs.reserve(word_ids.size());
  for (std::uint32_t w : word_ids) descs.push_back(&words_[w].centroid);
  return bitwise_majority(descs);
}

BinaryDescriptor VocabIndex::majority_of_children(const Node& node) const {
  std::vector<const BinaryDescriptor*> descs;
  descs.reserve(node.children.size());
  for (std::uint32_t c : node.children) descs.push_back(&nodes_[c].centroid);
  return bitwise_majority(descs);
}

// Re-clusters an over-capacity leaf into up to `branching` child leaves by
// k-majority: farthest-first seeding, then Lloyd iterations with
// bitwise-majority centroids.
void VocabIndex::split_leaf(std::uint32_t node_id) {
  const std::vector<std::uint32_t> word_ids = nodes_[node_id].children;
  const int k = cfg_.branching;

  std::vector<std::uint32_t> seeds{word_ids.front()};
  while (static_cast<int>(seeds.size()) < k) {
    std::uint32_t farthest = word_ids.front();
    int farthest_dist = -1;
    for (std::uint32_t w : word_ids) {
      int min_dist = std::numeric_limits<int>::max();
      for (std::uint32_t s : seeds)
        min_dist = std::min(min_dist, hamming_distance(words_[w].centroid, words_[s].centroid));
      if (min_dist > farthest_dist) {
        farthest_dist = min_dist;
        farthest = w;
      }
    }
    if (farthest_dist <= 0) break;  // duplicates exhausted the pool
    seeds.push_back(farthest);
  }

  std::vector<BinaryDescriptor> centroids;
  centroids.reserve(seeds.size());
  for (std::uint32_t s : seeds) centroids.push_back(words_[s].centroid);

  std::vector<int> assignment(word_ids.size(), 0);
  constexpr int kMaxIterations = 8;
  for (int iter = 0; iter < kMaxIterations; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < word_ids.size(); ++i) {
      int best = 0;
      int best_dist = std::numeric_limits<int>::max();
      for (std::size_t c = 0; c < centroids.size(); ++c) {
        const int dist = hamming_distance(words_[word_ids[i]].centroid, centroids[c]);
        if (dist < best_dist) {
          best_dist = dist;
          best = static_cast<int>(c);
        }
      }
      if (assignment[i] != best) {
        assignment[i] = best;
        changed = true;
      }
    }
    if (!changed && iter > 0) break;

    for (std::size_t c = 0; c < centroids.size(); ++c) {
      std::vector<std::uint32_t> members;
      for (std::size_t i = 0; i < word_ids.size(); ++i)
        if (assignment[i] == static_cast<int>(c)) members.push_back(word_ids[i]);
      if (!members.empty()) centroids[c] = majority_of_words(members);
    }
  }

  nodes_[node_id].leaf = false;
  nodes_[node_id].children.clear();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    std::vector<std::uint32_t> members;
    for (std::size_t i = 0; i < word_ids.size(); ++i)
      if (assignment[i] == static_cast<int>(c)) members.push_back(word_ids[i]);
    if (members.empty()) continue;
    Node child;
    child.leaf = true;
    child.parent = node_id;
    child.centroid = majority_of_words(members);
    child.children = std::move(members);
    nodes_.push_back(std::move(child));
    nodes_[node_id].children.push_back(static_cast<std::uint32_t>(nodes_.size() - 1));
  }
  nodes_[node_id].centroid = majority_of_children(nodes_[node_id]);
  refresh_ancestor_centroids(node_id);
}

void VocabIndex::refresh_ancestor_centroids(std::uint32_t node_id) {
  std::uint32_t id = nodes_[node_id].parent;
  while (id != kNoParent) {
    nodes_[id].centroid = majority_of_children(nodes_[id]);
    id = nodes_[id].parent;
  }
}

namespace {

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::ifstream& in, T* v) {
  in.read(reinterpret_cast<char*>(v), sizeof(T));
  if (!in) throw std::runtime_error("truncated vocabulary snapshot");
}

void write_descriptor(std::ofstream& out, const BinaryDescriptor& d) {
  for (unsigned w = 0; w < BinaryDescriptor::kWords; ++w) write_pod(out, d.word(w));
}

void read_descriptor(std::ifstream& in, BinaryDescriptor* d) {
  for (unsigned w = 0; w < BinaryDescriptor::kWords; ++w) {
    std::uint64_t v;
    read_pod(in, &v);
    d->set_word(w, v);
  }
}

constexpr char kSnapshotMagic[8] = {'L', 'I', 'P', 'O', 'V', 'O', 'C', '1'};

}  // namespace

void VocabIndex::save_snapshot(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open file for writing");

  out.write(kSnapshotMagic, sizeof(kSnapshotMagic));
  write_pod(out, std::uint32_t{BinaryDescriptor::kBits});
  write_pod(out, static_cast<std::uint32_t>(cfg_.branching));
  write_pod(out, static_cast<std::uint32_t>(cfg_.leaf_capacity));

  // Frame totals in frame order for a canonical byte stream.
  std::vector<std::pair<std::int64_t, std::uint64_t>> totals(frame_totals_.begin(),
                                                             frame_totals_.end());
  std::sort(totals.begin(), totals.end());
  write_pod(out, static_cast<std::uint64_t>(totals.size()));
  for (const auto& [frame, total] : totals) {
    write_pod(out, frame);
    write_pod(out, total);
  }

  write_pod(out, static_cast<std::uint64_t>(words_.size()));
  for (const Word& w : words_) {
    write_descriptor(out, w.centroid);
    write_pod(out, static_cast<std::uint64_t>(w.postings.size()));
    for (const Posting& p : w.postings) {
      write_pod(out, p.frame_id);
      write_pod(out, p.count);
    }
  }

  write_pod(out, static_cast<std::uint64_t>(nodes_.size()));
  for (const Node& n : nodes_) {
    write_pod(out, static_cast<std::uint8_t>(n.leaf ? 1 : 0));
    write_descriptor(out, n.centroid);
    write_pod(out, n.parent);
    write_pod(out, static_cast<std::uint32_t>(n.children.size()));
    for (std::uint32_t c : n.children) write_pod(out, c);
  }
  write_pod(out, root_);
  if (!out.flush()) throw std::runtime_error(path + ": write failed");
}

void VocabIndex::load_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open file");

  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || !std::equal(magic, magic + 8, kSnapshotMagic))
    throw std::runtime_error(path + ": not a vocabulary snapshot");
  std::uint32_t bits, branching, leaf_capacity;
  read_pod(in, &bits);
  if (bits != BinaryDescriptor::kBits)
    throw std::runtime_error(path + ": descriptor width " + std::to_string(bits) +
                             " does not match configured width " +
                             std::to_string(BinaryDescriptor::kBits));
  read_pod(in, &branching);
  read_pod(in, &leaf_capacity);
  cfg_.branching = static_cast<int>(branching);
  cfg_.leaf_capacity = static_cast<int>(leaf_capacity);

  frame_totals_.clear();
  frames_seen_.clear();
  std::uint64_t n_frames;
  read_pod(in, &n_frames);
  for (std::uint64_t i = 0; i < n_frames; ++i) {
    std::int64_t frame;
    std::uint64_t total;
    read_pod(in, &frame);
    read_pod(in, &total);
    frame_totals_[frame] = total;
    frames_seen_.insert(frame);
  }

  words_.clear();
  std::uint64_t n_words;
  read_pod(in, &n_words);
  words_.reserve(n_words);
  for (std::uint64_t i = 0; i < n_words; ++i) {
    Word w;
    read_descriptor(in, &w.centroid);
    std::uint64_t n_postings;
    read_pod(in, &n_postings);
    w.postings.reserve(n_postings);
    for (std::uint64_t j = 0; j < n_postings; ++j) {
      Posting p;
      read_pod(in, &p.frame_id);
      read_pod(in, &p.count);
      w.postings.push_back(p);
    }
    words_.push_back(std::move(w));
  }

  nodes_.clear();
  std::uint64_t n_nodes;
  read_pod(in, &n_nodes);
  nodes_.reserve(n_nodes);
  for (std::uint64_t i = 0; i < n_nodes; ++i) {
    Node n;
    std::uint8_t leaf;
    read_pod(in, &leaf);
    n.leaf = leaf != 0;
    read_descriptor(in, &n.centroid);
    read_pod(in, &n.parent);
    std::uint32_t n_children;
    read_pod(in, &n_children);
    n.children.reserve(n_children);
    for (std::uint32_t j = 0; j < n_children; ++j) {
      std::uint32_t c;
      read_pod(in, &c);
      n.children.push_back(c);
    }
    nodes_.push_back(std::move(n));
  }
  read_pod(in, &root_);
}

}  // namespace lipo
