#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "lipo/features.hpp"
#include "lipo/fusion.hpp"
#include "lipo/geometry.hpp"
#include "lipo/islands.hpp"
#include "lipo/vocab_index.hpp"

namespace lipo {

struct PipelineConfig {
  ExtractionConfig extraction;
  VocabConfig vocab;
  double penalty_factor = 0.5;  // single-list fusion penalty
  std::int64_t island_gap = 3;
  GeometryConfig geometry;
  std::int64_t gating_window = 60;  // recent frames excluded as candidates
  std::uint64_t seed = 7;
  bool log_timings = true;  // zero the timing columns of the decision log when false
};

enum class LoopStatus { kNoCandidates, kRejectedVerification, kAccepted };

const char* loop_status_name(LoopStatus status);

struct LoopDecision {
  std::int64_t frame_id = -1;
  LoopStatus status = LoopStatus::kNoCandidates;
  std::int64_t matched_frame = -1;  // verified candidate (accepted or rejected)
  double beta = 0.0;
  int point_inliers = 0;
  int line_inliers = 0;
  double feature_extraction_ms = 0.0;
  double vocab_update_ms = 0.0;
  double candidate_search_ms = 0.0;
  double verification_ms = 0.0;
};

/// Per-frame loop closure detection over dual incremental vocabularies.
///
/// For each frame: query the point and line vocabularies concurrently
/// (excluding frames within the gating window), update both vocabularies,
/// fuse the candidate lists, group candidates into islands, select an island
/// (with priority for the previously retained one), and spatially verify its
/// representative. The island is retained for the next frame only when
/// verification succeeded.
class LoopPipeline {
 public:
  explicit LoopPipeline(const PipelineConfig& cfg);

  /// Frame ids must arrive strictly increasing, else std::invalid_argument.
  LoopDecision process_frame(const FrameFeatures& features, double feature_extraction_ms = 0.0);

  const FrameFeatures* frame(std::int64_t frame_id) const;
  const PipelineConfig& config() const { return cfg_; }

 private:
  PipelineConfig cfg_;
  VocabIndex point_vocab_;
  VocabIndex line_vocab_;
  std::optional<Island> previous_island_;
  std::vector<FrameFeatures> frames_;
  std::unordered_map<std::int64_t, std::size_t> frame_index_;
  std::int64_t last_frame_id_ = std::numeric_limits<std::int64_t>::min();
};

/// Sequence input abstraction: yields frames in id order.
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  /// Returns the next frame, or nullopt at the end. extraction_ms receives
  /// the feature extraction time when the source extracts from images.
  virtual std::optional<FrameFeatures> next(double* extraction_ms) = 0;
};

/// Frames loaded from feature files (one file per frame, paths in frame
/// order). The file's recorded frame id must equal its position.
class FeatureFileSource : public FrameSource {
 public:
  explicit FeatureFileSource(std::vector<std::string> paths);
  std::optional<FrameFeatures> next(double* extraction_ms) override;

 private:
  std::vector<std::string> paths_;
  std::size_t pos_ = 0;
};

/// Frames extracted on the fly from image files (paths in frame order).
class ImageSequenceSource : public FrameSource {
 public:
  ImageSequenceSource(std::vector<std::string> paths, const ExtractionConfig& cfg);
  std::optional<FrameFeatures> next(double* extraction_ms) override;

 private:
  std::vector<std::string> paths_;
  ExtractionConfig cfg_;
  std::size_t pos_ = 0;
};

/// In-memory frame list (evaluation harnesses, tests).
class VectorSource : public FrameSource {
 public:
  explicit VectorSource(std::vector<FrameFeatures> frames) : frames_(std::move(frames)) {}
  std::optional<FrameFeatures> next(double* extraction_ms) override;

 private:
  std::vector<FrameFeatures> frames_;
  std::size_t pos_ = 0;
};

struct RunSummary {
  std::size_t frames = 0;
  std::size_t accepted = 0;
  std::size_t rejected_verification = 0;
  std::size_t no_candidates = 0;
  double mean_feature_extraction_ms = 0.0;
  double mean_vocab_update_ms = 0.0;
  double mean_candidate_search_ms = 0.0;
  double mean_verification_ms = 0.0;
  double mean_total_ms = 0.0;
};

/// Streams every frame of `source` through a pipeline, invoking `sink` per
/// decision. I/O errors propagate with frame context.
RunSummary run_sequence(FrameSource& source, const PipelineConfig& cfg,
                        const std::function<void(const LoopDecision&)>& sink);

/// Stage-timing summary in a four-column layout (extraction, vocabulary
/// update, candidate search, spatial verification).
std::string format_summary(const RunSummary& summary);

/// One tab-separated decision line:
/// frame_id status matched_id beta point_inliers line_inliers t_fe t_vu t_sc t_sv
std::string format_decision_line(const LoopDecision& decision, bool log_timings);

/// Parses a decision log written by format_decision_line.
std::vector<LoopDecision> parse_decision_log(const std::string& path);

}  // namespace lipo
