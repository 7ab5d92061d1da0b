#include "lipo/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <future>
#include <sstream>
#include <stdexcept>

#include "lipo/log.hpp"

namespace lipo {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::vector<BinaryDescriptor> point_descriptors(const FrameFeatures& f) {
  std::vector<BinaryDescriptor> out;
  out.reserve(f.points.size());
  for (const PointFeature& p : f.points) out.push_back(p.descriptor);
  return out;
}

std::vector<BinaryDescriptor> line_descriptors(const FrameFeatures& f) {
  std::vector<BinaryDescriptor> out;
  out.reserve(f.lines.size());
  for (const LineFeature& l : f.lines) out.push_back(l.descriptor);
  return out;
}

std::uint64_t mix_seed(std::uint64_t seed, std::int64_t frame_id) {
  // splitmix64 step keyed by the frame id
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(frame_id + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

const char* loop_status_name(LoopStatus status) {
  switch (status) {
    case LoopStatus::kNoCandidates: return "no_candidates";
    case LoopStatus::kRejectedVerification: return "rejected_verification";
    case LoopStatus::kAccepted: return "accepted";
  }
  return "?";
}

LoopPipeline::LoopPipeline(const PipelineConfig& cfg)
    : cfg_(cfg), point_vocab_(cfg.vocab), line_vocab_(cfg.vocab) {
  if (cfg_.gating_window < 0) throw std::invalid_argument("gating_window must be >= 0");
}

const FrameFeatures* LoopPipeline::frame(std::int64_t frame_id) const {
  const auto it = frame_index_.find(frame_id);
  return it == frame_index_.end() ? nullptr : &frames_[it->second];
}

LoopDecision LoopPipeline::process_frame(const FrameFeatures& features,
                                         double feature_extraction_ms) {
  if (features.frame_id <= last_frame_id_)
    throw std::invalid_argument("frame ids must be strictly increasing (got " +
                                std::to_string(features.frame_id) + " after " +
                                std::to_string(last_frame_id_) + ")");
  last_frame_id_ = features.frame_id;
  if (features.empty())
    LIPO_WARN("frame " << features.frame_id << " has no features at all");

  LoopDecision decision;
  decision.frame_id = features.frame_id;
  decision.feature_extraction_ms = feature_extraction_ms;

  const auto p_descs = point_descriptors(features);
  const auto l_descs = line_descriptors(features);
  // Accepted matches must predate the query by more than the window.
  const std::int64_t max_allowed = features.frame_id - cfg_.gating_window - 1;

  // The two vocabularies are independent; search them in parallel.
  auto search_start = Clock::now();
  auto point_future = std::async(std::launch::async, [&] {
    return point_vocab_.query(features.frame_id, p_descs, max_allowed);
  });
  const CandidateList line_list = line_vocab_.query(features.frame_id, l_descs, max_allowed);
  const CandidateList point_list = point_future.get();
  double search_ms = ms_since(search_start);

  auto update_start = Clock::now();
  auto point_update = std::async(std::launch::async, [&] {
    point_vocab_.insert_frame(features.frame_id, p_descs);
  });
  line_vocab_.insert_frame(features.frame_id, l_descs);
  point_update.get();
  decision.vocab_update_ms = ms_since(update_start);

  // Fusion and island bookkeeping are part of the candidate search stage.
  search_start = Clock::now();
  const auto fused = merge_candidate_lists(point_list, line_list, cfg_.penalty_factor);
  const auto islands = build_islands(fused, cfg_.island_gap);
  const auto selection = select_island(islands, previous_island_);
  decision.candidate_search_ms = search_ms + ms_since(search_start);

  bool verified = false;
  if (selection) {
    const FrameFeatures* candidate = frame(selection->representative);
    if (candidate == nullptr)
      throw std::logic_error("candidate frame " + std::to_string(selection->representative) +
                             " not stored");
    auto verify_start = Clock::now();
    GeometryConfig geometry = cfg_.geometry;
    geometry.ransac_seed = mix_seed(cfg_.seed, features.frame_id);
    const VerificationResult result = verify_candidate(features, *candidate, geometry);
    decision.verification_ms = ms_since(verify_start);

    verified = result.accepted;
    decision.matched_frame = selection->representative;
    decision.beta = selection->representative_beta;
    decision.point_inliers = result.point_inliers;
    decision.line_inliers = result.line_inliers;
    decision.status = verified ? LoopStatus::kAccepted : LoopStatus::kRejectedVerification;
  } else {
    decision.status = LoopStatus::kNoCandidates;
  }
  previous_island_ = retain_for_next(selection, verified);

  frame_index_[features.frame_id] = frames_.size();
  frames_.push_back(features);
  return decision;
}

FeatureFileSource::FeatureFileSource(std::vector<std::string> paths)
    : paths_(std::move(paths)) {}

std::optional<FrameFeatures> FeatureFileSource::next(double* extraction_ms) {
  if (extraction_ms != nullptr) *extraction_ms = 0.0;
  if (pos_ >= paths_.size()) return std::nullopt;
  const std::string& path = paths_[pos_];
  FrameFeatures f = load_features(path);
  if (f.frame_id != static_cast<std::int64_t>(pos_))
    throw std::runtime_error(path + ": recorded frame id " + std::to_string(f.frame_id) +
                             " does not match sequence position " + std::to_string(pos_));
  ++pos_;
  return f;
}

ImageSequenceSource::ImageSequenceSource(std::vector<std::string> paths,
                                         const ExtractionConfig& cfg)
    : paths_(std::move(paths)), cfg_(cfg) {}

std::optional<FrameFeatures> ImageSequenceSource::next(double* extraction_ms) {
  if (pos_ >= paths_.size()) return std::nullopt;
  const std::string& path = paths_[pos_];
  const auto start = std::chrono::steady_clock::now();
  const Image image = load_image(path);
  FrameFeatures f = extract_frame(image, static_cast<std::int64_t>(pos_), cfg_);
  if (extraction_ms != nullptr) *extraction_ms = ms_since(start);
  ++pos_;
  return f;
}

std::optional<FrameFeatures> VectorSource::next(double* extraction_ms) {
  if (extraction_ms != nullptr) *extraction_ms = 0.0;
  if (pos_ >= frames_.size()) return std::nullopt;
  return frames_[pos_++];
}

RunSummary run_sequence(FrameSource& source, const PipelineConfig& cfg,
                        const std::function<void(const LoopDecision&)>& sink) {
  LoopPipeline pipeline(cfg);
  RunSummary summary;
  double extraction_ms = 0.0;
  while (auto features = source.next(&extraction_ms)) {
    const LoopDecision d = pipeline.process_frame(*features, extraction_ms);
    ++summary.frames;
    switch (d.status) {
      case LoopStatus::kAccepted: ++summary.accepted; break;
      case LoopStatus::kRejectedVerification: ++summary.rejected_verification; break;
      case LoopStatus::kNoCandidates: ++summary.no_candidates; break;
    }
    summary.mean_feature_extraction_ms += d.feature_extraction_ms;
    summary.mean_vocab_update_ms += d.vocab_update_ms;
    summary.mean_candidate_search_ms += d.candidate_search_ms;
    summary.mean_verification_ms += d.verification_ms;
    if (sink) sink(d);
  }
  if (summary.frames > 0) {
    const double n = static_cast<double>(summary.frames);
    summary.mean_feature_extraction_ms /= n;
    summary.mean_vocab_update_ms /= n;
    summary.mean_candidate_search_ms /= n;
    summary.mean_verification_ms /= n;
    summary.mean_total_ms = summary.mean_feature_extraction_ms + summary.mean_vocab_update_ms +
                            summary.mean_candidate_search_ms + summary.mean_verification_ms;
  }
  return summary;
}

std::string format_summary(const RunSummary& s) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "frames: %zu\n"
                "accepted: %zu\n"
                "rejected_verification: %zu\n"
                "no_candidates: %zu\n"
                "mean stage time (ms):\n"
                "        FE        VU        SC        SV     total\n"
                "%10.2f%10.2f%10.2f%10.2f%10.2f\n",
                s.frames, s.accepted, s.rejected_verification, s.no_candidates,
                s.mean_feature_extraction_ms, s.mean_vocab_update_ms,
                s.mean_candidate_search_ms, s.mean_verification_ms, s.mean_total_ms);
  return buf;
}

std::string format_decision_line(const LoopDecision& d, bool log_timings) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "%lld\t%s\t%lld\t%.6f\t%d\t%d\t%.3f\t%.3f\t%.3f\t%.3f",
                static_cast<long long>(d.frame_id), loop_status_name(d.status),
                static_cast<long long>(d.matched_frame), d.beta, d.point_inliers, d.line_inliers,
                log_timings ? d.feature_extraction_ms : 0.0,
                log_timings ? d.vocab_update_ms : 0.0,
                log_timings ? d.candidate_search_ms : 0.0,
                log_timings ? d.verification_ms : 0.0);
  return buf;
}

std::vector<LoopDecision> parse_decision_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open file");
  std::vector<LoopDecision> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream is(line);
    LoopDecision d;
    std::string status;
    long long frame_id, matched;
    if (!(is >> frame_id >> status >> matched >> d.beta >> d.point_inliers >> d.line_inliers >>
          d.feature_extraction_ms >> d.vocab_update_ms >> d.candidate_search_ms >>
          d.verification_ms))
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": malformed decision line");
    d.frame_id = frame_id;
    d.matched_frame = matched;
    if (status == "no_candidates")
      d.status = LoopStatus::kNoCandidates;
    else if (status == "rejected_verification")
      d.status = LoopStatus::kRejectedVerification;
    else if (status == "accepted")
      d.status = LoopStatus::kAccepted;
    else
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": unknown status '" +
                               status + "'");
    out.push_back(d);
  }
  return out;
}

}  // namespace lipo
