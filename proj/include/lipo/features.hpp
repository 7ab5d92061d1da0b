#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "lipo/core.hpp"
#include "lipo/image.hpp"

namespace lipo {

struct ExtractionConfig {
  int max_points = 1000;
  int max_lines = 300;
  float min_line_length = 25.0f;
  int fast_threshold = 20;     // corner test intensity delta
  int band_count = 9;          // bands across the line support region (odd)
  int band_width = 7;          // pixels per band

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

/// FAST-style corners with intensity-centroid orientation and a steered
/// 256-comparison binary patch descriptor. Output is sorted by descending
/// response (ties by y, then x) and truncated to max_points. Deterministic
/// for identical input and config. Images smaller than the sampling patch
/// yield an empty list.
std::vector<PointFeature> extract_points(const Image& image, const ExtractionConfig& cfg);

/// Line segments from gradient-orientation region growing with rectangle
/// fitting, filtered by minimum length and region density. Each segment
/// carries a 256-bit band descriptor: one band descriptor per band of the
/// line-aligned support region, 32 fixed band pairs compared 8 ways each.
/// Output sorted by descending length and truncated to max_lines.
std::vector<LineFeature> extract_lines(const Image& image, const ExtractionConfig& cfg);

/// Runs both detectors on one image.
FrameFeatures extract_frame(const Image& image, std::int64_t frame_id,
                            const ExtractionConfig& cfg);

/// The fixed list of band index pairs compared by the line descriptor:
/// all adjacent pairs, then all distance-2 pairs, and so on by increasing
/// band distance until 32 pairs are collected (cycling if the band count
/// admits fewer combinations).
std::vector<std::pair<int, int>> line_descriptor_band_pairs(int band_count);

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Feature file format (text, line-delimited):
///   LIPO-FEATURES v1 <frame_id> <n_points> <n_lines> <descriptor_bits>
///   P <x> <y> <orientation> <response> <hex descriptor>
///   L <sx> <sy> <ex> <ey> <hex descriptor>
/// Round-trips bit-exactly with load_features.
void save_features(const FrameFeatures& features, const std::string& path);

/// Throws ParseError naming the offending line on malformed input, and on a
/// descriptor width other than BinaryDescriptor::kBits.
FrameFeatures load_features(const std::string& path);

}  // namespace lipo
