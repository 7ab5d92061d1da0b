#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <random>
#include <utility>
#include <vector>

#include "lipo/core.hpp"
#include "lipo/eval.hpp"
#include "lipo/image.hpp"
#include "lipo/vocab_index.hpp"

// Test-only generators and independent oracles. Nothing here may call into
// the code paths under test beyond plain data types.
namespace lipo::testsupport {

using Rng = std::mt19937_64;

BinaryDescriptor random_descriptor(Rng& rng);

/// Flips `bits` distinct random bit positions.
BinaryDescriptor perturb_descriptor(const BinaryDescriptor& d, int bits, Rng& rng);

// ---------------------------------------------------------------------------
// Synthetic imagery

/// Checkerboard with deterministic per-cell gray shades (corners carry
/// orientable structure).
Image make_checkerboard(int width, int height, int cell, std::uint64_t seed);

/// Exact 90-degree counterclockwise rotation.
Image rotate90(const Image& img);

/// White canvas with one black axis-aligned rectangle [x0,x1] x [y0,y1].
Image make_rectangle_image(int width, int height, int x0, int y0, int x1, int y1);

/// PNG writers for exercising the image loader (grayscale, or RGB with the
/// red channel carrying the pattern).
void write_png_gray(const Image& img, const std::string& path);
void write_png_rgb(const Image& red, std::uint8_t green, std::uint8_t blue,
                   const std::string& path);

// ---------------------------------------------------------------------------
// Two-view epipolar scenes

struct TwoViewScene {
  FrameFeatures query;  // first camera
  FrameFeatures train;  // second camera
  // Analytic fundamental matrix: train^T F query = 0.
  std::array<std::array<double, 3>, 3> f_true;
  // Correspondences are index-aligned: query.points[i] <-> train.points[i],
  // query.lines[i] <-> train.lines[i] with parallel endpoint pairing.
};

TwoViewScene make_two_view_scene(std::uint64_t seed, int n_points, int n_lines,
                                 int descriptor_noise_bits);

double symmetric_epipolar_distance_oracle(const std::array<std::array<double, 3>, 3>& f,
                                          double qx, double qy, double tx, double ty);

// ---------------------------------------------------------------------------
// Line-matching scenes (rotated line sets with aliased distractors)

struct LineMatchScene {
  std::vector<LineFeature> query;
  std::vector<LineFeature> train;
  std::vector<int> truth;  // query index -> true train index
};

LineMatchScene make_line_match_scene(std::uint64_t seed, int n_true, int n_distractors,
                                     double rotation_rad, int noise_bits);

// ---------------------------------------------------------------------------
// Synthetic loop closure sequences

struct SequenceSpec {
  int n_slots = 50;          // place visits; each spans `dwell` frames
  int dwell = 4;
  int revisit_count = 20;    // final slots revisiting the first places
  int points_per_place = 60;
  int lines_per_place = 20;
  int descriptor_noise_bits = 4;
  std::uint64_t seed = 123;
};

struct SyntheticSequence {
  std::vector<FrameFeatures> frames;
  GroundTruth ground_truth;  // revisit frames -> frames of the original visit
};

SyntheticSequence make_sequence(const SequenceSpec& spec);

// ---------------------------------------------------------------------------
// Oracles

/// Naive incremental vocabulary: linear scans everywhere, same scoring
/// contract as the index under test (merge-or-create at the same threshold,
/// tf * log(1 + N/df) * (1 - d/256) accumulation).
class NaiveVocab {
 public:
  explicit NaiveVocab(int merge_threshold) : merge_threshold_(merge_threshold) {}

  void insert(std::int64_t frame_id, const std::vector<BinaryDescriptor>& descriptors);

  /// Raw scores sorted descending (ties by lower frame id), unnormalized.
  std::vector<std::pair<std::int64_t, double>> query(
      const std::vector<BinaryDescriptor>& descriptors,
      std::int64_t max_frame_allowed) const;

  std::size_t word_count() const { return words_.size(); }

 private:
  struct Word {
    BinaryDescriptor centroid;
    std::map<std::int64_t, std::uint32_t> postings;
  };
  int merge_threshold_;
  std::vector<Word> words_;
  std::map<std::int64_t, std::uint64_t> totals_;
};

/// Direct evaluation of min-max normalization, rank-weighted voting and the
/// geometric-mean merge (single-list entries penalized), written
/// independently of the fusion module.
std::vector<std::pair<std::int64_t, double>> brute_force_fusion(
    const std::vector<std::pair<std::int64_t, double>>& point_raw,
    const std::vector<std::pair<std::int64_t, double>>& line_raw, double penalty_factor);

}  // namespace lipo::testsupport
