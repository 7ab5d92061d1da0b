#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace lipo {

/// Fixed-width 256-bit binary feature descriptor.
///
/// Bit i lives in byte i/8 (LSB first within the byte). The hex form used by
/// the feature file format prints the 32 bytes in order, two lowercase hex
/// digits per byte, high nibble first.
class BinaryDescriptor {
 public:
  static constexpr unsigned kBits = 256;
  static constexpr unsigned kBytes = kBits / 8;
  static constexpr unsigned kWords = kBits / 64;

  BinaryDescriptor() : words_{} {}

  bool bit(unsigned i) const {
    return (words_[i / 64] >> (i % 64)) & 1ULL;
  }

  void set_bit(unsigned i, bool value) {
    const std::uint64_t mask = 1ULL << (i % 64);
    if (value)
      words_[i / 64] |= mask;
    else
      words_[i / 64] &= ~mask;
  }

  void flip_bit(unsigned i) { words_[i / 64] ^= 1ULL << (i % 64); }

  std::uint64_t word(unsigned w) const { return words_[w]; }
  void set_word(unsigned w, std::uint64_t value) { words_[w] = value; }

  std::uint8_t byte(unsigned b) const {
    return static_cast<std::uint8_t>(words_[b / 8] >> ((b % 8) * 8));
  }

  void set_byte(unsigned b, std::uint8_t value) {
    const unsigned shift = (b % 8) * 8;
    words_[b / 8] &= ~(std::uint64_t{0xFF} << shift);
    words_[b / 8] |= std::uint64_t{value} << shift;
  }

  int popcount() const {
    int n = 0;
    for (auto w : words_) n += std::popcount(w);
    return n;
  }

  std::string to_hex() const;
  /// Parses a 64-character hex string. Throws std::invalid_argument on
  /// malformed input.
  static BinaryDescriptor from_hex(const std::string& hex);

  static BinaryDescriptor all_ones() {
    BinaryDescriptor d;
    d.words_.fill(~std::uint64_t{0});
    return d;
  }

  bool operator==(const BinaryDescriptor& o) const { return words_ == o.words_; }
  bool operator!=(const BinaryDescriptor& o) const { return !(*this == o); }

  friend int hamming_distance(const BinaryDescriptor& a, const BinaryDescriptor& b);

 private:
  std::array<std::uint64_t, kWords> words_;
};

/// Hamming distance between two descriptors, in [0, 256].
inline int hamming_distance(const BinaryDescriptor& a, const BinaryDescriptor& b) {
  int n = 0;
  for (unsigned w = 0; w < BinaryDescriptor::kWords; ++w)
    n += std::popcount(a.words_[w] ^ b.words_[w]);
  return n;
}

/// Similarity in [0, 1]: 1 at distance 0, 0 at distance 256.
inline double descriptor_similarity(const BinaryDescriptor& a, const BinaryDescriptor& b) {
  return 1.0 - static_cast<double>(hamming_distance(a, b)) / BinaryDescriptor::kBits;
}

constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Normalizes an angle into [0, 2*pi).
inline double wrap_angle(double radians) {
  double a = std::fmod(radians, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  if (a >= kTwoPi) a = 0.0;  // fmod can round back up to 2*pi
  return a;
}

struct KeyPoint {
  float x = 0.0f;
  float y = 0.0f;
  float orientation = 0.0f;  // radians, [0, 2*pi)
  float response = 0.0f;
};

struct LineSegment {
  float start_x = 0.0f;
  float start_y = 0.0f;
  float end_x = 0.0f;
  float end_y = 0.0f;

  float length() const {
    const float dx = end_x - start_x;
    const float dy = end_y - start_y;
    return std::sqrt(dx * dx + dy * dy);
  }

  /// Direction from start to end, normalized to [0, 2*pi).
  double orientation() const {
    return wrap_angle(std::atan2(static_cast<double>(end_y - start_y),
                                 static_cast<double>(end_x - start_x)));
  }
};

struct PointFeature {
  KeyPoint keypoint;
  BinaryDescriptor descriptor;
};

struct LineFeature {
  LineSegment segment;
  BinaryDescriptor descriptor;
};

/// Per-image feature bundle. frame_id must be strictly increasing across a
/// sequence; either feature list may be empty.
struct FrameFeatures {
  std::int64_t frame_id = 0;
  std::vector<PointFeature> points;
  std::vector<LineFeature> lines;

  bool empty() const { return points.empty() && lines.empty(); }
};

}  // namespace lipo
