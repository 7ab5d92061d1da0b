#include <algorithm>
#include <cmath>
#include <future>
#include <random>

#include "lipo/features.hpp"

namespace lipo {

namespace {

// Bresenham circle of radius 3, clockwise from 12 o'clock.
constexpr int kCircle[16][2] = {
    {0, -3}, {1, -3}, {2, -2}, {3, -1}, {3, 0},  {3, 1},  {2, 2},  {1, 3},
    {0, 3},  {-1, 3}, {-2, 2}, {-3, 1}, {-3, 0}, {-3, -1}, {-2, -2}, {-1, -3}};

constexpr int kArcLength = 9;        // contiguous circle pixels required
constexpr int kOrientationRadius = 15;
constexpr int kPatternRadius = 13;   // descriptor sample offsets in [-13, 13]
constexpr int kSmoothRadius = 2;     // box filter half-width
// Rotated pattern offsets stay within kPatternRadius*sqrt(2); add smoothing.
constexpr int kBorderMargin = 22;

struct Candidate {
  int x;
  int y;
  float response;
};

// Response of the segment test at (x, y), or 0 if not a corner. The score is
// the largest total contrast margin over any qualifying contiguous arc.
float corner_response(const Image& img, int x, int y, int t) {
  const int center = img.at(x, y);
  int delta[16];
  for (int i = 0; i < 16; ++i)
    delta[i] = img.at(x + kCircle[i][0], y + kCircle[i][1]) - center;

  float best = 0.0f;
  for (int polarity = 0; polarity < 2; ++polarity) {
    int run = 0;
    float run_sum = 0.0f;
    for (int i = 0; i < 16 + kArcLength; ++i) {
      const int d = polarity == 0 ? delta[i % 16] : -delta[i % 16];
      if (d > t) {
        ++run;
        run_sum += static_cast<float>(d - t);
        if (run >= kArcLength && run_sum > best) best = run_sum;
      } else {
        run = 0;
        run_sum = 0.0f;
      }
    }
  }
  return best;
}

// 256 comparison pairs inside the descriptor patch, fixed across runs.
const std::vector<std::array<int, 4>>& descriptor_pattern() {
  static const std::vector<std::array<int, 4>> pattern = [] {
    std::vector<std::array<int, 4>> p;
    p.reserve(BinaryDescriptor::kBits);
    std::mt19937_64 rng(0x5f3759df);
    auto coord = [&rng]() {
      return static_cast<int>(rng() % (2 * kPatternRadius + 1)) - kPatternRadius;
    };
    while (p.size() < BinaryDescriptor::kBits) {
      std::array<int, 4> pair = {coord(), coord(), coord(), coord()};
      if (pair[0] == pair[2] && pair[1] == pair[3]) continue;
      p.push_back(pair);
    }
    return p;
  }();
  return pattern;
}

class IntegralImage {
 public:
  explicit IntegralImage(const Image& img) : width_(img.width), sums_((img.width + 1) * (img.height + 1), 0) {
    for (int y = 0; y < img.height; ++y) {
      long row = 0;
      for (int x = 0; x < img.width; ++x) {
        row += img.at(x, y);
        sums_[(y + 1) * (width_ + 1) + (x + 1)] = sums_[y * (width_ + 1) + (x + 1)] + row;
      }
    }
  }

  // Sum over the inclusive rectangle [x0,x1] x [y0,y1].
  long rect(int x0, int y0, int x1, int y1) const {
    const int w = width_ + 1;
    return sums_[(y1 + 1) * w + (x1 + 1)] - sums_[y0 * w + (x1 + 1)] -
           sums_[(y1 + 1) * w + x0] + sums_[(y0)*w + x0];
  }

  long box(int cx, int cy) const {
    return rect(cx - kSmoothRadius, cy - kSmoothRadius, cx + kSmoothRadius, cy + kSmoothRadius);
  }

 private:
  int width_;
  std::vector<long> sums_;
};

double intensity_centroid_angle(const Image& img, int cx, int cy) {
  long m10 = 0;
  long m01 = 0;
  for (int dy = -kOrientationRadius; dy <= kOrientationRadius; ++dy) {
    for (int dx = -kOrientationRadius; dx <= kOrientationRadius; ++dx) {
      if (dx * dx + dy * dy > kOrientationRadius * kOrientationRadius) continue;
      const int v = img.at(cx + dx, cy + dy);
      m10 += static_cast<long>(dx) * v;
      m01 += static_cast<long>(dy) * v;
    }
  }
  if (m10 == 0 && m01 == 0) return 0.0;
  return wrap_angle(std::atan2(static_cast<double>(m01), static_cast<double>(m10)));
}

BinaryDescriptor describe_point(const IntegralImage& integral, int cx, int cy, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  BinaryDescriptor d;
  const auto& pattern = descriptor_pattern();
  for (unsigned i = 0; i < BinaryDescriptor::kBits; ++i) {
    const auto& p = pattern[i];
    const int ax = cx + static_cast<int>(std::lround(c * p[0] - s * p[1]));
    const int ay = cy + static_cast<int>(std::lround(s * p[0] + c * p[1]));
    const int bx = cx + static_cast<int>(std::lround(c * p[2] - s * p[3]));
    const int by = cy + static_cast<int>(std::lround(s * p[2] + c * p[3]));
    if (integral.box(ax, ay) < integral.box(bx, by)) d.set_bit(i, true);
  }
  return d;
}

}  // namespace

void ExtractionConfig::validate() const {
  if (max_points < 0) throw std::invalid_argument("max_points must be >= 0");
  if (max_lines < 0) throw std::invalid_argument("max_lines must be >= 0");
  if (min_line_length <= 0.0f) throw std::invalid_argument("min_line_length must be > 0");
  if (fast_threshold < 1) throw std::invalid_argument("fast_threshold must be >= 1");
  if (band_count < 3 || band_count % 2 == 0)
    throw std::invalid_argument("band_count must be odd and >= 3");
  if (band_width < 1) throw std::invalid_argument("band_width must be >= 1");
}

std::vector<PointFeature> extract_points(const Image& image, const ExtractionConfig& cfg) {
  cfg.validate();
  std::vector<PointFeature> out;
  if (cfg.max_points == 0) return out;
  if (image.width < 2 * kBorderMargin + 1 || image.height < 2 * kBorderMargin + 1) return out;

  // Segment-test responses with non-maximum suppression.
  std::vector<float> response(static_cast<std::size_t>(image.width) * image.height, 0.0f);
  for (int y = kBorderMargin; y < image.height - kBorderMargin; ++y)
    for (int x = kBorderMargin; x < image.width - kBorderMargin; ++x)
      response[static_cast<std::size_t>(y) * image.width + x] =
          corner_response(image, x, y, cfg.fast_threshold);

  std::vector<Candidate> candidates;
  for (int y = kBorderMargin; y < image.height - kBorderMargin; ++y) {
    for (int x = kBorderMargin; x < image.width - kBorderMargin; ++x) {
      const float r = response[static_cast<std::size_t>(y) * image.width + x];
      if (r <= 0.0f) continue;
      bool is_max = true;
      for (int dy = -1; dy <= 1 && is_max; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const float n = response[static_cast<std::size_t>(y + dy) * image.width + (x + dx)];
          if (n > r || (n == r && (dy < 0 || (dy == 0 && dx < 0)))) {
            is_max = false;
            break;
          }
        }
      if (is_max) candidates.push_back({x, y, r});
    }
  }

  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.response != b.response) return a.response > b.response;
    if (a.y != b.y) return a.y < b.y;
    return a.x < b.x;
  });
  if (static_cast<int>(candidates.size()) > cfg.max_points)
    candidates.resize(static_cast<std::size_t>(cfg.max_points));

  IntegralImage integral(image);
  out.reserve(candidates.size());
  for (const Candidate& c : candidates) {
    const double angle = intensity_centroid_angle(image, c.x, c.y);
    PointFeature f;
    f.keypoint.x = static_cast<float>(c.x);
    f.keypoint.y = static_cast<float>(c.y);
    f.keypoint.orientation = static_cast<float>(angle);
    f.keypoint.response = c.response;
    f.descriptor = describe_point(integral, c.x, c.y, angle);
    out.push_back(std::move(f));
  }
  return out;
}

FrameFeatures extract_frame(const Image& image, std::int64_t frame_id,
                            const ExtractionConfig& cfg) {
  FrameFeatures f;
  f.frame_id = frame_id;
  // The two detectors are independent; run them side by side.
  auto lines = std::async(std::launch::async, [&] { return extract_lines(image, cfg); });
  f.points = extract_points(image, cfg);
  f.lines = lines.get();
  return f;
}

}  // namespace lipo
