#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

#include "lipo/features.hpp"

namespace lipo {

namespace {

constexpr float kGradientThreshold = 10.0f;   // minimum gradient magnitude
constexpr double kOrientationTolerance = 0.3926990816987241;  // 22.5 deg
constexpr double kMinRegionDensity = 0.4;

struct GradientField {
  int width = 0;
  int height = 0;
  std::vector<float> gx;
  std::vector<float> gy;
  std::vector<float> mag;

  std::size_t idx(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
};

GradientField compute_gradients(const Image& img) {
  GradientField g;
  g.width = img.width;
  g.height = img.height;
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  g.gx.assign(n, 0.0f);
  g.gy.assign(n, 0.0f);
  g.mag.assign(n, 0.0f);
  for (int y = 1; y < img.height - 1; ++y) {
    for (int x = 1; x < img.width - 1; ++x) {
      const float dx = (static_cast<float>(img.at(x + 1, y)) - img.at(x - 1, y)) * 0.5f;
      const float dy = (static_cast<float>(img.at(x, y + 1)) - img.at(x, y - 1)) * 0.5f;
      const std::size_t i = g.idx(x, y);
      g.gx[i] = dx;
      g.gy[i] = dy;
      g.mag[i] = std::sqrt(dx * dx + dy * dy);
    }
  }
  return g;
}

double circular_diff(double a, double b) {
  const double d = wrap_angle(a - b);
  return std::min(d, kTwoPi - d);
}

struct Region {
  std::vector<std::pair<int, int>> pixels;
  double sum_cos = 0.0;  // unit gradient direction accumulators
  double sum_sin = 0.0;

  double mean_angle() const { return std::atan2(sum_sin, sum_cos); }
};

// Grows a region of connected pixels with coherent gradient orientation.
Region grow_region(const GradientField& g, std::vector<bool>& used, int seed_x, int seed_y) {
  Region region;
  std::deque<std::pair<int, int>> frontier;
  frontier.emplace_back(seed_x, seed_y);
  used[g.idx(seed_x, seed_y)] = true;

  while (!frontier.empty()) {
    auto [x, y] = frontier.front();
    frontier.pop_front();
    const std::size_t i = g.idx(x, y);
    region.pixels.emplace_back(x, y);
    region.sum_cos += g.gx[i] / g.mag[i];
    region.sum_sin += g.gy[i] / g.mag[i];

    const double mean = region.mean_angle();
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0) continue;
        const int nx = x + dx;
        const int ny = y + dy;
        if (nx < 1 || ny < 1 || nx >= g.width - 1 || ny >= g.height - 1) continue;
        const std::size_t ni = g.idx(nx, ny);
        if (used[ni] || g.mag[ni] < kGradientThreshold) continue;
        const double angle = std::atan2(g.gy[ni], g.gx[ni]);
        if (circular_diff(angle, mean) > kOrientationTolerance) continue;
        used[ni] = true;
        frontier.emplace_back(nx, ny);
      }
    }
  }
  return region;
}

// Fits a directed segment to a region. Direction follows the region's mean
// gradient rotated +90 degrees, so polarity (dark/light sides) is stable.
bool fit_segment(const GradientField& g, const Region& region, float min_length,
                 LineSegment* out) {
  if (region.pixels.size() < 2) return false;

  double wsum = 0.0, mx = 0.0, my = 0.0;
  for (auto [x, y] : region.pixels) {
    const double w = g.mag[g.idx(x, y)];
    wsum += w;
    mx += w * x;
    my += w * y;
  }
  mx /= wsum;
  my /= wsum;

  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (auto [x, y] : region.pixels) {
    const double w = g.mag[g.idx(x, y)];
    const double dx = x - mx;
    const double dy = y - my;
    sxx += w * dx * dx;
    sxy += w * dx * dy;
    syy += w * dy * dy;
  }

  // Principal eigenvector of the 2x2 scatter matrix.
  const double tr = sxx + syy;
  const double det = sxx * syy - sxy * sxy;
  const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
  const double lambda = tr / 2.0 + disc;
  double ux, uy;
  if (std::abs(sxy) > 1e-12) {
    ux = lambda - syy;
    uy = sxy;
  } else {
    ux = sxx >= syy ? 1.0 : 0.0;
    uy = sxx >= syy ? 0.0 : 1.0;
  }
  const double unorm = std::sqrt(ux * ux + uy * uy);
  if (unorm < 1e-12) return false;
  ux /= unorm;
  uy /= unorm;

  // Align with the gradient-derived polarity: d = rot90(mean gradient).
  const double gnorm = std::hypot(region.sum_cos, region.sum_sin);
  if (gnorm > 1e-12) {
    const double dx = -region.sum_sin / gnorm;
    const double dy = region.sum_cos / gnorm;
    if (ux * dx + uy * dy < 0.0) {
      ux = -ux;
      uy = -uy;
    }
  }

  double tmin = 0.0, tmax = 0.0, smax = 0.0;
  bool first = true;
  for (auto [x, y] : region.pixels) {
    const double t = (x - mx) * ux + (y - my) * uy;
    const double s = std::abs(-(x - mx) * uy + (y - my) * ux);
    if (first) {
      tmin = tmax = t;
      first = false;
    } else {
      tmin = std::min(tmin, t);
      tmax = std::max(tmax, t);
    }
    smax = std::max(smax, s);
  }

  const double length = tmax - tmin;
  if (length < min_length) return false;
  const double width = std::max(1.0, 2.0 * smax);
  const double density = static_cast<double>(region.pixels.size()) / (length * width);
  if (density < kMinRegionDensity) return false;

  out->start_x = static_cast<float>(mx + tmin * ux);
  out->start_y = static_cast<float>(my + tmin * uy);
  out->end_x = static_cast<float>(mx + tmax * ux);
  out->end_y = static_cast<float>(my + tmax * uy);
  return true;
}

float sample_bilinear(const std::vector<float>& field, int width, int height, double x,
                      double y) {
  const int x0 = std::clamp(static_cast<int>(std::floor(x)), 0, width - 2);
  const int y0 = std::clamp(static_cast<int>(std::floor(y)), 0, height - 2);
  const double fx = std::clamp(x - x0, 0.0, 1.0);
  const double fy = std::clamp(y - y0, 0.0, 1.0);
  const std::size_t i = static_cast<std::size_t>(y0) * width + x0;
  const double top = field[i] * (1.0 - fx) + field[i + 1] * fx;
  const double bot = field[i + width] * (1.0 - fx) + field[i + width + 1] * fx;
  return static_cast<float>(top * (1.0 - fy) + bot * fy);
}

BinaryDescriptor describe_line(const GradientField& g, const LineSegment& seg,
                               const ExtractionConfig& cfg) {
  const double theta = seg.orientation();
  const double ux = std::cos(theta);
  const double uy = std::sin(theta);
  const double nx = -uy;  // support-region normal
  const double ny = ux;

  const int steps = std::max(2, static_cast<int>(std::lround(seg.length())));
  const int rows = cfg.band_count * cfg.band_width;
  const double half = (rows - 1) / 2.0;

  // Per row of the support region: sums of directional gradient components.
  struct RowStats {
    double par_pos = 0.0, par_neg = 0.0, perp_pos = 0.0, perp_neg = 0.0;
  };
  std::vector<RowStats> row_stats(static_cast<std::size_t>(rows));

  for (int r = 0; r < rows; ++r) {
    const double offset = r - half;
    RowStats& stats = row_stats[static_cast<std::size_t>(r)];
    for (int s = 0; s < steps; ++s) {
      const double t = seg.length() * (static_cast<double>(s) / (steps - 1));
      const double px = seg.start_x + t * ux + offset * nx;
      const double py = seg.start_y + t * uy + offset * ny;
      if (px < 0 || py < 0 || px > g.width - 1 || py > g.height - 1) continue;
      const double gx = sample_bilinear(g.gx, g.width, g.height, px, py);
      const double gy = sample_bilinear(g.gy, g.width, g.height, px, py);
      const double gpar = gx * ux + gy * uy;
      const double gperp = gx * nx + gy * ny;
      if (gpar >= 0)
        stats.par_pos += gpar;
      else
        stats.par_neg -= gpar;
      if (gperp >= 0)
        stats.perp_pos += gperp;
      else
        stats.perp_neg -= gperp;
    }
  }

  // Band descriptor: mean and standard deviation of the four row sums over
  // each band's rows.
  const int kStatsPerBand = 8;
  std::vector<double> bd(static_cast<std::size_t>(cfg.band_count) * kStatsPerBand, 0.0);
  for (int band = 0; band < cfg.band_count; ++band) {
    double acc[4] = {0, 0, 0, 0};
    double acc2[4] = {0, 0, 0, 0};
    for (int r = band * cfg.band_width; r < (band + 1) * cfg.band_width; ++r) {
      const RowStats& st = row_stats[static_cast<std::size_t>(r)];
      const double v[4] = {st.par_pos, st.par_neg, st.perp_pos, st.perp_neg};
      for (int c = 0; c < 4; ++c) {
        acc[c] += v[c];
        acc2[c] += v[c] * v[c];
      }
    }
    for (int c = 0; c < 4; ++c) {
      const double mean = acc[c] / cfg.band_width;
      const double var = std::max(0.0, acc2[c] / cfg.band_width - mean * mean);
      bd[static_cast<std::size_t>(band) * kStatsPerBand + c] = mean;
      bd[static_cast<std::size_t>(band) * kStatsPerBand + 4 + c] = std::sqrt(var);
    }
  }

  const auto pairs = line_descriptor_band_pairs(cfg.band_count);
  BinaryDescriptor d;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [a, b] = pairs[p];
    for (int c = 0; c < kStatsPerBand; ++c) {
      const double va = bd[static_cast<std::size_t>(a) * kStatsPerBand + c];
      const double vb = bd[static_cast<std::size_t>(b) * kStatsPerBand + c];
      if (va > vb) d.set_bit(static_cast<unsigned>(p * kStatsPerBand + c), true);
    }
  }
  return d;
}

}  // namespace

std::vector<std::pair<int, int>> line_descriptor_band_pairs(int band_count) {
  std::vector<std::pair<int, int>> all;
  for (int dist = 1; dist < band_count; ++dist)
    for (int i = 0; i + dist < band_count; ++i) all.emplace_back(i, i + dist);

  constexpr int kPairs = BinaryDescriptor::kBits / 8;
  std::vector<std::pair<int, int>> out;
  out.reserve(kPairs);
  for (int i = 0; i < kPairs; ++i) out.push_back(all[static_cast<std::size_t>(i) % all.size()]);
  return out;
}

std::vector<LineFeature> extract_lines(const Image& image, const ExtractionConfig& cfg) {
  cfg.validate();
  std::vector<LineFeature> out;
  if (cfg.max_lines == 0 || image.width < 4 || image.height < 4) return out;

  const GradientField g = compute_gradients(image);

  // Seed pixels in decreasing gradient magnitude order.
  std::vector<std::size_t> order;
  for (int y = 1; y < image.height - 1; ++y)
    for (int x = 1; x < image.width - 1; ++x) {
      const std::size_t i = g.idx(x, y);
      if (g.mag[i] >= kGradientThreshold) order.push_back(i);
    }
  std::sort(order.begin(), order.end(), [&g](std::size_t a, std::size_t b) {
    if (g.mag[a] != g.mag[b]) return g.mag[a] > g.mag[b];
    return a < b;
  });

  std::vector<bool> used(g.mag.size(), false);
  std::vector<LineSegment> segments;
  for (std::size_t i : order) {
    if (used[i]) continue;
    const int x = static_cast<int>(i % image.width);
    const int y = static_cast<int>(i / image.width);
    const Region region = grow_region(g, used, x, y);
    LineSegment seg;
    if (fit_segment(g, region, cfg.min_line_length, &seg)) segments.push_back(seg);
  }

  std::sort(segments.begin(), segments.end(), [](const LineSegment& a, const LineSegment& b) {
    if (a.length() != b.length()) return a.length() > b.length();
    if (a.start_y != b.start_y) return a.start_y < b.start_y;
    return a.start_x < b.start_x;
  });
  if (static_cast<int>(segments.size()) > cfg.max_lines)
    segments.resize(static_cast<std::size_t>(cfg.max_lines));

  out.reserve(segments.size());
  for (const LineSegment& seg : segments) {
    LineFeature f;
    f.segment = seg;
    f.descriptor = describe_line(g, seg, cfg);
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace lipo
