#include "lipo/geometry.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>

namespace lipo {

namespace {

struct Correspondence {
  double qx, qy;  // query image point
  double tx, ty;  // candidate image point
  bool from_line;
  int match_index;  // into point_matches or line_matches
};

// Row-wise nearest and second-nearest by Hamming distance. Ties keep the
// lower train index.
struct RowNeighbours {
  int best = -1;
  int best_dist = std::numeric_limits<int>::max();
  int second_dist = std::numeric_limits<int>::max();
};

template <typename Feature>
std::vector<int> distance_row(const Feature& q, const std::vector<Feature>& train) {
  std::vector<int> row(train.size());
  for (std::size_t j = 0; j < train.size(); ++j)
    row[j] = hamming_distance(q.descriptor, train[j].descriptor);
  return row;
}

bool passes_ratio_or_fallback(const RowNeighbours& n, const GeometryConfig& cfg,
                              std::size_t candidate_count) {
  if (n.best < 0) return false;
  if (candidate_count < 2)
    return n.best_dist <= cfg.single_match_max_distance;
  return static_cast<double>(n.best_dist) < cfg.nndr_ratio * static_cast<double>(n.second_dist);
}

}  // namespace

double relative_orientation(double theta_t, double theta_c, double theta_g) {
  const double m = wrap_angle(theta_t - theta_c + theta_g);
  return std::min(m, kTwoPi - m);
}

std::vector<PointMatch> match_points(const std::vector<PointFeature>& query,
                                     const std::vector<PointFeature>& train,
                                     const GeometryConfig& cfg) {
  std::vector<PointMatch> matches;
  if (query.empty() || train.empty()) return matches;

  std::vector<int> col_best_dist(train.size(), std::numeric_limits<int>::max());
  std::vector<int> col_best_query(train.size(), -1);
  std::vector<RowNeighbours> rows(query.size());

  for (std::size_t i = 0; i < query.size(); ++i) {
    const auto dists = distance_row(query[i], train);
    RowNeighbours& n = rows[i];
    for (std::size_t j = 0; j < train.size(); ++j) {
      const int d = dists[j];
      if (d < n.best_dist) {
        n.second_dist = n.best_dist;
        n.best_dist = d;
        n.best = static_cast<int>(j);
      } else if (d < n.second_dist) {
        n.second_dist = d;
      }
      if (d < col_best_dist[j]) {
        col_best_dist[j] = d;
        col_best_query[j] = static_cast<int>(i);
      }
    }
  }

  for (std::size_t i = 0; i < query.size(); ++i) {
    const RowNeighbours& n = rows[i];
    if (!passes_ratio_or_fallback(n, cfg, train.size())) continue;
    if (col_best_query[static_cast<std::size_t>(n.best)] != static_cast<int>(i)) continue;
    matches.push_back({static_cast<int>(i), n.best, n.best_dist});
  }
  return matches;
}

GlobalRotation estimate_global_rotation(const std::vector<LineFeature>& query,
                                        const std::vector<LineFeature>& train,
                                        const GeometryConfig& cfg) {
  GlobalRotation rotation;
  if (query.empty() || train.empty() || cfg.theta_bin <= 0.0) return rotation;

  const int n_bins = std::max(1, static_cast<int>(std::ceil(kTwoPi / cfg.theta_bin)));
  std::vector<std::vector<double>> bins(static_cast<std::size_t>(n_bins));
  std::size_t total = 0;

  for (const LineFeature& q : query) {
    const double theta_q = q.segment.orientation();
    for (const LineFeature& t : train) {
      if (hamming_distance(q.descriptor, t.descriptor) > cfg.theta_prefilter) continue;
      const double diff = wrap_angle(t.segment.orientation() - theta_q);
      int bin = static_cast<int>(diff / cfg.theta_bin);
      if (bin >= n_bins) bin = n_bins - 1;
      bins[static_cast<std::size_t>(bin)].push_back(diff);
      ++total;
    }
  }
  if (total == 0) return rotation;

  std::size_t dominant = 0;
  for (std::size_t b = 1; b < bins.size(); ++b)
    if (bins[b].size() > bins[dominant].size()) dominant = b;

  const double mass =
      static_cast<double>(bins[dominant].size()) / static_cast<double>(total);
  if (mass < cfg.theta_salience) return rotation;

  double sum_sin = 0.0, sum_cos = 0.0;
  for (double d : bins[dominant]) {
    sum_sin += std::sin(d);
    sum_cos += std::cos(d);
  }
  rotation.angle = wrap_angle(std::atan2(sum_sin, sum_cos));
  rotation.reliable = true;
  return rotation;
}

EndpointPairing pair_endpoints(const LineSegment& query, const LineSegment& train,
                               double theta_g) {
  const double theta_q = query.orientation();
  const double theta_t = train.orientation();
  const double alpha_parallel = relative_orientation(theta_q, theta_t, theta_g);
  // Reversing the candidate segment turns its orientation by pi.
  const double alpha_crossed = relative_orientation(theta_q, theta_t + 3.141592653589793, theta_g);
  return alpha_crossed < alpha_parallel ? EndpointPairing::kCrossed : EndpointPairing::kParallel;
}

std::vector<LineMatch> match_lines(const std::vector<LineFeature>& query,
                                   const std::vector<LineFeature>& train,
                                   const GlobalRotation& rotation, const GeometryConfig& cfg) {
  std::vector<LineMatch> matches;
  if (query.empty() || train.empty()) return matches;

  const double theta_g = rotation.reliable ? rotation.angle : 0.0;
  std::vector<double> train_theta(train.size());
  for (std::size_t j = 0; j < train.size(); ++j) train_theta[j] = train[j].segment.orientation();

  // Orientation-gated admissibility; the gate is dropped when the global
  // rotation was not salient.
  std::vector<std::vector<bool>> admissible(query.size(), std::vector<bool>(train.size(), true));
  if (rotation.reliable) {
    for (std::size_t i = 0; i < query.size(); ++i) {
      const double theta_q = query[i].segment.orientation();
      for (std::size_t j = 0; j < train.size(); ++j)
        admissible[i][j] = relative_orientation(theta_q, train_theta[j], theta_g) <= cfg.alpha_max;
    }
  }

  std::vector<int> col_best_dist(train.size(), std::numeric_limits<int>::max());
  std::vector<int> col_best_query(train.size(), -1);
  std::vector<RowNeighbours> rows(query.size());
  std::vector<std::size_t> row_survivors(query.size(), 0);

  for (std::size_t i = 0; i < query.size(); ++i) {
    const auto dists = distance_row(query[i], train);
    RowNeighbours& n = rows[i];
    for (std::size_t j = 0; j < train.size(); ++j) {
      if (!admissible[i][j]) continue;
      ++row_survivors[i];
      const int d = dists[j];
      if (d < n.best_dist) {
        n.second_dist = n.best_dist;
        n.best_dist = d;
        n.best = static_cast<int>(j);
      } else if (d < n.second_dist) {
        n.second_dist = d;
      }
      if (d < col_best_dist[j]) {
        col_best_dist[j] = d;
        col_best_query[j] = static_cast<int>(i);
      }
    }
  }

  for (std::size_t i = 0; i < query.size(); ++i) {
    const RowNeighbours& n = rows[i];
    if (!passes_ratio_or_fallback(n, cfg, row_survivors[i])) continue;
    if (col_best_query[static_cast<std::size_t>(n.best)] != static_cast<int>(i)) continue;
    LineMatch m;
    m.query_index = static_cast<int>(i);
    m.train_index = n.best;
    m.distance = n.best_dist;
    m.pairing = pair_endpoints(query[i].segment, train[static_cast<std::size_t>(n.best)].segment,
                               theta_g);
    matches.push_back(m);
  }
  return matches;
}

namespace {

// Normalized eight-point estimate over n >= 8 correspondences. Returns
// nullopt on degenerate input (collapsed point sets).
std::optional<Eigen::Matrix3d> estimate_fundamental(const std::vector<Correspondence>& pool,
                                                    const std::vector<std::size_t>& subset) {
  const std::size_t n = subset.size();
  if (n < 8) return std::nullopt;

  // Hartley normalization: zero centroid, sqrt(2) mean distance.
  auto normalize = [&](bool query_side) -> std::optional<Eigen::Matrix3d> {
    double cx = 0.0, cy = 0.0;
    for (std::size_t s : subset) {
      cx += query_side ? pool[s].qx : pool[s].tx;
      cy += query_side ? pool[s].qy : pool[s].ty;
    }
    cx /= static_cast<double>(n);
    cy /= static_cast<double>(n);
    double mean_dist = 0.0;
    for (std::size_t s : subset) {
      const double dx = (query_side ? pool[s].qx : pool[s].tx) - cx;
      const double dy = (query_side ? pool[s].qy : pool[s].ty) - cy;
      mean_dist += std::sqrt(dx * dx + dy * dy);
    }
    mean_dist /= static_cast<double>(n);
    if (mean_dist < 1e-9) return std::nullopt;
    const double scale = std::sqrt(2.0) / mean_dist;
    Eigen::Matrix3d T;
    T << scale, 0, -scale * cx, 0, scale, -scale * cy, 0, 0, 1;
    return T;
  };

  const auto Tq = normalize(true);
  const auto Tt = normalize(false);
  if (!Tq || !Tt) return std::nullopt;

  Eigen::MatrixXd A(static_cast<Eigen::Index>(n), 9);
  for (std::size_t r = 0; r < n; ++r) {
    const Correspondence& c = pool[subset[r]];
    const Eigen::Vector3d q = *Tq * Eigen::Vector3d(c.qx, c.qy, 1.0);
    const Eigen::Vector3d t = *Tt * Eigen::Vector3d(c.tx, c.ty, 1.0);
    A.row(static_cast<Eigen::Index>(r)) << t.x() * q.x(), t.x() * q.y(), t.x(),
        t.y() * q.x(), t.y() * q.y(), t.y(), q.x(), q.y(), 1.0;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const Eigen::VectorXd f = svd.matrixV().col(8);
  Eigen::Matrix3d F;
  F << f(0), f(1), f(2), f(3), f(4), f(5), f(6), f(7), f(8);

  // Rank-2 enforcement: drop the smallest singular value.
  Eigen::JacobiSVD<Eigen::Matrix3d> fsvd(F, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Vector3d sv = fsvd.singularValues();
  sv(2) = 0.0;
  F = fsvd.matrixU() * sv.asDiagonal() * fsvd.matrixV().transpose();

  // Undo normalization: t^T F q = 0 with t = Tt x_t, q = Tq x_q.
  F = Tt->transpose() * F * *Tq;

  const double norm = F.norm();
  if (norm < 1e-15 || !std::isfinite(norm)) return std::nullopt;
  F /= norm;

  // Canonical sign: largest-magnitude entry positive.
  double max_abs = 0.0;
  double sign = 1.0;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      if (std::abs(F(r, c)) > max_abs) {
        max_abs = std::abs(F(r, c));
        sign = F(r, c) >= 0 ? 1.0 : -1.0;
      }
  F *= sign;
  return F;
}

double symmetric_epipolar_distance(const Eigen::Matrix3d& F, const Correspondence& c) {
  const Eigen::Vector3d q(c.qx, c.qy, 1.0);
  const Eigen::Vector3d t(c.tx, c.ty, 1.0);
  const Eigen::Vector3d line_t = F * q;        // epipolar line in the candidate image
  const Eigen::Vector3d line_q = F.transpose() * t;
  const double nt = std::hypot(line_t.x(), line_t.y());
  const double nq = std::hypot(line_q.x(), line_q.y());
  if (nt < 1e-15 || nq < 1e-15) return std::numeric_limits<double>::max();
  const double dt = std::abs(t.dot(line_t)) / nt;
  const double dq = std::abs(q.dot(line_q)) / nq;
  return 0.5 * (dt + dq);
}

std::vector<bool> inlier_flags(const Eigen::Matrix3d& F, const std::vector<Correspondence>& pool,
                               double tolerance) {
  std::vector<bool> flags(pool.size(), false);
  for (std::size_t i = 0; i < pool.size(); ++i)
    flags[i] = symmetric_epipolar_distance(F, pool[i]) <= tolerance;
  return flags;
}

}  // namespace

VerificationResult verify_epipolar(const FrameFeatures& query, const FrameFeatures& train,
                                   const MatchSet& matches, double theta_g,
                                   const GeometryConfig& cfg) {
  VerificationResult result;
  result.theta_g = theta_g;

  std::vector<Correspondence> pool;
  pool.reserve(matches.point_matches.size() + 2 * matches.line_matches.size());
  for (std::size_t m = 0; m < matches.point_matches.size(); ++m) {
    const PointMatch& pm = matches.point_matches[m];
    const KeyPoint& q = query.points[static_cast<std::size_t>(pm.query_index)].keypoint;
    const KeyPoint& t = train.points[static_cast<std::size_t>(pm.train_index)].keypoint;
    pool.push_back({q.x, q.y, t.x, t.y, false, static_cast<int>(m)});
  }
  for (std::size_t m = 0; m < matches.line_matches.size(); ++m) {
    const LineMatch& lm = matches.line_matches[m];
    const LineSegment& q = query.lines[static_cast<std::size_t>(lm.query_index)].segment;
    const LineSegment& t = train.lines[static_cast<std::size_t>(lm.train_index)].segment;
    if (lm.pairing == EndpointPairing::kParallel) {
      pool.push_back({q.start_x, q.start_y, t.start_x, t.start_y, true, static_cast<int>(m)});
      pool.push_back({q.end_x, q.end_y, t.end_x, t.end_y, true, static_cast<int>(m)});
    } else {
      pool.push_back({q.start_x, q.start_y, t.end_x, t.end_y, true, static_cast<int>(m)});
      pool.push_back({q.end_x, q.end_y, t.start_x, t.start_y, true, static_cast<int>(m)});
    }
  }

  if (pool.size() < 8) return result;

  std::mt19937_64 rng(cfg.ransac_seed);
  std::vector<std::size_t> indices(pool.size());
  for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;

  std::optional<Eigen::Matrix3d> best_F;
  std::size_t best_support = 0;
  double required = static_cast<double>(cfg.ransac_max_iterations);

  for (int iter = 0; iter < cfg.ransac_max_iterations && iter < required; ++iter) {
    // Partial Fisher-Yates draw of 8 distinct correspondences.
    for (std::size_t k = 0; k < 8; ++k) {
      const std::size_t j = k + static_cast<std::size_t>(rng() % (indices.size() - k));
      std::swap(indices[k], indices[j]);
    }
    const std::vector<std::size_t> sample(indices.begin(), indices.begin() + 8);
    const auto F = estimate_fundamental(pool, sample);
    if (!F) continue;

    std::size_t support = 0;
    for (const Correspondence& c : pool)
      if (symmetric_epipolar_distance(*F, c) <= cfg.epi_tolerance) ++support;

    if (support > best_support) {
      best_support = support;
      best_F = F;
      const double w = static_cast<double>(support) / static_cast<double>(pool.size());
      const double p_sample = std::pow(w, 8.0);
      if (p_sample >= 1.0 - 1e-12) {
        required = 0;
      } else if (p_sample > 0.0) {
        required = std::log(1.0 - cfg.ransac_confidence) / std::log(1.0 - p_sample);
      }
    }
  }

  if (!best_F || best_support < 8) return result;

  // Refit on the full consensus set, then recount against the refit model.
  std::vector<bool> flags = inlier_flags(*best_F, pool, cfg.epi_tolerance);
  std::vector<std::size_t> consensus;
  for (std::size_t i = 0; i < pool.size(); ++i)
    if (flags[i]) consensus.push_back(i);
  if (const auto refit = estimate_fundamental(pool, consensus)) {
    best_F = refit;
    flags = inlier_flags(*best_F, pool, cfg.epi_tolerance);
  }

  std::vector<bool> line_inlier(matches.line_matches.size(), false);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (!flags[i]) continue;
    if (pool[i].from_line)
      line_inlier[static_cast<std::size_t>(pool[i].match_index)] = true;
    else
      ++result.point_inliers;
  }
  for (bool b : line_inlier)
    if (b) ++result.line_inliers;

  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) result.fundamental[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = (*best_F)(r, c);
  result.accepted = result.point_inliers + result.line_inliers >= cfg.min_inliers;
  return result;
}

VerificationResult verify_candidate(const FrameFeatures& query, const FrameFeatures& train,
                                    const GeometryConfig& cfg, MatchSet* matches_out) {
  MatchSet matches;
  matches.point_matches = match_points(query.points, train.points, cfg);
  const GlobalRotation rotation = estimate_global_rotation(query.lines, train.lines, cfg);
  matches.line_matches = match_lines(query.lines, train.lines, rotation, cfg);
  const double theta_g = rotation.reliable ? rotation.angle : 0.0;
  VerificationResult result = verify_epipolar(query, train, matches, theta_g, cfg);
  if (matches_out != nullptr) *matches_out = std::move(matches);
  return result;
}

}  // namespace lipo
