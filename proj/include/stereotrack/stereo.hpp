// Copyright (c) 2026 stereotrack contributors
// SPDX-License-Identifier: Apache-2.0
//
// Cross-view id association. The fundamental matrix is derived analytically
// from the calibrated rig; left detections predict epipolar lines in the
// right image, candidates are kept by point-line residual, per-frame winners
// are reduced to one consensus partner per left id.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "stereotrack/assignment.hpp"
#include "stereotrack/detail/format.hpp"
#include "stereotrack/types.hpp"

namespace stereotrack::stereo {

/// Rank-2 matrix linking the two views, Frobenius-normalized with the
/// largest-magnitude entry kept positive so equal geometries compare equal.
struct FundamentalMatrix {
  Mat3 f = Mat3::Zero();
};

inline Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

/// F = K2^-T [t]x R K1^-1, so that x2' F x1 = 0 for any correspondence of
/// undistorted pixel points.
inline FundamentalMatrix fundamental_from_rig(const StereoRig& rig) {
  rig.validate();
  Mat3 f = rig.k2.inverse().transpose() * skew(rig.translation) * rig.rotation *
           rig.k1.inverse();
  const double norm = f.norm();
  if (!(norm > 0.0)) throw NumericalError("fundamental matrix vanished");
  f /= norm;
  int max_r = 0, max_c = 0;
  f.cwiseAbs().maxCoeff(&max_r, &max_c);
  if (f(max_r, max_c) < 0.0) f = -f;
  return {f};
}

/// Line a*x + b*y + c = 0 with a^2 + b^2 = 1; |a*x + b*y + c| is then a
/// pixel distance.
struct EpipolarLine {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
};

inline EpipolarLine epipolar_line(const FundamentalMatrix& fm, const Vec2& p_left) {
  const Vec3 l = fm.f * Vec3(p_left.x(), p_left.y(), 1.0);
  const double n = std::hypot(l.x(), l.y());
  if (n < 1e-15 * std::max(1.0, std::abs(l.z())))
    throw NumericalError("point coincides with the epipole; epipolar line undefined");
  double a = l.x() / n, b = l.y() / n, c = l.z() / n;
  if (a < 0.0 || (a == 0.0 && b < 0.0)) {
    a = -a;
    b = -b;
    c = -c;
  }
  return {a, b, c};
}

inline double point_line_distance(const EpipolarLine& l, const Vec2& p) {
  return std::abs(l.a * p.x() + l.b * p.y() + l.c);
}

namespace detail {

struct Normalized {
  double x = 0.0;
  double y = 0.0;
};

inline Normalized to_normalized(const Vec2& p, const Mat3& k) {
  const double y = (p.y() - k(1, 2)) / k(1, 1);
  const double x = (p.x() - k(0, 2) - k(0, 1) * y) / k(0, 0);
  return {x, y};
}

inline Vec2 to_pixel(const Normalized& n, const Mat3& k) {
  return {k(0, 0) * n.x + k(0, 1) * n.y + k(0, 2), k(1, 1) * n.y + k(1, 2)};
}

/// Brown-Conrady forward model on normalized coordinates.
inline Normalized apply_distortion(const Normalized& n, const Eigen::VectorXd& d) {
  const double k1 = d.size() > 0 ? d[0] : 0.0;
  const double k2 = d.size() > 1 ? d[1] : 0.0;
  const double p1 = d.size() > 2 ? d[2] : 0.0;
  const double p2 = d.size() > 3 ? d[3] : 0.0;
  const double k3 = d.size() > 4 ? d[4] : 0.0;
  const double r2 = n.x * n.x + n.y * n.y;
  const double radial = 1.0 + r2 * (k1 + r2 * (k2 + r2 * k3));
  const double xd = n.x * radial + 2.0 * p1 * n.x * n.y + p2 * (r2 + 2.0 * n.x * n.x);
  const double yd = n.y * radial + p1 * (r2 + 2.0 * n.y * n.y) + 2.0 * p2 * n.x * n.y;
  return {xd, yd};
}

}  // namespace detail

/// Forward distortion of an ideal pixel point (the model undistort_point
/// inverts; also used to synthesize detections).
inline Vec2 distort_point(const Vec2& p, const Mat3& k, const Eigen::VectorXd& dist) {
  if (dist.size() == 0 || dist.isZero(0.0)) return p;
  return detail::to_pixel(detail::apply_distortion(detail::to_normalized(p, k), dist), k);
}

/// Removes Brown-Conrady distortion by fixed-point iteration in normalized
/// coordinates. Zero coefficients return the input unchanged.
inline Vec2 undistort_point(const Vec2& p, const Mat3& k, const Eigen::VectorXd& dist) {
  if (dist.size() != 4 && dist.size() != 5)
    throw DataError("undistort_point: expected 4 or 5 distortion coefficients");
  if (dist.isZero(0.0)) return p;

  const detail::Normalized obs = detail::to_normalized(p, k);
  const double k1 = dist[0], k2 = dist[1], p1 = dist[2], p2 = dist[3];
  const double k3 = dist.size() > 4 ? dist[4] : 0.0;

  double x = obs.x, y = obs.y;
  constexpr int kMaxIter = 50;
  constexpr double kTol = 1e-14;
  for (int it = 0; it < kMaxIter; ++it) {
    const double r2 = x * x + y * y;
    const double radial = 1.0 + r2 * (k1 + r2 * (k2 + r2 * k3));
    const double dx = 2.0 * p1 * x * y + p2 * (r2 + 2.0 * x * x);
    const double dy = p1 * (r2 + 2.0 * y * y) + 2.0 * p2 * x * y;
    const double nx = (obs.x - dx) / radial;
    const double ny = (obs.y - dy) / radial;
    const double step = std::max(std::abs(nx - x), std::abs(ny - y));
    x = nx;
    y = ny;
    if (step < kTol) return detail::to_pixel({x, y}, k);
  }
  throw NumericalError("undistort_point: no convergence in 50 iterations");
}

struct FrameMatch {
  int frame = 0;
  int left_id = 0;
  int right_id = 0;
  double residual = 0.0;  // pixels from the epipolar line
};

struct ConsensusMatch {
  int left_id = 0;
  int right_id = 0;
  int support = 0;  // frames voting for this pairing
  int total = 0;    // frames where the left id had any match
};

enum class MatchMode {
  greedy_one_to_one,   // accept candidate pairs by ascending residual
  optimal_one_to_one,  // minimum-cost assignment over candidate pairs
  per_left_min,        // per-left minimum, right ids may repeat
};

struct MatchConfig {
  double threshold = 10.0;  // max residual in pixels
  MatchMode mode = MatchMode::greedy_one_to_one;
};

struct Detection {
  int id = 0;
  Vec2 center = Vec2::Zero();
};

/// Matches one frame. Detection centers are undistorted internally; a left
/// detection sitting on the epipole is skipped. Output is sorted by left id
/// and independent of input order.
inline std::vector<FrameMatch> match_frame(int frame, std::vector<Detection> left,
                                           std::vector<Detection> right,
                                           const FundamentalMatrix& fm, const StereoRig& rig,
                                           const MatchConfig& cfg = {}) {
  auto by_id = [](const Detection& a, const Detection& b) { return a.id < b.id; };
  std::sort(left.begin(), left.end(), by_id);
  std::sort(right.begin(), right.end(), by_id);

  std::vector<Vec2> right_pts(right.size());
  for (size_t j = 0; j < right.size(); ++j)
    right_pts[j] = undistort_point(right[j].center, rig.k2, rig.dist2);

  struct Candidate {
    double residual;
    int li, rj;
  };
  std::vector<Candidate> cands;
  std::vector<std::optional<EpipolarLine>> lines(left.size());
  for (size_t i = 0; i < left.size(); ++i) {
    const Vec2 lp = undistort_point(left[i].center, rig.k1, rig.dist1);
    try {
      lines[i] = epipolar_line(fm, lp);
    } catch (const NumericalError&) {
      continue;
    }
    for (size_t j = 0; j < right.size(); ++j) {
      const double d = point_line_distance(*lines[i], right_pts[j]);
      if (d <= cfg.threshold) cands.push_back({d, static_cast<int>(i), static_cast<int>(j)});
    }
  }

  std::vector<FrameMatch> out;
  auto emit = [&](const Candidate& c) {
    out.push_back({frame, left[c.li].id, right[c.rj].id, c.residual});
  };

  switch (cfg.mode) {
    case MatchMode::per_left_min: {
      for (size_t i = 0; i < left.size(); ++i) {
        const Candidate* best = nullptr;
        for (const auto& c : cands)
          if (c.li == static_cast<int>(i) && (!best || c.residual < best->residual))
            best = &c;  // equal residuals keep the smaller right id (scan order)
        if (best) emit(*best);
      }
      break;
    }
    case MatchMode::greedy_one_to_one: {
      std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
        if (a.residual != b.residual) return a.residual < b.residual;
        if (a.li != b.li) return a.li < b.li;
        return a.rj < b.rj;
      });
      std::vector<char> left_used(left.size(), 0), right_used(right.size(), 0);
      for (const auto& c : cands) {
        if (left_used[c.li] || right_used[c.rj]) continue;
        left_used[c.li] = right_used[c.rj] = 1;
        emit(c);
      }
      break;
    }
    case MatchMode::optimal_one_to_one: {
      if (!cands.empty()) {
        // Ineligible pairs carry a cost no optimal solution touches unless
        // forced; such assignments are filtered afterwards.
        constexpr double kBig = 1e9;
        std::vector<std::vector<double>> cost(left.size(),
                                              std::vector<double>(right.size(), kBig));
        for (const auto& c : cands) cost[c.li][c.rj] = c.residual;
        const std::vector<int> row_to_col = solve_assignment(cost);
        for (size_t i = 0; i < left.size(); ++i) {
          const int j = row_to_col[i];
          if (j < 0 || cost[i][j] >= kBig) continue;
          emit({cost[i][j], static_cast<int>(i), j});
        }
      }
      break;
    }
  }
  std::sort(out.begin(), out.end(),
            [](const FrameMatch& a, const FrameMatch& b) { return a.left_id < b.left_id; });
  return out;
}

/// Runs match_frame over every frame of the pair.
inline std::vector<FrameMatch> match_tracks(const TrackSet& left, const TrackSet& right,
                                            const StereoRig& rig, const MatchConfig& cfg = {}) {
  const FundamentalMatrix fm = fundamental_from_rig(rig);
  const auto left_frames = left.by_frame();
  const auto right_frames = right.by_frame();
  std::vector<FrameMatch> out;
  for (const auto& [frame, lrecs] : left_frames) {
    auto rit = right_frames.find(frame);
    if (rit == right_frames.end()) continue;
    std::vector<Detection> l, r;
    l.reserve(lrecs.size());
    r.reserve(rit->second.size());
    for (const auto* rec : lrecs) l.push_back({rec->id, rec->center()});
    for (const auto* rec : rit->second) r.push_back({rec->id, rec->center()});
    auto matches = match_frame(frame, std::move(l), std::move(r), fm, rig, cfg);
    out.insert(out.end(), matches.begin(), matches.end());
  }
  return out;
}

/// Reduces per-frame matches to the modal right id per left id. Ties pick
/// the smaller right id; left ids without any frame match are omitted.
inline std::vector<ConsensusMatch> consensus(const std::vector<FrameMatch>& per_frame) {
  std::map<int, std::map<int, int>> votes;  // left -> right -> count
  std::map<int, int> totals;
  for (const auto& m : per_frame) {
    ++votes[m.left_id][m.right_id];
    ++totals[m.left_id];
  }
  std::vector<ConsensusMatch> out;
  for (const auto& [left_id, counts] : votes) {
    int best_right = -1, best_votes = -1;
    for (const auto& [right_id, n] : counts) {
      if (n > best_votes) {  // map order makes ties favour the smaller id
        best_votes = n;
        best_right = right_id;
      }
    }
    out.push_back({left_id, best_right, best_votes, totals.at(left_id)});
  }
  return out;
}

inline void write_frame_matches(const std::vector<FrameMatch>& matches, std::ostream& out) {
  out << "frame,left_id,right_id,residual\n";
  for (const auto& m : matches)
    out << m.frame << ',' << m.left_id << ',' << m.right_id << ','
        << stereotrack::detail::format_number(m.residual) << "\n";
}

inline void write_consensus(const std::vector<ConsensusMatch>& matches, std::ostream& out) {
  out << "left_id,right_id,support,total\n";
  for (const auto& m : matches)
    out << m.left_id << ',' << m.right_id << ',' << m.support << ',' << m.total << "\n";
}

/// Reads a match table in the consensus CSV schema; support/total columns
/// are optional so hand-made tables just list left_id,right_id pairs.
inline std::vector<ConsensusMatch> parse_match_table(std::istream& in) {
  std::vector<ConsensusMatch> out;
  std::string line;
  int line_no = 0;
  bool header_skipped = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (!header_skipped && line.rfind("left_id", 0) == 0) {
      header_skipped = true;
      continue;
    }
    header_skipped = true;
    std::vector<double> cols;
    if (!stereotrack::detail::split_numeric_row(line, cols) || cols.size() < 2)
      throw DataError("match table line " + std::to_string(line_no) + ": malformed row");
    ConsensusMatch m;
    m.left_id = static_cast<int>(cols[0]);
    m.right_id = static_cast<int>(cols[1]);
    if (cols.size() > 2) m.support = static_cast<int>(cols[2]);
    if (cols.size() > 3) m.total = static_cast<int>(cols[3]);
    out.push_back(m);
  }
  return out;
}

}  // namespace stereotrack::stereo
