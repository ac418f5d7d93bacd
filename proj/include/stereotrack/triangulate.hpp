// Copyright (c) 2026 stereotrack contributors
// SPDX-License-Identifier: Apache-2.0
//
// Linear (DLT) triangulation of consensus-matched track pairs into 3D
// world tracks expressed in the camera-1 frame.

#pragma once

#include <Eigen/Dense>

#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "stereotrack/detail/format.hpp"
#include "stereotrack/stereo.hpp"
#include "stereotrack/types.hpp"

namespace stereotrack::tri {

/// P1 = K1 [I | 0], P2 = K2 [R | t]; camera 1 is the world origin.
struct ProjectionPair {
  Mat34 p1 = Mat34::Zero();
  Mat34 p2 = Mat34::Zero();
};

inline ProjectionPair projection_pair(const StereoRig& rig) {
  ProjectionPair pair;
  Mat34 ext1;
  ext1 << Mat3::Identity(), Vec3::Zero();
  Mat34 ext2;
  ext2 << rig.rotation, rig.translation;
  pair.p1 = rig.k1 * ext1;
  pair.p2 = rig.k2 * ext2;
  return pair;
}

/// Projects a world point; throws NumericalError for points on the
/// principal plane (w = 0).
inline Vec2 project(const Mat34& p, const Vec3& x) {
  const Vec3 h = p * x.homogeneous();
  if (h.z() == 0.0) throw NumericalError("projection: point on principal plane");
  return {h.x() / h.z(), h.y() / h.z()};
}

/// DLT solution from two undistorted pixel observations. The four equation
/// rows are unit-normalized before the SVD, which also makes the result
/// invariant to a common scaling of P1 and P2. The returned homogeneous
/// vector has unit norm; |w| below ~1e-12 means the rays met at infinity.
inline Vec4 triangulate_point(const ProjectionPair& pair, const Vec2& x1, const Vec2& x2) {
  Eigen::Matrix4d a;
  a.row(0) = x1.x() * pair.p1.row(2) - pair.p1.row(0);
  a.row(1) = x1.y() * pair.p1.row(2) - pair.p1.row(1);
  a.row(2) = x2.x() * pair.p2.row(2) - pair.p2.row(0);
  a.row(3) = x2.y() * pair.p2.row(2) - pair.p2.row(1);
  for (int r = 0; r < 4; ++r) {
    const double n = a.row(r).norm();
    if (!(n > 0.0)) throw NumericalError("triangulate_point: degenerate equation row");
    a.row(r) /= n;
  }
  Eigen::JacobiSVD<Eigen::Matrix4d> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv(2) < 1e-12 * sv(0))
    throw NumericalError("triangulate_point: rank-deficient system (identical camera centers?)");
  Vec4 h = svd.matrixV().col(3);
  int max_i = 0;
  h.cwiseAbs().maxCoeff(&max_i);
  if (h(max_i) < 0.0) h = -h;
  return h;
}

/// Homogeneous to Cartesian; |w| at or below 1e-12 signals a point at
/// infinity.
inline Vec3 to_cartesian(const Vec4& h) {
  if (std::abs(h.w()) <= 1e-12)
    throw NumericalError("to_cartesian: point at infinity (|w| <= 1e-12)");
  return {h.x() / h.w(), h.y() / h.w(), h.z() / h.w()};
}

struct Track3DRecord {
  int frame = 0;
  int left_id = 0;
  int right_id = 0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;  // calibration units (assumed mm), camera-1 frame
};

inline bool operator==(const Track3DRecord& a, const Track3DRecord& b) {
  return a.frame == b.frame && a.left_id == b.left_id && a.right_id == b.right_id &&
         a.x == b.x && a.y == b.y && a.z == b.z;
}

struct Track3DSet {
  std::string video_id;
  std::vector<Track3DRecord> records;  // sorted by (frame, left_id)
  double fps = 240.0;
};

struct TriangulationStats {
  size_t attempted = 0;
  size_t produced = 0;
  size_t skipped = 0;  // numerically degenerate pairs, logged and dropped
};

/// Triangulates every frame where a consensus-matched pair is visible in
/// both views. Frames missing either side yield no record; degenerate
/// points are skipped, not fatal.
inline Track3DSet triangulate_tracks(const TrackSet& left, const TrackSet& right,
                                     const std::vector<stereo::ConsensusMatch>& matches,
                                     const StereoRig& rig, TriangulationStats* stats = nullptr,
                                     double fps = 240.0) {
  const ProjectionPair pair = projection_pair(rig);
  std::map<int, int> partner;
  for (const auto& m : matches) partner[m.left_id] = m.right_id;

  std::map<int, std::map<int, const TrackRecord*>> right_index;
  for (const auto& r : right.records) right_index[r.frame][r.id] = &r;

  TriangulationStats local;
  Track3DSet out;
  out.video_id = left.video_id;
  out.fps = fps;
  for (const auto& [frame, lrecs] : left.by_frame()) {
    auto rframe = right_index.find(frame);
    if (rframe == right_index.end()) continue;
    for (const TrackRecord* lr : lrecs) {
      auto pit = partner.find(lr->id);
      if (pit == partner.end()) continue;
      auto rit = rframe->second.find(pit->second);
      if (rit == rframe->second.end()) continue;
      ++local.attempted;
      try {
        const Vec2 x1 = stereo::undistort_point(lr->center(), rig.k1, rig.dist1);
        const Vec2 x2 = stereo::undistort_point(rit->second->center(), rig.k2, rig.dist2);
        const Vec3 p = to_cartesian(triangulate_point(pair, x1, x2));
        out.records.push_back({frame, lr->id, pit->second, p.x(), p.y(), p.z()});
        ++local.produced;
      } catch (const NumericalError&) {
        ++local.skipped;
      }
    }
  }
  if (stats) *stats = local;
  return out;
}

/// CSV in the 3D-table shape: header frame,left_id,right_id,x,y,z and three
/// decimal places on the coordinates.
inline void write_tracks3d(const Track3DSet& ts, std::ostream& out) {
  out << "frame,left_id,right_id,x,y,z\n";
  for (const auto& r : ts.records)
    out << r.frame << ',' << r.left_id << ',' << r.right_id << ','
        << stereotrack::detail::format_fixed(r.x, 3) << ','
        << stereotrack::detail::format_fixed(r.y, 3) << ','
        << stereotrack::detail::format_fixed(r.z, 3) << "\n";
}

inline Track3DSet parse_tracks3d(std::istream& in) {
  Track3DSet out;
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    if (!header_seen) {
      if (line.rfind("frame", 0) != 0)
        throw DataError("3D track file line " + std::to_string(line_no) + ": missing header");
      header_seen = true;
      continue;
    }
    std::vector<double> cols;
    if (!stereotrack::detail::split_numeric_row(line, cols) || cols.size() != 6)
      throw DataError("3D track file line " + std::to_string(line_no) + ": malformed row");
    out.records.push_back({static_cast<int>(cols[0]), static_cast<int>(cols[1]),
                           static_cast<int>(cols[2]), cols[3], cols[4], cols[5]});
  }
  return out;
}

}  // namespace stereotrack::tri
