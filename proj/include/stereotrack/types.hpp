// Copyright (c) 2026 stereotrack contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace stereotrack {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Mat34 = Eigen::Matrix<double, 3, 4>;

/// Malformed or inconsistent input data (bad file, invalid calibration, ...).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure (non-convergence, degenerate geometry, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class View { left, right, mono };

inline std::string to_string(View v) {
  switch (v) {
    case View::left: return "left";
    case View::right: return "right";
    default: return "mono";
  }
}

/// Per-view suffix convention: "<video>_1" is the left camera, "<video>_2"
/// the right one; anything else is a single-camera recording.
inline View view_from_video_id(const std::string& video_id) {
  if (video_id.size() >= 2) {
    const std::string tail = video_id.substr(video_id.size() - 2);
    if (tail == "_1") return View::left;
    if (tail == "_2") return View::right;
  }
  return View::mono;
}

/// One detection in center/half-extent form. Frames are 1-based.
struct TrackRecord {
  int frame = 0;
  int id = 0;
  double cx = 0.0;
  double cy = 0.0;
  double x_off = 0.0;  // half of the bounding box width, > 0
  double y_off = 0.0;  // half of the bounding box height, > 0
  double conf = 1.0;   // carried from tracker output, not used downstream

  Vec2 center() const { return {cx, cy}; }
  double x_tl() const { return cx - x_off; }
  double y_tl() const { return cy - y_off; }
  double width() const { return 2.0 * x_off; }
  double height() const { return 2.0 * y_off; }
};

/// Record identity is the six MOT fields; confidence is payload only.
inline bool operator==(const TrackRecord& a, const TrackRecord& b) {
  return a.frame == b.frame && a.id == b.id && a.cx == b.cx && a.cy == b.cy &&
         a.x_off == b.x_off && a.y_off == b.y_off;
}
inline bool operator!=(const TrackRecord& a, const TrackRecord& b) { return !(a == b); }

/// All detections of one camera view. Records are kept sorted by (frame, id)
/// and must not contain duplicate (frame, id) pairs.
struct TrackSet {
  std::string video_id;
  View view = View::mono;
  std::vector<TrackRecord> records;
  int frame_count = 0;
  int image_width = 1920;
  int image_height = 1080;

  void sort_records() {
    std::sort(records.begin(), records.end(), [](const TrackRecord& a, const TrackRecord& b) {
      return a.frame != b.frame ? a.frame < b.frame : a.id < b.id;
    });
  }

  std::set<int> ids() const {
    std::set<int> out;
    for (const auto& r : records) out.insert(r.id);
    return out;
  }

  /// Records grouped per id, each group in frame order.
  std::map<int, std::vector<const TrackRecord*>> by_id() const {
    std::map<int, std::vector<const TrackRecord*>> out;
    for (const auto& r : records) out[r.id].push_back(&r);
    for (auto& [id, recs] : out)
      std::sort(recs.begin(), recs.end(),
                [](const TrackRecord* a, const TrackRecord* b) { return a->frame < b->frame; });
    return out;
  }

  /// Records grouped per frame, each group in id order.
  std::map<int, std::vector<const TrackRecord*>> by_frame() const {
    std::map<int, std::vector<const TrackRecord*>>it;
    for (const auto& r : records) it[r.frame].push_back(&r);
    for (auto& [f, recs] : it)
      std::sort(recs.begin(), recs.end(),
                [](const TrackRecord* a, const TrackRecord* b) { return a->id < b->id; });
    return it;
  }

  const TrackRecord* find(int frame, int id) const {
    for (const auto& r : records)
      if (r.frame == frame && r.id == id) return &r;
    return nullptr;
  }
};

inline bool operator==(const TrackSet& a, const TrackSet& b) {
  return a.video_id == b.video_id && a.view == b.view && a.frame_count == b.frame_count &&
         a.image_width == b.image_width && a.image_height == b.image_height &&
         a.records == b.records;
}

/// Calibrated stereo pair. Rotation and translation place camera 2 relative
/// to camera 1; translation units are whatever the calibration used
/// (assumed millimeters).
struct StereoRig {
  Mat3 k1 = Mat3::Identity();
  Mat3 k2 = Mat3::Identity();
  Eigen::VectorXd dist1;  // Brown-Conrady k1,k2,p1,p2[,k3]
  Eigen::VectorXd dist2;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  /// Throws DataError on a rig that violates the calibration invariants.
  void validate() const {
    auto check_intrinsics = [](const Mat3& k, const char* name) {
      const double scale = k.cwiseAbs().maxCoeff();
      if (!(scale > 0.0)) throw DataError(std::string(name) + ": singular intrinsic matrix");
      const double tol = 1e-9 * scale;
      if (std::abs(k(1, 0)) > tol || std::abs(k(2, 0)) > tol || std::abs(k(2, 1)) > tol)
        throw DataError(std::string(name) + ": intrinsic matrix is not upper-triangular");
      if (!(k(0, 0) > 0.0) || !(k(1, 1) > 0.0) || !(k(2, 2) > 0.0))
        throw DataError(std::string(name) + ": singular intrinsic matrix (non-positive diagonal)");
    };
    check_intrinsics(k1, "intrinsicMatrix1");
    check_intrinsics(k2, "intrinsicMatrix2");

    auto check_dist = [](const Eigen::VectorXd& d, const char* name) {
      if (d.size() != 4 && d.size() != 5)
        throw DataError(std::string(name) + ": expected 4 or 5 distortion coefficients, got " +
                        std::to_string(d.size()));
    };
    check_dist(dist1, "distortionCoefficients1");
    check_dist(dist2, "distortionCoefficients2");

    const Mat3 rtr = rotation.transpose() * rotation - Mat3::Identity();
    if (rtr.cwiseAbs().maxCoeff() > 1e-9)
      throw DataError("rotationOfCamera2 is not orthonormal");
    if (std::abs(rotation.determinant() - 1.0) > 1e-9)
      throw DataError("rotationOfCamera2 is not a proper rotation (det != +1)");
    if (translation.norm() == 0.0) throw DataError("translationOfCamera2 is zero");
  }
};

}  // namespace stereotrack
