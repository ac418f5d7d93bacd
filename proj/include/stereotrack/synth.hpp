// Copyright (c) 2026 stereotrack contributors
// SPDX-License-Identifier: Apache-2.0
//
// Deterministic synthetic stereo scenes: known 3D trajectories projected
// through a calibrated rig (forward distortion included), plus controlled
// degradation (id fragmentation, dropouts, false-positive blips, pixel
// noise) with full logs, so tests can assert exact recovery targets.

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stereotrack/mot_io.hpp"
#include "stereotrack/stereo.hpp"
#include "stereotrack/triangulate.hpp"
#include "stereotrack/types.hpp"

namespace stereotrack::synth {

enum class TrajectoryModel { linear, helical, random_walk };

inline std::string to_string(TrajectoryModel m) {
  switch (m) {
    case TrajectoryModel::linear: return "linear";
    case TrajectoryModel::helical: return "helical";
    default: return "random-walk";
  }
}

inline TrajectoryModel trajectory_model_from_string(const std::string& s) {
  if (s == "linear") return TrajectoryModel::linear;
  if (s == "helical") return TrajectoryModel::helical;
  if (s == "random-walk" || s == "random_walk") return TrajectoryModel::random_walk;
  throw DataError("unknown trajectory model '" + s + "'");
}

struct FragmentSpec {
  int id = 0;          // true fish id (left id space)
  int split_frame = 0; // records from this frame on get a fresh id
};

struct DropoutSpec {
  int id = 0;
  int from = 0;
  int to = 0;  // inclusive
};

struct BlipSpec {
  int count = 0;
  int min_len = 5;
  int max_len = 20;
};

/// Converging stereo pair roughly mimicking the recording setup: 1920x1080,
/// ~110 mm baseline, mild Brown-Conrady distortion, subjects ~2 m away.
inline StereoRig default_rig() {
  StereoRig rig;
  rig.k1 << 1200.0, 0.0, 960.0, 0.0, 1200.0, 540.0, 0.0, 0.0, 1.0;
  rig.k2 << 1180.0, 0.0, 950.0, 0.0, 1185.0, 542.0, 0.0, 0.0, 1.0;
  rig.dist1 = Eigen::VectorXd(5);
  rig.dist1 << -0.02, 0.004, 0.0002, -0.0001, 0.0008;
  rig.dist2 = Eigen::VectorXd(4);
  rig.dist2 << -0.018, 0.0035, -0.00015, 0.00012;
  const double theta = 0.04;  // converge toward the tank
  rig.rotation << std::cos(theta), 0.0, std::sin(theta), 0.0, 1.0, 0.0, -std::sin(theta), 0.0,
      std::cos(theta);
  const Vec3 center2(110.0, 0.0, 0.0);
  rig.translation = -rig.rotation * center2;
  return rig;
}

struct SceneConfig {
  int n_fish = 9;
  int n_frames = 260;
  TrajectoryModel model = TrajectoryModel::helical;
  StereoRig rig = default_rig();
  double noise_px = 0.0;
  std::vector<FragmentSpec> fragmentation;
  std::vector<DropoutSpec> dropouts;
  BlipSpec blips;
  std::uint64_t seed = 1;
  int image_width = 1920;
  int image_height = 1080;
  double fps = 240.0;
  double fish_size = 80.0;  // physical cross-section, calibration units

  void validate() const {
    if (n_fish < 0 || n_frames < 1) throw DataError("SceneConfig: bad fish/frame counts");
    if (noise_px < 0.0) throw DataError("SceneConfig: negative noise");
    if (fish_size <= 0.0) throw DataError("SceneConfig: fish_size must be positive");
    for (const auto& f : fragmentation)
      if (f.id < 0 || f.id >= n_fish || f.split_frame < 2 || f.split_frame > n_frames)
        throw DataError("SceneConfig: fragmentation spec out of range");
    for (const auto& d : dropouts)
      if (d.id < 0 || d.id >= n_fish || d.from < 1 || d.to > n_frames || d.from > d.to)
        throw DataError("SceneConfig: dropout spec out of range");
    if (blips.count < 0 || blips.min_len < 1 || blips.min_len > blips.max_len)
      throw DataError("SceneConfig: blip spec out of range");
    if (blips.count > 0 && blips.max_len > n_frames)
      throw DataError("SceneConfig: blips longer than the video");
    rig.validate();
  }
};

struct HelixParams {
  Vec3 center = Vec3::Zero();
  Vec3 u = Vec3::UnitX(), v = Vec3::UnitY(), w = Vec3::UnitZ();
  double radius = 0.0;
  double omega = 0.0;        // radians per frame
  double phase = 0.0;
  double axial_speed = 0.0;  // units per frame

  Vec3 position(int frame) const {
    const double t = frame - 1.0;
    const double ang = omega * t + phase;
    return center + radius * (std::cos(ang) * u + std::sin(ang) * v) + axial_speed * t * w;
  }
  /// Closed-form magnitudes for the kinematics oracle.
  double speed_per_second(double fps) const {
    return std::hypot(radius * omega, axial_speed) * fps;
  }
  double arc_length(int n_frames) const {
    return std::hypot(radius * omega, axial_speed) * (n_frames - 1.0);
  }
};

struct LinearParams {
  Vec3 start = Vec3::Zero();
  Vec3 step = Vec3::Zero();  // units per frame
  Vec3 position(int frame) const { return start + (frame - 1.0) * step; }
};

struct SceneTruth {
  SceneConfig cfg;
  std::vector<std::vector<Vec3>> positions;  // [fish][frame-1], camera-1 frame
  TrackSet left;                             // ideal projections, no corruption
  TrackSet right;
  std::map<int, int> correspondence;  // left id -> right id
  std::vector<HelixParams> helices;   // filled for the helical model
  std::vector<LinearParams> lines;    // filled for the linear model

  /// True 3D table restricted to frames visible in both views.
  tri::Track3DSet true_tracks3d() const {
    tri::Track3DSet out;
    out.fps = cfg.fps;
    std::map<int, std::map<int, bool>> left_vis, right_vis;
    for (const auto& r : left.records) left_vis[r.frame][r.id] = true;
    for (const auto& r : right.records) right_vis[r.frame][r.id] = true;
    for (int f = 1; f <= cfg.n_frames; ++f)
      for (int fish = 0; fish < cfg.n_fish; ++fish) {
        const int rid = correspondence.at(fish);
        if (!left_vis[f].count(fish) || !right_vis[f].count(rid)) continue;
        const Vec3& p = positions[fish][f - 1];
        out.records.push_back({f, fish, rid, p.x(), p.y(), p.z()});
      }
    return out;
  }
};

namespace detail {

struct Box {
  double x_lo = -450.0, x_hi = 550.0;
  double y_lo = -300.0, y_hi = 300.0;
  double z_lo = 1800.0, z_hi = 2800.0;
};

inline Vec3 random_in_box(std::mt19937_64& rng, const Box& b, double margin) {
  std::uniform_real_distribution<double> ux(b.x_lo + margin, b.x_hi - margin);
  std::uniform_real_distribution<double> uy(b.y_lo + margin, b.y_hi - margin);
  std::uniform_real_distribution<double> uz(b.z_lo + margin, b.z_hi - margin);
  return {ux(rng), uy(rng), uz(rng)};
}

inline Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vec3 v;
  do {
    v = Vec3(g(rng), g(rng), g(rng));
  } while (v.norm() < 1e-6);
  return v.normalized();
}

/// Projects into one view; empty when behind the camera or outside the
/// image.
inline std::optional<TrackRecord> project_view(const Vec3& world, int frame, int id,
                                               const Mat3& k, const Eigen::VectorXd& dist,
                                               const Mat3& rot, const Vec3& trans,
                                               const SceneConfig& cfg) {
  const Vec3 cam = rot * world + trans;
  if (cam.z() <= 0.0) return std::nullopt;
  const Vec2 ideal(k(0, 0) * cam.x() / cam.z() + k(0, 1) * cam.y() / cam.z() + k(0, 2),
                   k(1, 1) * cam.y() / cam.z() + k(1, 2));
  const Vec2 px = stereo::distort_point(ideal, k, dist);
  if (px.x() < 0.0 || px.x() >= cfg.image_width || px.y() < 0.0 || px.y() >= cfg.image_height)
    return std::nullopt;
  TrackRecord r;
  r.frame = frame;
  r.id = id;
  r.cx = px.x();
  r.cy = px.y();
  // Apparent size shrinks with depth.
  r.x_off = cfg.fish_size * k(0, 0) / (2.0 * cam.z());
  r.y_off = cfg.fish_size * k(1, 1) / (2.0 * cam.z());
  return r;
}

}  // namespace detail

/// Builds the scene: trajectories, both projections, correspondence log.
/// Deterministic for a fixed seed.
inline SceneTruth generate(const SceneConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  const detail::Box box;

  SceneTruth truth;
  truth.cfg = cfg;
  truth.positions.assign(cfg.n_fish, std::vector<Vec3>(cfg.n_frames));

  for (int fish = 0; fish < cfg.n_fish; ++fish) {
    switch (cfg.model) {
      case TrajectoryModel::linear: {
        LinearParams lp;
        lp.start = detail::random_in_box(rng, box, 100.0);
        const Vec3 end = detail::random_in_box(rng, box, 100.0);
        lp.step = cfg.n_frames > 1 ? Vec3((end - lp.start) / (cfg.n_frames - 1.0)) : Vec3::Zero();
        for (int f = 1; f <= cfg.n_frames; ++f) truth.positions[fish][f - 1] = lp.position(f);
        truth.lines.push_back(lp);
        break;
      }
      case TrajectoryModel::helical: {
        HelixParams hp;
        std::uniform_real_distribution<double> ur(60.0, 140.0);
        std::uniform_real_distribution<double> uw(0.015, 0.03);
        std::uniform_real_distribution<double> uph(0.0, 2.0 * M_PI);
        std::uniform_real_distribution<double> uax(0.05, 0.3);
        hp.radius = ur(rng);
        hp.omega = uw(rng);
        hp.phase = uph(rng);
        hp.axial_speed = uax(rng);
        hp.w = detail::random_unit(rng);
        Vec3 helper = std::abs(hp.w.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
        hp.u = hp.w.cross(helper).normalized();
        hp.v = hp.w.cross(hp.u);
        const double margin = hp.radius + hp.axial_speed * cfg.n_frames + 20.0;
        hp.center = detail::random_in_box(rng, box, std::min(margin, 450.0));
        for (int f = 1; f <= cfg.n_frames; ++f) truth.positions[fish][f - 1] = hp.position(f);
        truth.helices.push_back(hp);
        break;
      }
      case TrajectoryModel::random_walk: {
        std::normal_distribution<double> step(0.0, 3.0);
        Vec3 p = detail::random_in_box(rng, box, 100.0);
        for (int f = 1; f <= cfg.n_frames; ++f) {
          truth.positions[fish][f - 1] = p;
          for (int axis = 0; axis < 3; ++axis) {
            p[axis] += step(rng);
            const double lo = axis == 0 ? box.x_lo : axis == 1 ? box.y_lo : box.z_lo;
            const double hi = axis == 0 ? box.x_hi : axis == 1 ? box.y_hi : box.z_hi;
            if (p[axis] < lo) p[axis] = 2.0 * lo - p[axis];
            if (p[axis] > hi) p[axis] = 2.0 * hi - p[axis];
          }
        }
        break;
      }
    }
  }

  // Right-view ids are an arbitrary relabeling of the fish.
  std::vector<int> perm(cfg.n_fish);
  for (int i = 0; i < cfg.n_fish; ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  for (int i = 0; i < cfg.n_fish; ++i) truth.correspondence[i] = perm[i];

  auto setup = [&](TrackSet& ts, View view) {
    ts.view = view;
    ts.frame_count = cfg.n_frames;
    ts.image_width = cfg.image_width;
    ts.image_height = cfg.image_height;
  };
  setup(truth.left, View::left);
  setup(truth.right, View::right);
  truth.left.video_id = "synth_1";
  truth.right.video_id = "synth_2";

  std::vector<bool> ever_visible(cfg.n_fish, false);
  for (int fish = 0; fish < cfg.n_fish; ++fish) {
    for (int f = 1; f <= cfg.n_frames; ++f) {
      const Vec3& p = truth.positions[fish][f - 1];
      if (auto rec = detail::project_view(p, f, fish, cfg.rig.k1, cfg.rig.dist1,
                                          Mat3::Identity(), Vec3::Zero(), cfg)) {
        truth.left.records.push_back(*rec);
        ever_visible[fish] = true;
      }
      if (auto rec = detail::project_view(p, f, truth.correspondence[fish], cfg.rig.k2,
                                          cfg.rig.dist2, cfg.rig.rotation, cfg.rig.translation,
                                          cfg)) {
        truth.right.records.push_back(*rec);
        ever_visible[fish] = true;
      }
    }
  }
  for (int fish = 0; fish < cfg.n_fish; ++fish)
    if (!ever_visible[fish])
      throw DataError("synth: fish " + std::to_string(fish) +
                      " projects outside both images for all frames");
  truth.left.sort_records();
  truth.right.sort_records();
  return truth;
}

struct FragmentEvent {
  int true_id = 0;   // original id in this view
  int prev_id = 0;   // id of the fragment preceding the split
  int new_id = 0;
  int split_frame = 0;
};

struct DegradeLog {
  std::map<int, int> id_to_true;                  // every non-blip id -> original view id
  std::vector<FragmentEvent> fragments;
  std::map<int, std::vector<int>> dropped_frames;  // original view id -> frames removed
  std::vector<int> blip_ids;
  double noise_px = 0.0;
};

struct DegradedScene {
  TrackSet left;
  TrackSet right;
  DegradeLog left_log;
  DegradeLog right_log;
};

namespace detail {

inline TrackSet degrade_view(const TrackSet& ideal, const SceneConfig& cfg,
                             const std::map<int, int>& view_id_of_true, DegradeLog& log,
                             std::mt19937_64& rng) {
  TrackSet ts = ideal;
  log.noise_px = cfg.noise_px;

  if (cfg.noise_px > 0.0) {
    std::normal_distribution<double> noise(0.0, cfg.noise_px);
    for (auto& r : ts.records) {
      r.cx += noise(rng);
      r.cy += noise(rng);
    }
  }

  for (int id : ts.ids()) log.id_to_true[id] = id;

  for (const auto& d : cfg.dropouts) {
    const int vid = view_id_of_true.at(d.id);
    auto& dropped = log.dropped_frames[vid];
    std::erase_if(ts.records, [&](const TrackRecord& r) {
      if (r.id != vid || r.frame < d.from || r.frame > d.to) return false;
      dropped.push_back(r.frame);
      return true;
    });
    std::sort(dropped.begin(), dropped.end());
  }

  int next_id = ts.records.empty() ? 0 : *ts.ids().rbegin() + 1;

  // Group splits per view id, ascending; each split hands the tail of the
  // current fragment a fresh id.
  std::map<int, std::vector<int>> splits;
  for (const auto& fsp : cfg.fragmentation)
    splits[view_id_of_true.at(fsp.id)].push_back(fsp.split_frame);
  for (auto& [vid, frames] : splits) {
    std::sort(frames.begin(), frames.end());
    int current = vid;
    for (int split : frames) {
      const int fresh = next_id++;
      bool any = false;
      for (auto& r : ts.records)
        if (r.id == current && r.frame >= split) {
          r.id = fresh;
          any = true;
        }
      if (!any) {
        --next_id;
        continue;  // nothing left to split (e.g. dropped out)
      }
      log.fragments.push_back({vid, current, fresh, split});
      log.id_to_true[fresh] = vid;
      current = fresh;
    }
  }

  std::uniform_int_distribution<int> blip_len(cfg.blips.min_len, cfg.blips.max_len);
  std::uniform_real_distribution<double> bx(50.0, cfg.image_width - 50.0);
  std::uniform_real_distribution<double> by(50.0, cfg.image_height - 50.0);
  std::uniform_real_distribution<double> bsz(8.0, 25.0);
  std::normal_distribution<double> bstep(0.0, 3.0);
  for (int b = 0; b < cfg.blips.count; ++b) {
    const int len = blip_len(rng);
    std::uniform_int_distribution<int> bstart(1, std::max(1, cfg.n_frames - len + 1));
    const int start = bstart(rng);
    const int id = next_id++;
    double x = bx(rng), y = by(rng);
    const double half_w = bsz(rng), half_h = bsz(rng);
    for (int f = start; f < start + len && f <= cfg.n_frames; ++f) {
      ts.records.push_back({f, id, x, y, half_w, half_h});
      x += bstep(rng);
      y += bstep(rng);
    }
    log.blip_ids.push_back(id);
  }

  ts.sort_records();
  return ts;
}

}  // namespace detail

/// Applies the configured corruption to both views, logging every event.
/// A zero-corruption config returns the ideal track sets unchanged.
inline DegradedScene degrade(const SceneTruth& truth, const SceneConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed ^ 0xD1B54A32D192ED03ULL);

  std::map<int, int> left_ids, right_ids;  // true fish id -> view id
  for (const auto& [l, r] : truth.correspondence) {
    left_ids[l] = l;
    right_ids[l] = r;
  }

  DegradedScene out;
  out.left = detail::degrade_view(truth.left, cfg, left_ids, out.left_log, rng);
  out.right = detail::degrade_view(truth.right, cfg, right_ids, out.right_log, rng);
  return out;
}

/// Writes the scene as pipeline-ready files: degraded pair in clean CSV
/// form, ground-truth pair, calibration, true 3D table, correspondence
/// table (consensus schema) and a JSON manifest pinning the configuration
/// and RNG.
inline void emit_scene(const SceneTruth& truth, const DegradedScene& degraded,
                       const std::filesystem::path& dir, const std::string& stem = "synth") {
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  auto write_tracks = [&](const TrackSet& ts, const std::string& name) {
    mot::write_clean_file(ts, dir / name);
  };
  write_tracks(degraded.left, stem + "_1_clean.txt");
  write_tracks(degraded.right, stem + "_2_clean.txt");
  write_tracks(truth.left, stem + "_1_gt.txt");
  write_tracks(truth.right, stem + "_2_gt.txt");

  mot::write_calibration_file(truth.cfg.rig, dir / "calibration.txt");

  {
    std::ofstream out(dir / "true_tracks3d.csv");
    tri::write_tracks3d(truth.true_tracks3d(), out);
  }
  {
    std::ofstream out(dir / "correspondence.csv");
    std::vector<stereo::ConsensusMatch> table;
    for (const auto& [l, r] : truth.correspondence)
      table.push_back({l, r, truth.cfg.n_frames, truth.cfg.n_frames});
    stereo::write_consensus(table, out);
  }

  nlohmann::json j;
  j["rng"] = "mt19937_64";
  j["seed"] = truth.cfg.seed;
  j["n_fish"] = truth.cfg.n_fish;
  j["n_frames"] = truth.cfg.n_frames;
  j["model"] = to_string(truth.cfg.model);
  j["noise_px"] = truth.cfg.noise_px;
  j["fps"] = truth.cfg.fps;
  j["image_width"] = truth.cfg.image_width;
  j["image_height"] = truth.cfg.image_height;
  j["fish_size"] = truth.cfg.fish_size;
  j["blips"] = {{"count", truth.cfg.blips.count},
                {"min_len", truth.cfg.blips.min_len},
                {"max_len", truth.cfg.blips.max_len}};
  for (const auto& f : truth.cfg.fragmentation)
    j["fragmentation"].push_back({{"id", f.id}, {"split_frame", f.split_frame}});
  for (const auto& d : truth.cfg.dropouts)
    j["dropouts"].push_back({{"id", d.id}, {"from", d.from}, {"to", d.to}});
  std::ofstream manifest(dir / "scene.json");
  manifest << j.dump(2) << "\n";
}

}  // namespace stereotrack::synth
