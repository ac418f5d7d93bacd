// Copyright (c) 2026 stereotrack contributors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "stereotrack/synth.hpp"
#include "stereotrack/triangulate.hpp"

using namespace stereotrack;

namespace {

StereoRig rectified_rig(double f, double baseline) {
  StereoRig rig;
  rig.k1 = Mat3::Identity() * f;
  rig.k1(2, 2) = 1.0;
  rig.k2 = rig.k1;
  rig.dist1 = Eigen::VectorXd::Zero(4);
  rig.dist2 = Eigen::VectorXd::Zero(4);
  rig.rotation = Mat3::Identity();
  rig.translation = Vec3(-baseline, 0.0, 0.0);
  return rig;
}

}  // namespace

TEST_CASE("projection_pair builds P1=[K1|0], P2=K2[R|t]") {
  StereoRig rig;
  rig.dist1 = Eigen::VectorXd::Zero(4);
  rig.dist2 = Eigen::VectorXd::Zero(4);
  rig.rotation = Eigen::AngleAxisd(0.1, Vec3::UnitY()).toRotationMatrix();
  rig.translation = Vec3(-1.0, 0.2, 0.0);
  const auto pair = tri::projection_pair(rig);
  CHECK(pair.p1.leftCols<3>().isApprox(Mat3::Identity()));
  CHECK(pair.p1.col(3).isZero());
  CHECK(pair.p2.leftCols<3>().isApprox(rig.rotation));
  CHECK(pair.p2.col(3).isApprox(rig.translation));

  SECTION("projection matrices have full rank for random rigs") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> uf(300.0, 3000.0);
    std::uniform_real_distribution<double> ua(-0.5, 0.5);
    for (int i = 0; i < 50; ++i) {
      StereoRig r;
      r.k1 << uf(rng), 0, uf(rng), 0, uf(rng), uf(rng), 0, 0, 1;
      r.k2 = r.k1;
      r.dist1 = Eigen::VectorXd::Zero(4);
      r.dist2 = Eigen::VectorXd::Zero(4);
      r.rotation = Eigen::AngleAxisd(ua(rng), Vec3(ua(rng), 1.0, ua(rng)).normalized())
                       .toRotationMatrix();
      r.translation = Vec3(ua(rng) * 100, ua(rng) * 100, ua(rng) * 100 + 50);
      const auto pp = tri::projection_pair(r);
      Eigen::JacobiSVD<Mat34> svd1(pp.p1), svd2(pp.p2);
      CHECK(svd1.singularValues()(2) > 1e-9 * svd1.singularValues()(0));
      CHECK(svd2.singularValues()(2) > 1e-9 * svd2.singularValues()(0));
    }
  }
}

TEST_CASE("projected synth detections equal P1/P2 projections without distortion") {
  synth::SceneConfig cfg;
  cfg.n_fish = 5;
  cfg.n_frames = 10;
  cfg.seed = 4;
  cfg.rig.dist1 = Eigen::VectorXd::Zero(4);  // pinhole only for this check
  cfg.rig.dist2 = Eigen::VectorXd::Zero(4);
  const auto truth = synth::generate(cfg);
  const auto pair = tri::projection_pair(cfg.rig);
  for (const auto& r : truth.left.records) {
    const Vec2 expect = tri::project(pair.p1, truth.positions[r.id][r.frame - 1]);
    CHECK((r.center() - expect).norm() < 1e-9);
  }
  std::map<int, int> right_to_left;
  for (const auto& [l, rr] : truth.correspondence) right_to_left[rr] = l;
  for (const auto& r : truth.right.records) {
    const Vec2 expect =
        tri::project(pair.p2, truth.positions[right_to_left.at(r.id)][r.frame - 1]);
    CHECK((r.center() - expect).norm() < 1e-9);
  }
}

TEST_CASE("triangulate_point recovers exact correspondences") {
  const StereoRig rig = rectified_rig(1.0, 1.0);
  const auto pair = tri::projection_pair(rig);

  SECTION("rectified exact pair") {
    const Vec3 p(0.3, -0.2, 5.0);
    const Vec2 x1(p.x() / p.z(), p.y() / p.z());
    const Vec2 x2((p.x() - 1.0) / p.z(), p.y() / p.z());
    const Vec3 rec = tri::to_cartesian(tri::triangulate_point(pair, x1, x2));
    CHECK((rec - p).norm() < 1e-9);
  }

  SECTION("zero disparity lands at infinity") {
    const Vec2 same(0.3, 0.2);
    const Vec4 h = tri::triangulate_point(pair, same, same);
    CHECK(std::abs(h.w()) < 1e-12);
    CHECK_THROWS_AS(tri::to_cartesian(h), NumericalError);
  }

  SECTION("identical cameras observing the same point are rank-deficient") {
    tri::ProjectionPair bad_pair = pair;
    bad_pair.p2 = bad_pair.p1;
    CHECK_THROWS_AS(tri::triangulate_point(bad_pair, {0.1, 0.2}, {0.1, 0.2}),
                    NumericalError);
  }

  SECTION("common scaling of P1 and P2 changes nothing") {
    const Vec3 p(0.1, 0.4, 3.0);
    const Vec2 x1(p.x() / p.z(), p.y() / p.z());
    const Vec2 x2((p.x() - 1.0) / p.z(), p.y() / p.z());
    tri::ProjectionPair scaled = pair;
    scaled.p1 *= 7.0;
    scaled.p2 *= 7.0;
    const Vec3 a = tri::to_cartesian(tri::triangulate_point(pair, x1, x2));
    const Vec3 b = tri::to_cartesian(tri::triangulate_point(scaled, x1, x2));
    CHECK((a - b).norm() < 1e-12);
  }

  SECTION("rectified depth equals f*B/disparity") {
    const StereoRig px_rig = rectified_rig(1200.0, 110.0);
    const auto px_pair = tri::projection_pair(px_rig);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> ux(-300.0, 300.0);
    std::uniform_real_distribution<double> uz(1800.0, 2800.0);
    for (int i = 0; i < 200; ++i) {
      const Vec3 p(ux(rng), ux(rng) / 2.0, uz(rng));
      const Vec2 x1(1200.0 * p.x() / p.z(), 1200.0 * p.y() / p.z());
      const Vec2 x2(1200.0 * (p.x() - 110.0) / p.z(), 1200.0 * p.y() / p.z());
      const double disparity = x1.x() - x2.x();
      const double closed_form = 1200.0 * 110.0 / disparity;
      const Vec3 rec = tri::to_cartesian(tri::triangulate_point(px_pair, x1, x2));
      CHECK(std::abs(rec.z() - closed_form) < 1e-9 * closed_form);
    }
  }
}

TEST_CASE("to_cartesian divides by w") {
  CHECK(tri::to_cartesian(Vec4(2, 4, 6, 2)) == Vec3(1, 2, 3));
  CHECK_THROWS_AS(tri::to_cartesian(Vec4(1, 1, 1, 0)), NumericalError);
  CHECK(tri::to_cartesian(Vec4(2, 4, 6, 2) * -3.0) == Vec3(1, 2, 3));
}

TEST_CASE("0.5 px noise keeps median 3D error under 1% of depth") {
  const StereoRig rig = rectified_rig(1200.0, 110.0);
  const auto pair = tri::projection_pair(rig);
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> ux(-300.0, 300.0);
  std::uniform_real_distribution<double> uz(2000.0, 2400.0);  // around baseline x 20
  std::normal_distribution<double> noise(0.0, 0.5);
  std::vector<double> rel_err;
  for (int i = 0; i < 1000; ++i) {
    const Vec3 p(ux(rng), ux(rng) / 2.0, uz(rng));
    Vec2 x1 = tri::project(pair.p1, p);
    Vec2 x2 = tri::project(pair.p2, p);
    x1 += Vec2(noise(rng), noise(rng));
    x2 += Vec2(noise(rng), noise(rng));
    const Vec3 rec = tri::to_cartesian(tri::triangulate_point(pair, x1, x2));
    rel_err.push_back((rec - p).norm() / p.z());
  }
  std::nth_element(rel_err.begin(), rel_err.begin() + rel_err.size() / 2, rel_err.end());
  CHECK(rel_err[rel_err.size() / 2] < 0.01);
}

TEST_CASE("triangulate_tracks rebuilds the synth scene") {
  synth::SceneConfig cfg;
  cfg.n_fish = 6;
  cfg.n_frames = 30;
  cfg.seed = 8;
  const auto truth = synth::generate(cfg);
  std::vector<stereo::ConsensusMatch> matches;
  for (const auto& [l, r] : truth.correspondence)
    matches.push_back({l, r, cfg.n_frames, cfg.n_frames});

  tri::TriangulationStats stats;
  const auto t3d = tri::triangulate_tracks(truth.left, truth.right, matches, cfg.rig, &stats);
  const auto expect = truth.true_tracks3d();

  REQUIRE(t3d.records.size() == expect.records.size());
  CHECK(stats.produced == t3d.records.size());
  CHECK(stats.skipped == 0);
  for (size_t i = 0; i < t3d.records.size(); ++i) {
    const auto& got = t3d.records[i];
    const auto& want = expect.records[i];
    CHECK(got.frame == want.frame);
    CHECK(got.left_id == want.left_id);
    CHECK(got.right_id == want.right_id);
    const double err = Vec3(got.x - want.x, got.y - want.y, got.z - want.z).norm();
    CHECK(err < 1e-6);
  }

  SECTION("empty match table produces an empty set") {
    const auto empty = tri::triangulate_tracks(truth.left, truth.right, {}, cfg.rig);
    CHECK(empty.records.empty());
  }

  SECTION("record count equals the frames where both sides are present") {
    size_t count = 0;
    std::map<int, std::set<int>> right_frames;
    for (const auto& r : truth.right.records) right_frames[r.frame].insert(r.id);
    for (const auto& r : truth.left.records)
      if (right_frames[r.frame].count(truth.correspondence.at(r.id))) ++count;
    CHECK(t3d.records.size() == count);
  }
}

TEST_CASE("3D CSV matches the published table shape") {
  tri::Track3DSet ts;
  ts.records.push_back({1, 0, 5, 475.6414, -251.6091, 2175.9988});
  ts.records.push_back({1, 1, 6, 358.941, -255.299, 2170.809});
  std::ostringstream out;
  tri::write_tracks3d(ts, out);
  const std::string text = out.str();
  CHECK(text.rfind("frame,left_id,right_id,x,y,z\n", 0) == 0);
  CHECK(text.find("1,0,5,475.641,-251.609,2175.999\n") != std::string::npos);

  std::istringstream in(text);
  const auto parsed = tri::parse_tracks3d(in);
  REQUIRE(parsed.records.size() == 2);
  CHECK(parsed.records[0].z == 2175.999);
  CHECK(parsed.records[0].left_id == 0);
}
