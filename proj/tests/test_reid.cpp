// Copyright (c) 2026 stereotrack contributors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "stereotrack/reid.hpp"

using namespace stereotrack;

namespace {

void add_track(TrackSet& ts, int id, int from, int to,
               std::function<Vec2(int)> pos, double half = 10.0) {
  for (int f = from; f <= to; ++f) {
    Vec2 p = pos(f);
    ts.records.push_back({f, id, p.x(), p.y(), half, half});
  }
}

Vec2 fixed(double x, double y) { return {x, y}; }

std::multiset<std::tuple<int, double, double, double, double>> geometry_multiset(
    const TrackSet& ts) {
  std::multiset<std::tuple<int, double, double, double, double>> out;
  for (const auto& r : ts.records) out.insert({r.frame, r.cx, r.cy, r.x_off, r.y_off});
  return out;
}

}  // namespace

TEST_CASE("find_candidates picks exactly the partial-span ids") {
  TrackSet ts;
  ts.frame_count = 260;
  add_track(ts, 0, 1, 260, [](int) { return fixed(100, 100); });
  add_track(ts, 1, 1, 100, [](int) { return fixed(500, 500); });
  add_track(ts, 2, 150, 260, [](int) { return fixed(800, 300); });
  ts.sort_records();

  auto cands = reid::find_candidates(ts);
  CHECK(!cands.count(0));
  CHECK(cands.count(1));
  CHECK(cands.count(2));

  SECTION("an interior hole also makes an id a candidate") {
    TrackSet holed;
    holed.frame_count = 50;
    add_track(holed, 7, 1, 20, [](int) { return fixed(1, 1); });
    add_track(holed, 7, 22, 50, [](int) { return fixed(1, 1); });
    holed.sort_records();
    CHECK(reid::find_candidates(holed).count(7));
  }
}

TEST_CASE("proximity_distance is plain Euclidean distance") {
  CHECK(reid::proximity_distance({0, 0}, {3, 4}) == 5.0);
  CHECK(reid::proximity_distance({42.5, -7.0}, {42.5, -7.0}) == 0.0);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1e4, 1e4);
  for (int i = 0; i < 500; ++i) {
    const double x1 = u(rng), y1 = u(rng), x2 = u(rng), y2 = u(rng);
    const double expect = std::sqrt((x1 - x2) * (x1 - x2) + (y1 - y2) * (y1 - y2));
    CHECK(reid::proximity_distance({x1, y1}, {x2, y2}) == Catch::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("reid_pass bridges a canonical gap") {
  TrackSet ts;
  ts.frame_count = 260;
  add_track(ts, 4, 1, 120, [](int) { return fixed(500, 500); });
  add_track(ts, 9, 130, 260, [](int) { return fixed(510, 505); });
  ts.sort_records();

  auto [merged, merges] = reid::reid_pass(ts, {});
  REQUIRE(merges.size() == 1);
  CHECK(merges[0].old_id == 4);
  CHECK(merges[0].new_id == 9);
  CHECK(merges[0].merge_frame == 130);
  CHECK(merged.ids() == std::set<int>{4});
  CHECK(merged.records.size() == ts.records.size());
}

TEST_CASE("reid_pass respects radius and window") {
  SECTION("too far away") {
    TrackSet ts;
    ts.frame_count = 260;
    add_track(ts, 4, 1, 120, [](int) { return fixed(500, 500); });
    add_track(ts, 9, 130, 260, [](int) { return fixed(700, 500); });  // 200 px
    ts.sort_records();
    auto [merged, merges] = reid::reid_pass(ts, {});
    CHECK(merges.empty());
    CHECK(merged.ids().size() == 2);
  }
  SECTION("outside the frame window") {
    TrackSet ts;
    ts.frame_count = 400;
    add_track(ts, 4, 1, 120, [](int) { return fixed(500, 500); });
    add_track(ts, 9, 230, 400, [](int) { return fixed(505, 505); });  // gap 110 > 100
    ts.sort_records();
    auto [merged, merges] = reid::reid_pass(ts, {});
    CHECK(merges.empty());
  }
  SECTION("exactly at the window edge still merges") {
    TrackSet ts;
    ts.frame_count = 400;
    add_track(ts, 4, 1, 120, [](int) { return fixed(500, 500); });
    add_track(ts, 9, 220, 400, [](int) { return fixed(505, 505); });  // start = end + 100
    ts.sort_records();
    auto [merged, merges] = reid::reid_pass(ts, {});
    CHECK(merges.size() == 1);
  }
}

TEST_CASE("reid_pass tolerates short terminal overlap and keeps ids unique") {
  TrackSet ts;
  ts.frame_count = 260;
  add_track(ts, 4, 1, 120, [](int) { return fixed(500, 500); });
  add_track(ts, 9, 115, 260, [](int) { return fixed(505, 503); });  // 6 shared frames
  ts.sort_records();
  const size_t before = ts.records.size();

  auto [merged, merges] = reid::reid_pass(ts, {});
  REQUIRE(merges.size() == 1);
  CHECK(merged.ids() == std::set<int>{4});
  // Overlapping frames keep the survivor's record only.
  CHECK(merged.records.size() == before - 6);
  std::set<std::pair<int, int>> seen;
  for (const auto& r : merged.records) CHECK(seen.insert({r.frame, r.id}).second);

  SECTION("overlap beyond the limit blocks the merge") {
    TrackSet bad;
    bad.frame_count = 260;
    add_track(bad, 4, 1, 120, [](int) { return fixed(500, 500); });
    add_track(bad, 9, 100, 260, [](int) { return fixed(505, 503); });  // 21 shared frames
    bad.sort_records();
    auto [m2, merges2] = reid::reid_pass(bad, {});
    CHECK(merges2.empty());
  }
}

TEST_CASE("reid_pass chains fragments to a fixpoint") {
  TrackSet ts;
  ts.frame_count = 260;
  add_track(ts, 0, 1, 100, [](int) { return fixed(500, 500); });
  add_track(ts, 5, 110, 150, [](int) { return fixed(520, 510); });
  add_track(ts, 8, 160, 260, [](int) { return fixed(540, 520); });
  ts.sort_records();

  auto [merged, merges] = reid::reid_pass(ts, {});
  CHECK(merges.size() == 2);
  CHECK(merged.ids() == std::set<int>{0});
}

TEST_CASE("reid_pass ties break by distance, then first appearance, then id") {
  TrackSet ts;
  ts.frame_count = 300;
  add_track(ts, 0, 1, 100, [](int) { return fixed(500, 500); });
  add_track(ts, 7, 120, 180, [](int) { return fixed(530, 500); });  // 30 px
  add_track(ts, 3, 130, 190, [](int) { return fixed(510, 500); });  // 10 px, later start
  ts.sort_records();

  auto [merged, merges] = reid::reid_pass(ts, {});
  REQUIRE(!merges.empty());
  CHECK(merges[0].old_id == 0);
  CHECK(merges[0].new_id == 3);  // closer wins despite later start
}

TEST_CASE("reid_pass is idempotent") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> jitter(-30.0, 30.0);
  TrackSet ts;
  ts.frame_count = 500;
  int next_id = 0;
  for (int fish = 0; fish < 5; ++fish) {
    const double bx = 200.0 + 300.0 * fish, by = 400.0 + 40.0 * fish;
    int start = 1;
    while (start < 480) {
      const int len = 40 + static_cast<int>(std::abs(jitter(rng)));
      const int end = std::min(500, start + len);
      add_track(ts, next_id++, start, end,
                [=](int f) { return fixed(bx + 0.05 * f, by + 0.02 * f); });
      start = end + 5 + static_cast<int>(std::abs(jitter(rng)) / 2);
    }
  }
  ts.sort_records();

  auto [once, merges1] = reid::reid_pass(ts, {});
  auto [twice, merges2] = reid::reid_pass(once, {});
  CHECK(merges2.empty());
  CHECK(twice.records == once.records);
}

TEST_CASE("reid_pass only relabels ids or drops tolerated-overlap records") {
  TrackSet ts;
  ts.frame_count = 260;
  add_track(ts, 2, 1, 118, [](int f) { return fixed(400 + 0.1 * f, 300); });
  add_track(ts, 6, 121, 260, [](int f) { return fixed(412 + 0.1 * (f - 121), 301); });
  add_track(ts, 3, 1, 260, [](int) { return fixed(900, 800); });
  ts.sort_records();

  auto [merged, merges] = reid::reid_pass(ts, {});
  auto before = geometry_multiset(ts);
  auto after = geometry_multiset(merged);
  // No overlap in this scene: geometry multiset is untouched.
  CHECK(before == after);
  CHECK(merged.ids().size() + merges.size() == ts.ids().size());
}

TEST_CASE("prune_short drops tracks below the frame threshold") {
  TrackSet ts;
  ts.frame_count = 260;
  add_track(ts, 0, 1, 29, [](int) { return fixed(100, 100); });   // 29 frames
  add_track(ts, 1, 1, 30, [](int) { return fixed(300, 100); });   // 30 frames
  add_track(ts, 2, 50, 260, [](int) { return fixed(600, 100); });
  ts.sort_records();

  auto [kept, pruned] = reid::prune_short(ts, {});
  CHECK(pruned == std::vector<int>{0});
  CHECK(kept.ids() == std::set<int>{1, 2});
}

TEST_CASE("compact_ids renumbers by first appearance") {
  TrackSet ts;
  ts.frame_count = 100;
  add_track(ts, 17, 10, 40, [](int) { return fixed(1, 1); });
  add_track(ts, 3, 1, 50, [](int) { return fixed(2, 2); });
  add_track(ts, 204, 20, 90, [](int) { return fixed(3, 3); });
  ts.sort_records();

  auto [compact, remap] = reid::compact_ids(ts);
  CHECK(remap == std::map<int, int>{{3, 0}, {17, 1}, {204, 2}});
  CHECK(compact.ids() == std::set<int>{0, 1, 2});
  CHECK(geometry_multiset(compact) == geometry_multiset(ts));

  SECTION("already compact ids give the identity remap") {
    auto [again, remap2] = reid::compact_ids(compact);
    CHECK(remap2 == std::map<int, int>{{0, 0}, {1, 1}, {2, 2}});
    CHECK(again.records == compact.records);
  }
  SECTION("id_base 1 starts numbering at one") {
    auto [one_based, remap1] = reid::compact_ids(ts, 1);
    CHECK(one_based.ids() == std::set<int>{1, 2, 3});
  }
}

TEST_CASE("reidentify report is self-consistent") {
  TrackSet ts;
  ts.frame_count = 260;
  add_track(ts, 0, 1, 120, [](int) { return fixed(500, 500); });
  add_track(ts, 5, 130, 260, [](int) { return fixed(505, 505); });
  add_track(ts, 6, 40, 52, [](int) { return fixed(1500, 900); });   // 13-frame blip
  add_track(ts, 2, 1, 260, [](int) { return fixed(1000, 200); });
  ts.sort_records();

  auto [out, report] = reid::reidentify(ts, {});
  CHECK(report.ids_before == 4);
  CHECK(report.merges.size() == 1);
  CHECK(report.pruned_ids == std::vector<int>{6});
  CHECK(report.ids_after == 2);
  CHECK(report.ids_after ==
        report.ids_before - static_cast<int>(report.merges.size()) -
            static_cast<int>(report.pruned_ids.size()));
  CHECK(out.ids() == std::set<int>{0, 1});
}

TEST_CASE("reid config validation") {
  reid::ReidConfig cfg;
  cfg.overlap_limit = 200;
  CHECK_THROWS_AS(cfg.validate(), DataError);
  cfg = {};
  cfg.radius = 0.0;
  CHECK_THROWS_AS(cfg.validate(), DataError);
}
