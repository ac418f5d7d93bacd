// Copyright (c) 2026 stereotrack contributors
// SPDX-License-Identifier: Apache-2.0
//
// Post-track re-identification: tracks that vanish and reappear under a new
// id are stitched back together, short-lived tracks are treated as false
// positives and removed, and ids are renumbered compactly.

#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "stereotrack/types.hpp"

namespace stereotrack::reid {

struct ReidConfig {
  int window = 100;          // frames searched around a disappearance
  double radius = 50.0;      // max pixel distance between end and restart
  int overlap_limit = 10;    // tolerated frames of id coexistence
  int min_track_len = 30;    // tracks shorter than this are dropped
  int id_base = 0;           // first id after compaction (0 or 1)

  void validate() const {
    if (window <= 0 || radius <= 0.0 || overlap_limit <= 0 || min_track_len <= 0)
      throw DataError("ReidConfig: all thresholds must be strictly positive");
    if (overlap_limit >= window)
      throw DataError("ReidConfig: overlap_limit must be smaller than window");
    if (id_base != 0 && id_base != 1) throw DataError("ReidConfig: id_base must be 0 or 1");
  }
};

struct Merge {
  int old_id = 0;
  int new_id = 0;
  int merge_frame = 0;  // first frame of the absorbed id
};

struct ReidReport {
  std::vector<Merge> merges;
  std::vector<int> pruned_ids;
  std::map<int, int> id_remap;
  int ids_before = 0;
  int ids_after = 0;
};

/// Euclidean pixel distance.
inline double proximity_distance(const Vec2& a, const Vec2& b) {
  return std::hypot(a.x() - b.x(), a.y() - b.y());
}

/// Ids that are not present in every frame of the video; only these take
/// part in re-identification.
inline std::set<int> find_candidates(const TrackSet& ts) {
  std::map<int, int> frames_per_id;
  for (const auto& r : ts.records) ++frames_per_id[r.id];
  std::set<int> out;
  for (const auto& [id, n] : frames_per_id)
    if (n != ts.frame_count) out.insert(id);
  return out;
}

namespace detail {

struct IdSpan {
  int id = 0;
  int first_frame = 0;
  int last_frame = 0;
  Vec2 first_pos = Vec2::Zero();
  Vec2 last_pos = Vec2::Zero();
  std::vector<int> frames;  // sorted
};

inline std::map<int, IdSpan> index_spans(const TrackSet& ts) {
  std::map<int, IdSpan> out;
  for (const auto& [id, recs] : ts.by_id()) {
    IdSpan s;
    s.id = id;
    s.first_frame = recs.front()->frame;
    s.last_frame = recs.back()->frame;
    s.first_pos = recs.front()->center();
    s.last_pos = recs.back()->center();
    s.frames.reserve(recs.size());
    for (const auto* r : recs) s.frames.push_back(r->frame);
    out.emplace(id, std::move(s));
  }
  return out;
}

struct MergeCandidate {
  double distance = 0.0;
  int first_frame = 0;
  int new_id = 0;
  std::vector<int> overlap;

  bool better_than(const MergeCandidate& o) const {
    if (distance != o.distance) return distance < o.distance;
    if (first_frame != o.first_frame) return first_frame < o.first_frame;
    return new_id < o.new_id;
  }
};

/// A "new" track may continue an "old" one when it starts inside the search
/// window, restarts close to where the old track ended, and any coexistence
/// is confined to the old track's final overlap_limit observed frames.
inline std::optional<MergeCandidate> evaluate_merge(const IdSpan& old_span,
                                                    const IdSpan& new_span,
                                                    const ReidConfig& cfg) {
  const int nf = new_span.first_frame;
  if (nf <= old_span.last_frame - cfg.window || nf > old_span.last_frame + cfg.window)
    return std::nullopt;
  if (nf < old_span.last_frame - cfg.overlap_limit) return std::nullopt;

  const double d = proximity_distance(new_span.first_pos, old_span.last_pos);
  if (d > cfg.radius) return std::nullopt;

  std::vector<int> overlap;
  std::set_intersection(old_span.frames.begin(), old_span.frames.end(),
                        new_span.frames.begin(), new_span.frames.end(),
                        std::back_inserter(overlap));
  if (static_cast<int>(overlap.size()) > cfg.overlap_limit) return std::nullopt;
  if (!overlap.empty()) {
    const size_t tail = std::min<size_t>(old_span.frames.size(), cfg.overlap_limit);
    const int tail_start = old_span.frames[old_span.frames.size() - tail];
    if (overlap.front() < tail_start) return std::nullopt;
  }
  return MergeCandidate{d, nf, new_span.id, std::move(overlap)};
}

}  // namespace detail

/// Runs the gap-bridging pass to fixpoint. Absorbed ids are relabeled to the
/// surviving id; on tolerated overlap frames the survivor's record is kept
/// and the absorbed record dropped, so (frame, id) stays unique. Frames and
/// coordinates are never modified.
inline std::pair<TrackSet, std::vector<Merge>> reid_pass(TrackSet ts, const ReidConfig& cfg) {
  cfg.validate();
  std::vector<Merge> merges;
  for (;;) {
    const std::set<int> candidates = find_candidates(ts);
    const auto spans = detail::index_spans(ts);

    // Old ids in temporal order of disappearance.
    std::vector<const detail::IdSpan*> olds;
    for (const auto& [id, span] : spans)
      if (candidates.count(id)) olds.push_back(&span);
    std::sort(olds.begin(), olds.end(), [](const detail::IdSpan* a, const detail::IdSpan* b) {
      return a->last_frame != b->last_frame ? a->last_frame < b->last_frame : a->id < b->id;
    });

    bool merged = false;
    for (const detail::IdSpan* old_span : olds) {
      std::optional<detail::MergeCandidate> best;
      for (const auto& [new_id, new_span] : spans) {
        if (new_id == old_span->id || !candidates.count(new_id)) continue;
        auto cand = detail::evaluate_merge(*old_span, new_span, cfg);
        if (cand && (!best || cand->better_than(*best))) best = std::move(cand);
      }
      if (!best) continue;

      const std::set<int> overlap(best->overlap.begin(), best->overlap.end());
      std::vector<TrackRecord> next;
      next.reserve(ts.records.size());
      for (const auto& r : ts.records) {
        if (r.id == best->new_id) {
          if (overlap.count(r.frame)) continue;  // survivor already covers it
          TrackRecord relabeled = r;
          relabeled.id = old_span->id;
          next.push_back(relabeled);
        } else {
          next.push_back(r);
        }
      }
      ts.records = std::move(next);
      ts.sort_records();
      merges.push_back({old_span->id, best->new_id, best->first_frame});
      merged = true;
      break;  // indices are stale; rebuild and rescan
    }
    if (!merged) break;
  }
  return {std::move(ts), std::move(merges)};
}

/// Drops ids observed in fewer than min_track_len frames.
inline std::pair<TrackSet, std::vector<int>> prune_short(TrackSet ts, const ReidConfig& cfg) {
  std::map<int, int> frames_per_id;
  for (const auto& r : ts.records) ++frames_per_id[r.id];
  std::vector<int> pruned;
  for (const auto& [id, n] : frames_per_id)
    if (n < cfg.min_track_len) pruned.push_back(id);
  if (!pruned.empty()) {
    const std::set<int> gone(pruned.begin(), pruned.end());
    std::erase_if(ts.records, [&](const TrackRecord& r) { return gone.count(r.id) > 0; });
  }
  return {std::move(ts), std::move(pruned)};
}

/// Renumbers ids consecutively from id_base in order of first appearance.
inline std::pair<TrackSet, std::map<int, int>> compact_ids(TrackSet ts, int id_base = 0) {
  std::map<int, int> first_frame;
  for (const auto& r : ts.records) {
    auto it = first_frame.find(r.id);
    if (it == first_frame.end() || r.frame < it->second) first_frame[r.id] = r.frame;
  }
  std::vector<std::pair<int, int>> order;  // (first_frame, id)
  for (const auto& [id, f] : first_frame) order.emplace_back(f, id);
  std::sort(order.begin(), order.end());
  std::map<int, int> remap;
  int next = id_base;
  for (const auto& [f, id] : order) remap[id] = next++;
  for (auto& r : ts.records) r.id = remap.at(r.id);
  ts.sort_records();
  return {std::move(ts), std::move(remap)};
}

/// Full re-identification: bridge gaps to fixpoint, prune false positives,
/// compact ids.
inline std::pair<TrackSet, ReidReport> reidentify(TrackSet ts, const ReidConfig& cfg) {
  ReidReport report;
  report.ids_before = static_cast<int>(ts.ids().size());
  auto [bridged, merges] = reid_pass(std::move(ts), cfg);
  report.merges = std::move(merges);
  auto [kept, pruned] = prune_short(std::move(bridged), cfg);
  report.pruned_ids = std::move(pruned);
  auto [compacted, remap] = compact_ids(std::move(kept), cfg.id_base);
  report.id_remap = std::move(remap);
  report.ids_after = static_cast<int>(compacted.ids().size());
  return {std::move(compacted), std::move(report)};
}

}  // namespace stereotrack::reid
