// Copyright (c) 2026 stereotrack contributors
// SPDX-License-Identifier: Apache-2.0
//
// Readers and writers for every text format the pipeline touches:
// raw MOT ground-truth files, cleaned track files, tracker-output CSVs,
// YOLO label exports and plain-text stereo calibration files.

#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <utility>

#include "stereotrack/detail/format.hpp"
#include "stereotrack/types.hpp"

namespace stereotrack::mot {

namespace detail {

using stereotrack::detail::format_fixed;
using stereotrack::detail::format_number;
using stereotrack::detail::parse_double;
using stereotrack::detail::split_numeric_row;

inline int to_int_field(double v, const char* what, int line_no, int min_value) {
  if (std::floor(v) != v || v < min_value || v > 2147483647.0)
    throw DataError(std::string("line ") + std::to_string(line_no) + ": invalid " + what + " '" +
                    format_number(v) + "'");
  return static_cast<int>(v);
}

struct DuplicateGuard {
  std::set<std::pair<int, int>> seen;
  void insert(int frame, int id, int line_no) {
    if (!seen.insert({frame, id}).second)
      throw DataError("line " + std::to_string(line_no) + ": duplicate (frame, id) = (" +
                      std::to_string(frame) + ", " + std::to_string(id) + ")");
  }
};

inline bool blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(),
                     [](unsigned char c) { return std::isspace(c); });
}

}  // namespace detail

/// Parses a raw MOT file: delimited rows of at least six numeric columns
/// (frame, id, top-left x, top-left y, width, height, ...). Trailing columns
/// are dropped and boxes are converted to center/half-extent form.
inline TrackSet parse_mot(std::istream& in) {
  TrackSet out;
  detail::DuplicateGuard dup;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::blank(line)) continue;
    std::vector<double> cols;
    if (!detail::split_numeric_row(line, cols))
      throw DataError("line " + std::to_string(line_no) + ": malformed row '" + line + "'");
    if (cols.size() < 6)
      throw DataError("line " + std::to_string(line_no) + ": expected at least 6 columns, got " +
                      std::to_string(cols.size()));
    TrackRecord r;
    r.frame = detail::to_int_field(cols[0], "frame", line_no, 1);
    r.id = detail::to_int_field(cols[1], "id", line_no, 0);
    const double w = cols[4];
    const double h = cols[5];
    if (!(w > 0.0) || !(h > 0.0))
      throw DataError("line " + std::to_string(line_no) + ": non-positive box size " +
                      detail::format_number(w) + " x " + detail::format_number(h));
    r.cx = cols[2] + w / 2.0;
    r.cy = cols[3] + h / 2.0;
    r.x_off = w / 2.0;
    r.y_off = h / 2.0;
    dup.insert(r.frame, r.id, line_no);
    out.frame_count = std::max(out.frame_count, r.frame);
    out.records.push_back(r);
  }
  out.sort_records();
  return out;
}

inline constexpr const char* kCleanHeader = "frame,id,cx,cy,x_off,y_off";

/// Parses a cleaned track file (header row, six comma-separated columns
/// already in center/half-extent form).
inline TrackSet parse_clean(std::istream& in) {
  TrackSet out;
  detail::DuplicateGuard dup;
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::blank(line)) continue;
    if (!header_seen) {
      if (line.rfind("frame", 0) != 0)
        throw DataError("line " + std::to_string(line_no) + ": expected header '" +
                        std::string(kCleanHeader) + "'");
      header_seen = true;
      continue;
    }
    std::vector<double> cols;
    if (!detail::split_numeric_row(line, cols) || cols.size() != 6)
      throw DataError("line " + std::to_string(line_no) + ": malformed row '" + line + "'");
    TrackRecord r;
    r.frame = detail::to_int_field(cols[0], "frame", line_no, 1);
    r.id = detail::to_int_field(cols[1], "id", line_no, 0);
    r.cx = cols[2];
    r.cy = cols[3];
    r.x_off = cols[4];
    r.y_off = cols[5];
    if (!(r.x_off > 0.0) || !(r.y_off > 0.0))
      throw DataError("line " + std::to_string(line_no) + ": non-positive half extent");
    dup.insert(r.frame, r.id, line_no);
    out.frame_count = std::max(out.frame_count, r.frame);
    out.records.push_back(r);
  }
  if (!header_seen) throw DataError("missing clean-file header");
  out.sort_records();
  return out;
}

/// Parses tracker output rows: frame, track id, xmin, ymin, xmax, ymax and
/// optionally confidence and class. A header row is skipped when present.
/// Confidence is carried on the records but nothing downstream consumes it.
inline TrackSet parse_tracker_output(std::istream& in) {
  TrackSet out;
  detail::DuplicateGuard dup;
  std::string line;
  int line_no = 0;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::blank(line)) continue;
    std::vector<double> cols;
    const bool numeric = detail::split_numeric_row(line, cols);
    if (first_content) {
      first_content = false;
      if (!numeric) continue;  // header row
    }
    if (!numeric)
      throw DataError("line " + std::to_string(line_no) + ": malformed row '" + line + "'");
    if (cols.size() < 6)
      throw DataError("line " + std::to_string(line_no) + ": expected at least 6 columns, got " +
                      std::to_string(cols.size()));
    const double xmin = cols[2], ymin = cols[3], xmax = cols[4], ymax = cols[5];
    if (!(xmax > xmin) || !(ymax > ymin))
      throw DataError("line " + std::to_string(line_no) + ": degenerate box [" +
                      detail::format_number(xmin) + "," + detail::format_number(ymin) + "," +
                      detail::format_number(xmax) + "," + detail::format_number(ymax) + "]");
    TrackRecord r;
    r.frame = detail::to_int_field(cols[0], "frame", line_no, 1);
    r.id = detail::to_int_field(cols[1], "id", line_no, 0);
    r.cx = (xmin + xmax) / 2.0;
    r.cy = (ymin + ymax) / 2.0;
    r.x_off = std::abs(r.cx - xmin);
    r.y_off = std::abs(r.cy - ymin);
    if (cols.size() >= 7) r.conf = cols[6];
    dup.insert(r.frame, r.id, line_no);
    out.frame_count = std::max(out.frame_count, r.frame);
    out.records.push_back(r);
  }
  out.sort_records();
  return out;
}

/// Dispatches on the header: cleaned files carry "frame,id,cx,...", tracker
/// CSVs mention "xmin", and headerless numeric rows are raw MOT data.
inline TrackSet load_tracks(std::istream& in) {
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  std::istringstream first_pass(text);
  std::string line;
  while (std::getline(first_pass, line) && detail::blank(line)) {
  }
  std::istringstream stream(text);
  if (line.rfind("frame,id,cx", 0) == 0 || line.rfind("frame", 0) == 0) {
    if (line.find("xmin") != std::string::npos) return parse_tracker_output(stream);
    return parse_clean(stream);
  }
  return parse_mot(stream);
}

inline TrackSet load_tracks_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  TrackSet ts = load_tracks(in);
  std::string stem = path.stem().string();
  const std::string clean_suffix = "_clean";
  if (stem.size() > clean_suffix.size() &&
      stem.compare(stem.size() - clean_suffix.size(), clean_suffix.size(), clean_suffix) == 0)
    stem.resize(stem.size() - clean_suffix.size());
  ts.video_id = stem;
  ts.view = view_from_video_id(stem);
  return ts;
}

/// Writes the cleaned representation: header plus six comma-separated
/// columns. Values use shortest round-trip formatting, so write/parse/write
/// is byte-stable.
inline void write_clean(const TrackSet& ts, std::ostream& out) {
  out << kCleanHeader << "\n";
  for (const auto& r : ts.records) {
    out << r.frame << ',' << r.id << ',' << detail::format_number(r.cx) << ','
        << detail::format_number(r.cy) << ',' << detail::format_number(r.x_off) << ','
        << detail::format_number(r.y_off) << "\n";
  }
}

inline void write_clean_file(const TrackSet& ts, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  write_clean(ts, out);
}

/// Path of the cleaned sibling: "<dir>/<stem>_clean.txt".
inline std::filesystem::path clean_sibling_path(const std::filesystem::path& src) {
  return src.parent_path() / (src.stem().string() + "_clean.txt");
}

struct YoloExportOptions {
  bool normalized = true;  // divide by image dimensions; raw pixels otherwise
  int decimals = 6;
};

/// Writes one label file per frame ("frame_<n>.txt", class 0, center and full
/// size) plus the companion data.yaml. Frames without records produce empty
/// label files.
inline void export_yolo_labels(const TrackSet& ts, const std::filesystem::path& out_dir,
                               const YoloExportOptions& opts = {}) {
  if (opts.normalized && (ts.image_width <= 0 || ts.image_height <= 0))
    throw DataError("export_yolo_labels: image size unknown");
  std::filesystem::create_directories(out_dir);
  const auto by_frame = ts.by_frame();
  const double sx = opts.normalized ? 1.0 / ts.image_width : 1.0;
  const double sy = opts.normalized ? 1.0 / ts.image_height : 1.0;
  for (int frame = 1; frame <= ts.frame_count; ++frame) {
    std::ofstream out(out_dir / ("frame_" + std::to_string(frame) + ".txt"));
    auto it = by_frame.find(frame);
    if (it == by_frame.end()) continue;
    for (const TrackRecord* r : it->second) {
      out << "0 " << detail::format_fixed(r->cx * sx, opts.decimals) << ' '
          << detail::format_fixed(r->cy * sy, opts.decimals) << ' '
          << detail::format_fixed(r->width() * sx, opts.decimals) << ' '
          << detail::format_fixed(r->height() * sy, opts.decimals) << "\n";
    }
  }
  std::ofstream yaml(out_dir / "data.yaml");
  yaml << "train: images/train  # train images (relative to 'path')\n"
          "val: images/val  # val images (relative to 'path')\n"
          "nc: 1  # Number of classes (just fish)\n"
          "names: ['fish']  # Your class names\n";
}

namespace detail {

inline const std::vector<std::string>& calibration_keys() {
  static const std::vector<std::string> keys = {
      "distortionCoefficients1", "distortionCoefficients2", "intrinsicMatrix1",
      "intrinsicMatrix2",        "rotationOfCamera2",       "translationOfCamera2"};
  return keys;
}

}  // namespace detail

/// Parses the plain-text calibration schema: one "key: values" entry per key,
/// matrices row-major, values free to continue on following lines. '#'
/// starts a comment.
inline StereoRig load_calibration(std::istream& in) {
  std::map<std::string, std::vector<double>> entries;
  std::string current;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto pos = line.find('#'); pos != std::string::npos) line.resize(pos);
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) {
      std::string name = tok;
      if (!name.empty() && name.back() == ':') name.pop_back();
      const auto& keys = detail::calibration_keys();
      if (std::find(keys.begin(), keys.end(), name) != keys.end()) {
        if (entries.count(name))
          throw DataError("line " + std::to_string(line_no) + ": duplicate key " + name);
        current = name;
        entries[current];
        continue;
      }
      double v = 0.0;
      if (!detail::parse_double(tok, v))
        throw DataError("line " + std::to_string(line_no) + ": unexpected token '" + tok + "'");
      if (current.empty())
        throw DataError("line " + std::to_string(line_no) + ": value before any key");
      entries[current].push_back(v);
    }
  }

  auto require = [&](const std::string& key, size_t lo, size_t hi) -> const std::vector<double>& {
    auto it = entries.find(key);
    if (it == entries.end()) throw DataError("calibration: missing key " + key);
    if (it->second.size() < lo || it->second.size() > hi)
      throw DataError("calibration: key " + key + " expects " + std::to_string(lo) +
                      (hi != lo ? ".." + std::to_string(hi) : "") + " values, got " +
                      std::to_string(it->second.size()));
    return it->second;
  };

  auto to_mat3 = [](const std::vector<double>& v) {
    Mat3 m;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) m(r, c) = v[r * 3 + c];
    return m;
  };

  StereoRig rig;
  rig.k1 = to_mat3(require("intrinsicMatrix1", 9, 9));
  rig.k2 = to_mat3(require("intrinsicMatrix2", 9, 9));
  const auto& d1 = require("distortionCoefficients1", 4, 5);
  const auto& d2 = require("distortionCoefficients2", 4, 5);
  rig.dist1 = Eigen::Map<const Eigen::VectorXd>(d1.data(), static_cast<long>(d1.size()));
  rig.dist2 = Eigen::Map<const Eigen::VectorXd>(d2.data(), static_cast<long>(d2.size()));
  rig.rotation = to_mat3(require("rotationOfCamera2", 9, 9));
  const auto& t = require("translationOfCamera2", 3, 3);
  rig.translation = Vec3(t[0], t[1], t[2]);
  rig.validate();
  return rig;
}

inline StereoRig load_calibration_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return load_calibration(in);
}

inline void write_calibration(const StereoRig& rig, std::ostream& out) {
  auto row_major = [](const Mat3& m) {
    std::string s;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) {
        if (!s.empty()) s += ' ';
        s += detail::format_number(m(r, c));
      }
    return s;
  };
  auto vec = [](const Eigen::VectorXd& v) {
    std::string s;
    for (long i = 0; i < v.size(); ++i) {
      if (!s.empty()) s += ' ';
      s += detail::format_number(v[i]);
    }
    return s;
  };
  out << "# stereo calibration, matrices row-major\n";
  out << "intrinsicMatrix1: " << row_major(rig.k1) << "\n";
  out << "intrinsicMatrix2: " << row_major(rig.k2) << "\n";
  out << "distortionCoefficients1: " << vec(rig.dist1) << "\n";
  out << "distortionCoefficients2: " << vec(rig.dist2) << "\n";
  out << "rotationOfCamera2: " << row_major(rig.rotation) << "\n";
  out << "translationOfCamera2: " << vec(rig.translation) << "\n";
}

inline void write_calibration_file(const StereoRig& rig, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  write_calibration(rig, out);
}

}  // namespace stereotrack::mot
