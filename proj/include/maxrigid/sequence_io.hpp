#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "maxrigid/error.hpp"
#include "maxrigid/geometry.hpp"
#include "maxrigid/sequence.hpp"

// JSON sequence file, schema_version 1 (field table in docs/sequence_format.md):
//
//   {
//     "schema_version": 1,
//     "intrinsics": [[fx, s, cx], [0, fy, cy], [0, 0, 1]],
//     "frames": [[{"u": .., "v": .., "visible": true}, ...], ...],
//     "ground_truth": [[[x, y, z], ...], ...]          (optional)
//   }

namespace maxrigid {

inline constexpr int kSequenceSchemaVersion = 1;

namespace detail {

inline std::string json_real(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

[[noreturn]] inline void schema_error(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::ParseError, where + ": " + what);
}

inline double number_at(const nlohmann::json& j, const std::string& where) {
  if (!j.is_number()) schema_error(where, "expected a number");
  return j.get<double>();
}

inline const nlohmann::json& array_at(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array()) schema_error(where, "expected an array");
  return j;
}

}  // namespace detail

// Writes with 17 significant digits so that reading back is bit-exact.
inline void write_sequence(std::ostream& os, const TrackedSequence& seq) {
  using detail::json_real;
  const Mat3& k = seq.intrinsics.matrix();
  os << "{\n  \"schema_version\": " << kSequenceSchemaVersion << ",\n  \"intrinsics\": [";
  for (int r = 0; r < 3; ++r) {
    os << (r ? ", [" : "[") << json_real(k(r, 0)) << ", " << json_real(k(r, 1)) << ", " << json_real(k(r, 2)) << ']';
  }
  os << "],\n  \"frames\": [";
  for (std::size_t f = 0; f < seq.n_frames(); ++f) {
    os << (f ? ",\n    [" : "\n    [");
    for (std::size_t i = 0; i < seq.n_points(); ++i) {
      const Observation& o = seq.observations(f, i);
      os << (i ? ", " : "") << "{\"u\": " << json_real(o.u) << ", \"v\": " << json_real(o.v)
         << ", \"visible\": " << (o.visible ? "true" : "false") << '}';
    }
    os << ']';
  }
  os << "\n  ]";
  if (seq.ground_truth) {
    const Grid<Vec3>& gt = *seq.ground_truth;
    os << ",\n  \"ground_truth\": [";
    for (std::size_t f = 0; f < gt.frames(); ++f) {
      os << (f ? ",\n    [" : "\n    [");
      for (std::size_t i = 0; i < gt.points(); ++i) {
        const Vec3& p = gt(f, i);
        os << (i ? ", [" : "[") << json_real(p.x()) << ", " << json_real(p.y()) << ", " << json_real(p.z()) << ']';
      }
      os << ']';
    }
    os << "\n  ]";
  }
  os << "\n}\n";
}

inline TrackedSequence read_sequence(std::istream& is) {
  using detail::schema_error;
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  if (!doc.is_object()) schema_error("document", "expected an object");
  if (!doc.contains("schema_version")) schema_error("schema_version", "missing");
  if (!doc["schema_version"].is_number_integer()) schema_error("schema_version", "expected an integer");
  const int version = doc["schema_version"].get<int>();
  if (version != kSequenceSchemaVersion) {
    throw Error(ErrorCode::UnsupportedVersion, "sequence schema_version " + std::to_string(version));
  }

  TrackedSequence seq;
  if (!doc.contains("intrinsics")) schema_error("intrinsics", "missing");
  const auto& kj = detail::array_at(doc["intrinsics"], "intrinsics");
  if (kj.size() != 3) schema_error("intrinsics", "expected 3 rows");
  Mat3 k;
  for (int r = 0; r < 3; ++r) {
    const std::string where = "intrinsics[" + std::to_string(r) + "]";
    const auto& row = detail::array_at(kj[static_cast<std::size_t>(r)], where);
    if (row.size() != 3) schema_error(where, "expected 3 entries");
    for (int c = 0; c < 3; ++c) {
      k(r, c) = detail::number_at(row[static_cast<std::size_t>(c)], where + "[" + std::to_string(c) + "]");
    }
  }
  seq.intrinsics = CameraIntrinsics(k);

  if (!doc.contains("frames")) schema_error("frames", "missing");
  const auto& frames = detail::array_at(doc["frames"], "frames");
  const std::size_t m = frames.size();
  const std::size_t n = m == 0 ? 0 : detail::array_at(frames[0], "frames[0]").size();
  seq.observations = Grid<Observation>(m, n);
  for (std::size_t f = 0; f < m; ++f) {
    const std::string where = "frames[" + std::to_string(f) + "]";
    const auto& row = detail::array_at(frames[f], where);
    if (row.size() != n) {
      schema_error(where, "has " + std::to_string(row.size()) + " points, frame 0 has " + std::to_string(n));
    }
    for (std::size_t i = 0; i < n; ++i) {
      const std::string at = where + "[" + std::to_string(i) + "]";
      const auto& o = row[i];
      if (!o.is_object()) schema_error(at, "expected an object");
      if (!o.contains("visible") || !o["visible"].is_boolean()) schema_error(at, "'visible' must be a boolean");
      Observation obs;
      obs.visible = o["visible"].get<bool>();
      for (const char* key : {"u", "v"}) {
        double value = 0.0;
        if (!o.contains(key)) schema_error(at, std::string("missing '") + key + "'");
        if (o[key].is_null()) {
          if (obs.visible) schema_error(at, std::string("visible entry has null '") + key + "'");
          value = std::nan("");
        } else {
          value = detail::number_at(o[key], at + "." + key);
        }
        (key[0] == 'u' ? obs.u : obs.v) = value;
      }
      seq.observations(f, i) = obs;
    }
  }

  if (doc.contains("ground_truth") && !doc["ground_truth"].is_null()) {
    const auto& gj = detail::array_at(doc["ground_truth"], "ground_truth");
    if (gj.size() != m) schema_error("ground_truth", "expected " + std::to_string(m) + " frames");
    Grid<Vec3> gt(m, n);
    for (std::size_t f = 0; f < m; ++f) {
      const std::string where = "ground_truth[" + std::to_string(f) + "]";
      const auto& row = detail::array_at(gj[f], where);
      if (row.size() != n) schema_error(where, "has " + std::to_string(row.size()) + " points, expected " + std::to_string(n));
      for (std::size_t i = 0; i < n; ++i) {
        const std::string at = where + "[" + std::to_string(i) + "]";
        const auto& p = detail::array_at(row[i], at);
        if (p.size() != 3) schema_error(at, "expected [x, y, z]");
        for (std::size_t c = 0; c < 3; ++c) gt(f, i)(static_cast<Eigen::Index>(c)) = detail::number_at(p[c], at);
      }
    }
    seq.ground_truth = std::move(gt);
  }
  return seq;
}

inline TrackedSequence read_sequence_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  try {
    return read_sequence(in);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ParseError) throw;
    throw Error(ErrorCode::ParseError, path + ": " + e.detail());
  }
}

inline std::string sequence_to_string(const TrackedSequence& seq) {
  std::ostringstream os;
  write_sequence(os, seq);
  return os.str();
}

inline void write_sequence_file(const std::string& path, const TrackedSequence& seq) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  write_sequence(out, seq);
  out.flush();
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

}  // namespace maxrigid
