#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "maxrigid/conic_solver.hpp"
#include "maxrigid/degeneracy.hpp"
#include "maxrigid/error.hpp"
#include "maxrigid/evaluation.hpp"
#include "maxrigid/reconstruction.hpp"
#include "maxrigid/solution.hpp"

// JSON/CSV renderings of pipeline outputs. Frame indices are translated back
// to the input sequence through `frame_ids` (the ingestion's kept frames).

namespace maxrigid {

using ordered_json = nlohmann::ordered_json;

namespace detail {

inline ordered_json real_or_null(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

inline ordered_json vec3_json(const Vec3& p) { return ordered_json::array({p.x(), p.y(), p.z()}); }

inline ordered_json edge_json(const Edge& e) { return ordered_json::array({e.i, e.j}); }

inline std::size_t frame_id(const std::vector<std::size_t>& ids, std::size_t k) { return k < ids.size() ? ids[k] : k; }

}  // namespace detail

inline ordered_json to_json(const Residuals& r) {
  return ordered_json{{"primal", r.primal}, {"dual", r.dual}, {"gap", r.gap}};
}

inline ordered_json to_json(const DegeneracyReport& d) {
  return ordered_json{{"verdict", to_string(d.verdict)},
                      {"pure_rotation", d.pure_rotation},
                      {"near_orthographic", d.near_orthographic},
                      {"max_cosine_std", d.max_cosine_std},
                      {"max_angle_rad", d.max_angle},
                      {"edges_considered", d.edges_considered},
                      {"tol_rotation", d.thresholds.rotation_cosine_std},
                      {"tol_orthographic_rad", d.thresholds.orthographic_angle}};
}

inline ordered_json to_json(const EvaluationReport& e, const std::vector<std::size_t>& frame_ids = {}) {
  ordered_json frames = ordered_json::array();
  for (std::size_t t = 0; t < e.frames.size(); ++t) {
    frames.push_back(ordered_json{{"frame", detail::frame_id(frame_ids, e.frames[t])},
                                  {"rmse", detail::real_or_null(e.per_frame_rmse[t])},
                                  {"r_err_percent", detail::real_or_null(e.per_frame_r_err[t])}});
  }
  ordered_json align{{"kind", to_string(e.alignment.kind)}, {"scale", e.alignment.scale}};
  if (!e.alignment.transforms.empty()) {
    ordered_json ts = ordered_json::array();
    for (const SimilarityTransform& t : e.alignment.transforms) {
      ordered_json rot = ordered_json::array();
      for (int r = 0; r < 3; ++r) rot.push_back({t.rotation(r, 0), t.rotation(r, 1), t.rotation(r, 2)});
      ts.push_back(ordered_json{{"scale", t.scale}, {"rotation", rot}, {"translation", detail::vec3_json(t.translation)}});
    }
    align["transforms"] = ts;
  }
  return ordered_json{{"rmse", detail::real_or_null(e.rmse)},
                      {"r_err_percent", detail::real_or_null(e.r_err)},
                      {"points_compared", e.points_compared},
                      {"alignment", align},
                      {"per_frame", frames}};
}

inline ordered_json to_json(const RigidityDiagnostics& d) {
  ordered_json edges = ordered_json::array();
  for (std::size_t e = 0; e < d.edges.size(); ++e) {
    edges.push_back(ordered_json{{"edge", detail::edge_json(d.edges[e])},
                                 {"max_distance", d.max_distances[e]},
                                 {"ullman_deviation", d.ullman_deviation[e]}});
  }
  ordered_json skipped = ordered_json::array();
  for (const Edge& e : d.skipped_edges) skipped.push_back(detail::edge_json(e));
  return ordered_json{{"total_delta_prime", d.total_delta_prime}, {"edges", edges}, {"skipped_edges", skipped}};
}

inline ordered_json to_json(const Reconstruction& rec, const std::vector<std::size_t>& frame_ids = {}) {
  ordered_json frames = ordered_json::array();
  for (std::size_t k = 0; k < rec.n_frames(); ++k) {
    ordered_json pts = ordered_json::array();
    ordered_json legs = ordered_json::array();
    for (std::size_t i = 0; i < rec.n_points(); ++i) {
      pts.push_back(rec.points(k, i) ? detail::vec3_json(*rec.points(k, i)) : ordered_json(nullptr));
      legs.push_back(rec.source_legs(k, i) ? ordered_json(*rec.source_legs(k, i)) : ordered_json(nullptr));
    }
    frames.push_back(ordered_json{
        {"frame", detail::frame_id(frame_ids, k)},
        {"rank_ratio", rec.rank_ratios[k] ? ordered_json(*rec.rank_ratios[k]) : ordered_json(nullptr)},
        {"legs", legs},
        {"points", pts}});
  }
  return ordered_json{{"n_frames", rec.n_frames()}, {"n_points", rec.n_points()}, {"frames", frames}};
}

struct LoadedReconstruction {
  Reconstruction reconstruction;
  std::vector<std::size_t> frame_ids;  // input-sequence frame of each row
};

// Inverse of to_json(Reconstruction).
inline LoadedReconstruction reconstruction_from_json(const nlohmann::json& doc) {
  auto fail = [](const std::string& where, const std::string& what) {
    throw Error(ErrorCode::ParseError, where + ": " + what);
  };
  try {
    const std::size_t m = doc.at("n_frames").get<std::size_t>();
    const std::size_t n = doc.at("n_points").get<std::size_t>();
    const auto& frames = doc.at("frames");
    if (!frames.is_array() || frames.size() != m) fail("frames", "expected " + std::to_string(m) + " entries");
    LoadedReconstruction out;
    Reconstruction& rec = out.reconstruction;
    rec.points = Grid<std::optional<Vec3>>(m, n);
    rec.source_legs = Grid<std::optional<double>>(m, n);
    rec.rank_ratios.assign(m, std::nullopt);
    for (std::size_t k = 0; k < m; ++k) {
      const std::string where = "frames[" + std::to_string(k) + "]";
      const auto& f = frames[k];
      out.frame_ids.push_back(f.at("frame").get<std::size_t>());
      if (!f.at("rank_ratio").is_null()) rec.rank_ratios[k] = f.at("rank_ratio").get<double>();
      const auto& pts = f.at("points");
      const auto& legs = f.at("legs");
      if (pts.size() != n || legs.size() != n) fail(where, "expected " + std::to_string(n) + " points");
      for (std::size_t i = 0; i < n; ++i) {
        if (!legs[i].is_null()) rec.source_legs(k, i) = legs[i].get<double>();
        if (pts[i].is_null()) continue;
        if (!pts[i].is_array() || pts[i].size() != 3) fail(where + ".points[" + std::to_string(i) + "]", "not a 3-vector");
        rec.points(k, i) = Vec3(pts[i][0].get<double>(), pts[i][1].get<double>(), pts[i][2].get<double>());
      }
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("reconstruction: ") + e.what());
  }
}

inline ordered_json solver_json(const SolverSolution& s, const std::vector<std::size_t>& frame_ids = {}) {
  ordered_json dhat = ordered_json::array();
  for (const DhatValue& d : s.dhat) {
    dhat.push_back(ordered_json{{"frame", detail::frame_id(frame_ids, d.frame)},
                                {"edge", detail::edge_json(s.edges[d.edge])},
                                {"value", d.value}});
  }
  ordered_json ghat = ordered_json::array();
  for (std::size_t e = 0; e < s.ghat.size(); ++e) {
    ghat.push_back(ordered_json{{"edge", detail::edge_json(s.edges[e])}, {"value", s.ghat[e]}});
  }
  return ordered_json{{"status", to_string(s.status)},
                      {"objective", s.objective_value},
                      {"iterations", s.iterations},
                      {"residuals", to_json(s.residuals)},
                      {"hatted_surrogate", s.hatted_surrogate()},
                      {"ghat", ghat},
                      {"dhat", dhat}};
}

inline ordered_json to_json(const ConicSolution& s) {
  return ordered_json{{"status", to_string(s.status)}, {"objective", s.objective}, {"iterations", s.iterations},
                      {"residuals", to_json(s.residuals)}, {"x", s.x},      {"y", s.y}};
}

// frame,rmse,r_err_percent,rank_ratio
inline std::string per_frame_csv(const Reconstruction& rec, const std::optional<EvaluationReport>& eval,
                                 const std::vector<std::size_t>& frame_ids = {}) {
  auto fmt = [](std::optional<double> v) {
    if (!v || !std::isfinite(*v)) return std::string();
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", *v);
    return std::string(buf);
  };
  std::ostringstream os;
  os << "frame,rmse,r_err_percent,rank_ratio\n";
  for (std::size_t k = 0; k < rec.n_frames(); ++k) {
    std::optional<double> rmse, rerr;
    if (eval) {
      for (std::size_t t = 0; t < eval->frames.size(); ++t) {
        if (eval->frames[t] == k) {
          rmse = eval->per_frame_rmse[t];
          rerr = eval->per_frame_r_err[t];
        }
      }
    }
    os << detail::frame_id(frame_ids, k) << ',' << fmt(rmse) << ',' << fmt(rerr) << ',' << fmt(rec.rank_ratios[k])
       << '\n';
  }
  return os.str();
}

// Writes to a sibling temporary file and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw Error(ErrorCode::IoError, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::IoError, "cannot move " + tmp.string() + " to " + path.string());
  }
}

inline std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

}  // namespace maxrigid
