#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SVD>

#include "maxrigid/error.hpp"
#include "maxrigid/geometry.hpp"
#include "maxrigid/grid.hpp"
#include "maxrigid/neighbor_graph.hpp"
#include "maxrigid/reconstruction.hpp"

namespace maxrigid {

struct SimilarityTransform {
  double scale = 1.0;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return scale * (rotation * p) + translation; }
};

enum class AlignmentKind { None, GlobalScale, ProcrustesPerFrame, ProcrustesGlobal };

constexpr std::string_view to_string(AlignmentKind k) {
  switch (k) {
    case AlignmentKind::None: return "none";
    case AlignmentKind::GlobalScale: return "global-scale";
    case AlignmentKind::ProcrustesPerFrame: return "procrustes-per-frame";
    case AlignmentKind::ProcrustesGlobal: return "procrustes-global";
  }
  return "unknown";
}

struct Alignment {
  AlignmentKind kind = AlignmentKind::None;
  double scale = 1.0;                         // GlobalScale
  std::vector<SimilarityTransform> transforms;  // one per frame, or a single global one
};

struct EvaluationReport {
  double rmse = 0.0;
  double r_err = 0.0;  // percent
  std::vector<std::size_t> frames;  // frames that entered the averages
  std::vector<double> per_frame_rmse;
  std::vector<double> per_frame_r_err;
  std::size_t points_compared = 0;
  Alignment alignment;
};

struct RigidityDiagnostics {
  std::vector<Edge> edges;  // edges that were evaluated
  std::vector<double> ullman_deviation;
  std::vector<double> max_distances;
  double total_delta_prime = 0.0;
  std::vector<Edge> skipped_edges;
  std::vector<std::string> warnings;
};

namespace detail {

inline void check_shapes(const Reconstruction& recon, const Grid<Vec3>& truth) {
  if (recon.n_frames() != truth.frames() || recon.n_points() != truth.points()) {
    throw Error(ErrorCode::InvalidConfig, "reconstruction and ground truth have different shapes");
  }
}

inline Reconstruction map_points(const Reconstruction& recon, const auto& fn) {
  Reconstruction out = recon;
  for (std::size_t k = 0; k < recon.n_frames(); ++k) {
    for (std::size_t i = 0; i < recon.n_points(); ++i) {
      if (recon.points(k, i)) out.points(k, i) = fn(k, *recon.points(k, i));
    }
  }
  return out;
}

}  // namespace detail

struct ScaleAlignment {
  Reconstruction aligned;
  double scale = 1.0;
};

// One global scale s minimizing sum ||truth - s * recon||^2 over all present points.
inline ScaleAlignment align_scale(const Reconstruction& recon, const Grid<Vec3>& truth) {
  detail::check_shapes(recon, truth);
  double num = 0.0, den = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < recon.n_frames(); ++k) {
    for (std::size_t i = 0; i < recon.n_points(); ++i) {
      if (!recon.points(k, i)) continue;
      num += truth(k, i).dot(*recon.points(k, i));
      den += recon.points(k, i)->squaredNorm();
      ++count;
    }
  }
  if (count == 0) throw Error(ErrorCode::NoOverlap, "no reconstructed point to align");
  if (!(den > 0.0)) throw Error(ErrorCode::ScaleUndefined, "reconstruction is identically zero");
  const double s = std::max(num / den, std::numeric_limits<double>::min());
  return ScaleAlignment{detail::map_points(recon, [s](std::size_t, const Vec3& p) { return Vec3(s * p); }), s};
}

// Similarity (c, R, t) minimizing sum ||dst - (c R src + t)||^2, by SVD of the
// cross-covariance with a reflection guard.
inline SimilarityTransform procrustes(const Eigen::Matrix3Xd& src, const Eigen::Matrix3Xd& dst) {
  const Eigen::Index n = src.cols();
  if (n < 3 || dst.cols() != n) throw Error(ErrorCode::AlignmentDegenerate, "need at least 3 point pairs");
  const Vec3 mu_src = src.rowwise().mean();
  const Vec3 mu_dst = dst.rowwise().mean();
  const Eigen::Matrix3Xd a = src.colwise() - mu_src;
  const Eigen::Matrix3Xd b = dst.colwise() - mu_dst;
  const double var_src = a.squaredNorm() / static_cast<double>(n);

  Eigen::JacobiSVD<Eigen::Matrix3d> src_svd(a * a.transpose());
  const Eigen::Vector3d sv = src_svd.singularValues();
  if (!(sv(0) > 0.0) || sv(1) <= 1e-12 * sv(0)) {
    throw Error(ErrorCode::AlignmentDegenerate, "source points are coincident or collinear");
  }

  const Mat3 cov = b * a.transpose() / static_cast<double>(n);
  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Vec3 sign = Vec3::Ones();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) sign(2) = -1.0;

  SimilarityTransform t;
  t.rotation = svd.matrixU() * sign.asDiagonal() * svd.matrixV().transpose();
  t.scale = svd.singularValues().dot(sign) / var_src;
  t.translation = mu_dst - t.scale * t.rotation * mu_src;
  return t;
}

struct ProcrustesAlignment {
  Reconstruction aligned;
  std::vector<SimilarityTransform> transforms;
};

// Per-frame similarity alignment, or one shared similarity when `global`.
inline ProcrustesAlignment align_procrustes(const Reconstruction& recon, const Grid<Vec3>& truth,
                                            bool global = false) {
  detail::check_shapes(recon, truth);
  auto collect = [&](std::size_t k0, std::size_t k1) {
    std::vector<std::pair<Vec3, Vec3>> pairs;
    for (std::size_t k = k0; k < k1; ++k) {
      for (std::size_t i = 0; i < recon.n_points(); ++i) {
        if (recon.points(k, i)) pairs.emplace_back(*recon.points(k, i), truth(k, i));
      }
    }
    Eigen::Matrix3Xd src(3, static_cast<Eigen::Index>(pairs.size()));
    Eigen::Matrix3Xd dst(3, static_cast<Eigen::Index>(pairs.size()));
    for (std::size_t c = 0; c < pairs.size(); ++c) {
      src.col(static_cast<Eigen::Index>(c)) = pairs[c].first;
      dst.col(static_cast<Eigen::Index>(c)) = pairs[c].second;
    }
    return procrustes(src, dst);
  };

  ProcrustesAlignment out;
  if (global) {
    out.transforms.push_back(collect(0, recon.n_frames()));
  } else {
    for (std::size_t k = 0; k < recon.n_frames(); ++k) {
      bool any = false;
      for (std::size_t i = 0; i < recon.n_points() && !any; ++i) any = recon.points(k, i).has_value();
      out.transforms.push_back(any ? collect(k, k + 1) : SimilarityTransform{});
    }
  }
  out.aligned = detail::map_points(recon, [&](std::size_t k, const Vec3& p) {
    return out.transforms[global ? 0 : k].apply(p);
  });
  return out;
}

// RMSE: mean over frames of sqrt(mean squared point error over the frame's
// present points). R-Err: mean over frames of ||truth - recon||_F / ||truth||_F,
// in percent. Frames without any present point do not count.
inline EvaluationReport compute_metrics(const Reconstruction& recon, const Grid<Vec3>& truth) {
  detail::check_shapes(recon, truth);
  EvaluationReport rep;
  for (std::size_t k = 0; k < recon.n_frames(); ++k) {
    double err2 = 0.0, truth2 = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < recon.n_points(); ++i) {
      if (!recon.points(k, i)) continue;
      err2 += (truth(k, i) - *recon.points(k, i)).squaredNorm();
      truth2 += truth(k, i).squaredNorm();
      ++count;
    }
    if (count == 0) continue;
    rep.frames.push_back(k);
    rep.per_frame_rmse.push_back(std::sqrt(err2 / static_cast<double>(count)));
    double rel = 0.0;
    if (truth2 > 0.0) {
      rel = std::sqrt(err2 / truth2);
    } else if (err2 > 0.0) {
      rel = std::numeric_limits<double>::infinity();
    }
    rep.per_frame_r_err.push_back(100.0 * rel);
    rep.points_compared += count;
  }
  if (rep.frames.empty()) throw Error(ErrorCode::NoOverlap, "no frame has a reconstructed point");
  const auto m = static_cast<double>(rep.frames.size());
  for (double v : rep.per_frame_rmse) rep.rmse += v;
  for (double v : rep.per_frame_r_err) rep.r_err += v;
  rep.rmse /= m;
  rep.r_err /= m;
  return rep;
}

// Global scale alignment followed by the metrics, as used by the pipeline.
inline EvaluationReport evaluate(const Reconstruction& recon, const Grid<Vec3>& truth) {
  const ScaleAlignment sa = align_scale(recon, truth);
  EvaluationReport rep = compute_metrics(sa.aligned, truth);
  rep.alignment.kind = AlignmentKind::GlobalScale;
  rep.alignment.scale = sa.scale;
  return rep;
}

// Realized edge lengths d_ij^k, their maximum g_ij, the total deviation
// sum |g - d| and the per-edge deviation sum (dbar - d)^2 / dbar^3 against the
// internal model dbar (g unless supplied, one value per graph edge).
inline RigidityDiagnostics rigidity_diagnostics(const Reconstruction& recon, const NeighborGraph& graph,
                                                const std::optional<std::vector<double>>& internal_model =
                                                    std::nullopt) {
  if (internal_model && internal_model->size() != graph.edges.size()) {
    throw Error(ErrorCode::InvalidConfig, "internal model needs one length per edge");
  }
  RigidityDiagnostics diag;
  std::vector<double> lengths;
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    const Edge& edge = graph.edges[e];
    lengths.clear();
    for (std::size_t k = 0; k < recon.n_frames(); ++k) {
      const auto& a = recon.points(k, edge.i);
      const auto& b = recon.points(k, edge.j);
      if (a && b) lengths.push_back((*a - *b).norm());
    }
    if (lengths.empty()) {
      diag.skipped_edges.push_back(edge);
      diag.warnings.push_back("edge (" + std::to_string(edge.i) + ", " + std::to_string(edge.j) +
                              ") is never co-present; skipped");
      continue;
    }
    const double g = *std::max_element(lengths.begin(), lengths.end());
    const double dbar = internal_model ? (*internal_model)[e] : g;
    double delta = 0.0;
    for (double d : lengths) {
      diag.total_delta_prime += std::abs(g - d);
      if (dbar > 0.0) delta += (dbar - d) * (dbar - d) / (dbar * dbar * dbar);
    }
    diag.edges.push_back(edge);
    diag.max_distances.push_back(g);
    diag.ullman_deviation.push_back(delta);
  }
  return diag;
}

}  // namespace maxrigid
