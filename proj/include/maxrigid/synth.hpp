#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "maxrigid/error.hpp"
#include "maxrigid/geometry.hpp"
#include "maxrigid/grid.hpp"
#include "maxrigid/random.hpp"
#include "maxrigid/sequence.hpp"

namespace maxrigid {

enum class MotionKind { Rigid, PointArticulated, AxisArticulated, BendingSheet, PureRotation };

constexpr std::string_view to_string(MotionKind k) {
  switch (k) {
    case MotionKind::Rigid: return "rigid";
    case MotionKind::PointArticulated: return "point-articulated";
    case MotionKind::AxisArticulated: return "axis-articulated";
    case MotionKind::BendingSheet: return "bending-sheet";
    case MotionKind::PureRotation: return "pure-rotation";
  }
  return "unknown";
}

inline std::optional<MotionKind> parse_motion_kind(std::string_view s) {
  for (MotionKind k : {MotionKind::Rigid, MotionKind::PointArticulated, MotionKind::AxisArticulated,
                       MotionKind::BendingSheet, MotionKind::PureRotation}) {
    if (s == to_string(k)) return k;
  }
  return std::nullopt;
}

// Scene units: the body spans roughly [-1, 1] in x and y.
struct SynthesisConfig {
  std::size_t n_points = 20;
  std::size_t n_frames = 5;
  MotionKind motion_kind = MotionKind::Rigid;
  double noise_sigma = 0.0;    // pixels
  double missing_ratio = 0.0;  // fraction of (frame, point) entries hidden
  std::uint64_t rng_seed = 0;
  // Seed of the visibility-mask stream; derived from rng_seed when absent so
  // the same scene can be paired with different masks.
  std::optional<std::uint64_t> mask_seed;
  // When set, pixel noise comes from its own stream so one scene can be
  // corrupted several ways; otherwise it continues the scene stream.
  std::optional<std::uint64_t> noise_seed;
  double fov_degrees = 81.69;  // horizontal
  double image_width = 640.0;
  double image_height = 480.0;

  double scene_depth = 3.0;         // camera-to-body-center distance
  double cloud_thickness = 0.2;     // z half-extent of the rigid cloud
  double rotation_min = 0.4;        // per-frame body rotation angle range, radians
  double rotation_max = 1.0;
  double translation_jitter = 0.5;  // per-axis range of the body center offset
  double articulation_max = 0.8;    // largest relative rotation between groups, radians
  double sheet_spacing = 0.5;       // grid step of the bending sheet
  double curvature_max = 1.2;       // largest bending curvature (1 / radius)
  double pure_rotation_max = 0.3;   // camera-centered rotation range, radians

  // Missing-data sampling keeps every frame above this many visible points.
  std::size_t k_neighbors = 10;
  std::size_t max_resample_attempts = 1000;

  void validate() const {
    auto fail = [](const std::string& m) { throw Error(ErrorCode::InvalidConfig, m); };
    if (n_points < 3) fail("n_points must be at least 3");
    if (n_frames < 2) fail("n_frames must be at least 2");
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) fail("noise_sigma must be >= 0");
    if (!(missing_ratio >= 0.0 && missing_ratio < 1.0)) fail("missing_ratio must lie in [0, 1)");
    if (!(scene_depth > 0.0)) fail("scene_depth must be positive");
    if (!(rotation_min >= 0.0 && rotation_max >= rotation_min)) fail("invalid rotation range");
    if (motion_kind == MotionKind::BendingSheet) {
      const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n_points))));
      if (side * side != n_points) fail("bending-sheet needs a square number of points");
    }
    if (max_resample_attempts < 1) fail("max_resample_attempts must be >= 1");
  }
};

namespace detail {

inline std::vector<Vec3> rigid_cloud(Random& rng, const SynthesisConfig& c) {
  std::vector<Vec3> pts(c.n_points);
  for (Vec3& p : pts) {
    const double x = rng.uniform(-1.0, 1.0);
    const double y = rng.uniform(-1.0, 1.0);
    const double z = rng.uniform(-c.cloud_thickness, c.cloud_thickness);
    p = Vec3(x, y, z);
  }
  return pts;
}

inline Vec3 body_offset(Random& rng, const SynthesisConfig& c) {
  const double tx = rng.uniform(-0.5, 0.5) * c.translation_jitter;
  const double ty = rng.uniform(-0.5, 0.5) * c.translation_jitter;
  const double tz = rng.uniform(-0.5, 0.5) * c.translation_jitter;
  return Vec3(tx, ty, c.scene_depth + tz);
}

// Square grid folded onto a cylinder of curvature `curv` along x: vertices
// sit on the circle with chord length equal to the grid spacing, so every
// grid edge keeps its length exactly.
inline std::vector<Vec3> bent_sheet(std::size_t side, double spacing, double curv) {
  std::vector<double> xs(side), zs(side);
  const double mid = 0.5 * static_cast<double>(side - 1);
  if (curv <= 0.0) {
    for (std::size_t a = 0; a < side; ++a) {
      xs[a] = (static_cast<double>(a) - mid) * spacing;
      zs[a] = 0.0;
    }
  } else {
    const double r = 1.0 / curv;
    const double step = 2.0 * std::asin(std::min(1.0, spacing / (2.0 * r)));
    for (std::size_t a = 0; a < side; ++a) {
      const double phi = (static_cast<double>(a) - mid) * step;
      xs[a] = r * std::sin(phi);
      zs[a] = r * (1.0 - std::cos(phi));
    }
  }
  std::vector<Vec3> pts;
  for (std::size_t row = 0; row < side; ++row) {
    for (std::size_t col = 0; col < side; ++col) {
      pts.emplace_back(xs[col], (static_cast<double>(row) - mid) * spacing, zs[col]);
    }
  }
  return pts;
}

inline Grid<Vec3> simulate_motion(Random& rng, const SynthesisConfig& c) {
  const std::size_t n = c.n_points;
  Grid<Vec3> gt(c.n_frames, n);

  switch (c.motion_kind) {
    case MotionKind::Rigid: {
      const auto body = rigid_cloud(rng, c);
      for (std::size_t k = 0; k < c.n_frames; ++k) {
        const Mat3 r = rng.rotation(c.rotation_min, c.rotation_max);
        const Vec3 t = body_offset(rng, c);
        for (std::size_t i = 0; i < n; ++i) gt(k, i) = r * body[i] + t;
      }
      break;
    }
    case MotionKind::PointArticulated:
    case MotionKind::AxisArticulated: {
      // Group A: x < 0 half of the cloud, group B: x >= 0, joined at the origin.
      auto body = rigid_cloud(rng, c);
      const Vec3 hinge_axis = rng.unit_vector();
      for (std::size_t k = 0; k < c.n_frames; ++k) {
        const Mat3 r = rng.rotation(c.rotation_min, c.rotation_max);
        const Vec3 t = body_offset(rng, c);
        Mat3 rel;
        if (c.motion_kind == MotionKind::PointArticulated) {
          rel = rng.rotation(0.0, c.articulation_max);
        } else {
          rel = Eigen::AngleAxisd(rng.uniform(-c.articulation_max, c.articulation_max), hinge_axis).toRotationMatrix();
        }
        for (std::size_t i = 0; i < n; ++i) {
          const Vec3 local = body[i].x() >= 0.0 ? Vec3(rel * body[i]) : body[i];
          gt(k, i) = r * local + t;
        }
      }
      break;
    }
    case MotionKind::BendingSheet: {
      const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
      for (std::size_t k = 0; k < c.n_frames; ++k) {
        const double curv = k == 0 ? 0.0 : rng.uniform(0.0, c.curvature_max);
        const Mat3 r = rng.rotation(c.rotation_min, c.rotation_max);
        const double tx = rng.uniform(-0.3, 0.3);
        const double ty = rng.uniform(-0.3, 0.3);
        const Vec3 t(tx, ty, c.scene_depth);
        const auto sheet = bent_sheet(side, c.sheet_spacing, curv);
        for (std::size_t i = 0; i < n; ++i) gt(k, i) = r * sheet[i] + t;
      }
      break;
    }
    case MotionKind::PureRotation: {
      auto body = rigid_cloud(rng, c);
      for (Vec3& p : body) p.z() += c.scene_depth;
      for (std::size_t k = 0; k < c.n_frames; ++k) {
        const Mat3 r = rng.rotation(0.0, c.pure_rotation_max);
        for (std::size_t i = 0; i < n; ++i) gt(k, i) = r * body[i];
      }
      break;
    }
  }

  for (std::size_t k = 0; k < c.n_frames; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!(gt(k, i).z() > 0.0)) {
        throw Error(ErrorCode::GenerationFailed, "point " + std::to_string(i) + " falls behind the camera in frame " +
                                                     std::to_string(k));
      }
    }
  }
  return gt;
}

inline bool visibility_ok(const Grid<unsigned char>& vis, std::size_t k_neighbors) {
  for (std::size_t k = 0; k < vis.frames(); ++k) {
    std::size_t count = 0;
    for (std::size_t i = 0; i < vis.points(); ++i) count += vis(k, i) ? 1 : 0;
    if (count <= k_neighbors) return false;
  }
  for (std::size_t i = 0; i < vis.points(); ++i) {
    std::size_t count = 0;
    for (std::size_t k = 0; k < vis.frames(); ++k) count += vis(k, i) ? 1 : 0;
    if (count < 2) return false;
  }
  return true;
}

}  // namespace detail

// Draw order on the rng_seed stream: scene geometry, then noise (u then v,
// frame-major) unless noise_seed gives noise a stream of its own. The
// visibility mask comes from a separate stream seeded with
// mask_seed (default rng_seed + 0x9E3779B97F4A7C15): one uniform per entry,
// frame-major, per attempt.
inline TrackedSequence generate(const SynthesisConfig& config) {
  config.validate();
  Random rng(config.rng_seed);

  TrackedSequence seq;
  seq.intrinsics = CameraIntrinsics::from_fov(config.image_width, config.image_height, config.fov_degrees);
  const Grid<Vec3> gt = detail::simulate_motion(rng, config);

  seq.observations = Grid<Observation>(config.n_frames, config.n_points);
  for (std::size_t k = 0; k < config.n_frames; ++k) {
    for (std::size_t i = 0; i < config.n_points; ++i) seq.observations(k, i) = project(seq.intrinsics, gt(k, i));
  }
  if (config.noise_sigma > 0.0) {
    Random noise_rng(config.noise_seed.value_or(0));
    Random& nr = config.noise_seed ? noise_rng : rng;
    for (std::size_t k = 0; k < config.n_frames; ++k) {
      for (std::size_t i = 0; i < config.n_points; ++i) {
        seq.observations(k, i).u += config.noise_sigma * nr.gaussian();
        seq.observations(k, i).v += config.noise_sigma * nr.gaussian();
      }
    }
  }

  if (config.missing_ratio > 0.0) {
    Random mask_rng(config.mask_seed.value_or(config.rng_seed + 0x9E3779B97F4A7C15ULL));
    Grid<unsigned char> vis(config.n_frames, config.n_points, 1);
    bool ok = false;
    for (std::size_t attempt = 0; attempt < config.max_resample_attempts && !ok; ++attempt) {
      for (std::size_t k = 0; k < config.n_frames; ++k) {
        for (std::size_t i = 0; i < config.n_points; ++i) vis(k, i) = mask_rng.uniform01() >= config.missing_ratio ? 1 : 0;
      }
      ok = detail::visibility_ok(vis, config.k_neighbors);
    }
    if (!ok) {
      throw Error(ErrorCode::GenerationFailed,
                  "no visibility mask satisfying the coverage rules after " +
                      std::to_string(config.max_resample_attempts) + " attempts");
    }
    for (std::size_t k = 0; k < config.n_frames; ++k) {
      for (std::size_t i = 0; i < config.n_points; ++i) {
        if (!vis(k, i)) seq.observations(k, i) = Observation{0.0, 0.0, false};
      }
    }
  }

  seq.ground_truth = gt;
  return seq;
}

}  // namespace maxrigid
