#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "maxrigid/error.hpp"
#include "maxrigid/geometry.hpp"
#include "maxrigid/grid.hpp"

namespace maxrigid {

// Calibrated 2D point tracks: observations(frame, point), plus optional
// camera-frame ground truth in scene units.
struct TrackedSequence {
  CameraIntrinsics intrinsics;
  Grid<Observation> observations;
  std::optional<Grid<Vec3>> ground_truth;

  std::size_t n_frames() const noexcept { return observations.frames(); }
  std::size_t n_points() const noexcept { return observations.points(); }

  bool visible(std::size_t frame, std::size_t point) const { return observations(frame, point).visible; }

  std::size_t visible_count(std::size_t frame) const {
    std::size_t count = 0;
    for (std::size_t i = 0; i < n_points(); ++i) count += visible(frame, i) ? 1 : 0;
    return count;
  }

  std::size_t visible_total() const {
    std::size_t count = 0;
    for (std::size_t k = 0; k < n_frames(); ++k) count += visible_count(k);
    return count;
  }

  double masked_fraction() const {
    const std::size_t cells = n_frames() * n_points();
    return cells == 0 ? 0.0 : static_cast<double>(cells - visible_total()) / static_cast<double>(cells);
  }
};

// Unit rays for every visible observation; absent entries for masked ones.
inline Grid<std::optional<NormalizedRay>> compute_rays(const TrackedSequence& seq) {
  Grid<std::optional<NormalizedRay>> rays(seq.n_frames(), seq.n_points());
  for (std::size_t k = 0; k < seq.n_frames(); ++k) {
    for (std::size_t i = 0; i < seq.n_points(); ++i) {
      if (seq.visible(k, i)) rays(k, i) = normalize_ray(seq.intrinsics, seq.observations(k, i));
    }
  }
  return rays;
}

struct IngestResult {
  TrackedSequence sequence;
  std::vector<std::size_t> kept_frames;     // original indices of retained frames
  std::vector<std::size_t> dropped_frames;  // frames with visible count <= k
};

// Drops frames whose visible-point count does not exceed the neighborhood
// size, then checks the remaining sequence is usable: n >= 3, m >= 2, every
// point seen in at least two frames, every visible ray in front of the camera.
inline IngestResult ingest(const TrackedSequence& seq, std::size_t k_neighbors) {
  if (seq.n_points() < 3) {
    throw Error(ErrorCode::InvalidSequence, "need at least 3 points, got " + std::to_string(seq.n_points()));
  }
  if (seq.ground_truth && (seq.ground_truth->frames() != seq.n_frames() ||
                           seq.ground_truth->points() != seq.n_points())) {
    throw Error(ErrorCode::InvalidSequence, "ground truth grid shape does not match observations");
  }

  IngestResult out;
  for (std::size_t k = 0; k < seq.n_frames(); ++k) {
    if (seq.visible_count(k) > k_neighbors) {
      out.kept_frames.push_back(k);
    } else {
      out.dropped_frames.push_back(k);
    }
  }
  if (out.kept_frames.size() < 2) {
    throw Error(ErrorCode::InvalidSequence,
                "need at least 2 frames with more than " + std::to_string(k_neighbors) +
                    " visible points, got " + std::to_string(out.kept_frames.size()));
  }

  TrackedSequence& kept = out.sequence;
  kept.intrinsics = seq.intrinsics;
  kept.observations = Grid<Observation>(out.kept_frames.size(), seq.n_points());
  if (seq.ground_truth) kept.ground_truth = Grid<Vec3>(out.kept_frames.size(), seq.n_points(), Vec3::Zero());
  for (std::size_t r = 0; r < out.kept_frames.size(); ++r) {
    const std::size_t k = out.kept_frames[r];
    for (std::size_t i = 0; i < seq.n_points(); ++i) {
      kept.observations(r, i) = seq.observations(k, i);
      if (seq.ground_truth) (*kept.ground_truth)(r, i) = (*seq.ground_truth)(k, i);
    }
  }

  for (std::size_t i = 0; i < kept.n_points(); ++i) {
    std::size_t seen = 0;
    for (std::size_t k = 0; k < kept.n_frames(); ++k) seen += kept.visible(k, i) ? 1 : 0;
    if (seen < 2) {
      throw Error(ErrorCode::InvalidSequence,
                  "point " + std::to_string(i) + " is visible in " + std::to_string(seen) +
                      " retained frame(s); at least 2 are required");
    }
  }
  // Validates every visible observation (finite, in front of the camera).
  (void)compute_rays(kept);
  return out;
}

}  // namespace maxrigid
