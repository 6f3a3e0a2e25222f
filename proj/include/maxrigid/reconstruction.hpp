#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "maxrigid/error.hpp"
#include "maxrigid/geometry.hpp"
#include "maxrigid/grid.hpp"
#include "maxrigid/psd.hpp"
#include "maxrigid/sequence.hpp"
#include "maxrigid/solution.hpp"

namespace maxrigid {

struct Reconstruction {
  Grid<std::optional<Vec3>> points;            // absent where not visible
  std::vector<std::optional<double>> rank_ratios;  // per frame; absent for dropped frames
  Grid<std::optional<double>> source_legs;

  std::size_t n_frames() const noexcept { return points.frames(); }
  std::size_t n_points() const noexcept { return points.points(); }
};

struct ReconstructOptions {
  bool accept_max_iterations = false;
  double leg_tolerance = 1e-6;  // legs in [-tol, 0) are clamped to zero
};

inline Reconstruction reconstruct_from_legs(const TrackedSequence& seq, const Grid<std::optional<double>>& legs,
                                            double leg_tolerance = 1e-6) {
  if (legs.frames() != seq.n_frames() || legs.points() != seq.n_points()) {
    throw Error(ErrorCode::InvalidConfig, "leg grid does not match the sequence");
  }
  Reconstruction rec;
  rec.points = Grid<std::optional<Vec3>>(seq.n_frames(), seq.n_points());
  rec.source_legs = Grid<std::optional<double>>(seq.n_frames(), seq.n_points());
  rec.rank_ratios.assign(seq.n_frames(), std::nullopt);
  for (std::size_t k = 0; k < seq.n_frames(); ++k) {
    for (std::size_t i = 0; i < seq.n_points(); ++i) {
      const auto& leg = legs(k, i);
      if (!leg || !seq.visible(k, i)) continue;
      if (*leg < -leg_tolerance || !std::isfinite(*leg)) {
        throw Error(ErrorCode::SolutionRejected, "leg of point " + std::to_string(i) + " in frame " +
                                                     std::to_string(k) + " is " + std::to_string(*leg));
      }
      const double l = std::max(*leg, 0.0);
      rec.source_legs(k, i) = l;
      rec.points(k, i) = point_from_leg(l, normalize_ray(seq.intrinsics, seq.observations(k, i)));
    }
  }
  return rec;
}

// Back-substitutes legs along their viewing rays: Q = l * ray.
inline Reconstruction reconstruct(const TrackedSequence& seq, const SolverSolution& sol,
                                  const ReconstructOptions& options = {}) {
  const bool usable = sol.status == SolveStatus::Optimal ||
                      (sol.status == SolveStatus::MaxIterations && options.accept_max_iterations);
  if (!usable) {
    throw Error(ErrorCode::SolutionRejected, "solver status " + std::string(to_string(sol.status)));
  }
  Reconstruction rec = reconstruct_from_legs(seq, sol.legs, options.leg_tolerance);
  for (const FrameSolution& fs : sol.psd_blocks) {
    rec.rank_ratios[fs.frame] = check_rank_one(fs.gram(), fs.legs()).ratio;
  }
  return rec;
}

}  // namespace maxrigid
