#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string_view>
#include <vector>

#include "maxrigid/geometry.hpp"
#include "maxrigid/neighbor_graph.hpp"
#include "maxrigid/sequence.hpp"

namespace maxrigid {

enum class Degeneracy { WellPosed, PureRotationSuspected, NearOrthographic };

constexpr std::string_view to_string(Degeneracy d) {
  switch (d) {
    case Degeneracy::WellPosed: return "WellPosed";
    case Degeneracy::PureRotationSuspected: return "PureRotationSuspected";
    case Degeneracy::NearOrthographic: return "NearOrthographic";
  }
  return "Unknown";
}

struct DegeneracyThresholds {
  double rotation_cosine_std = 1e-9;  // absolute, on per-edge std of cos(theta)
  double orthographic_angle = 1e-3;   // radians, on the largest viewing angle
};

struct DegeneracyReport {
  Degeneracy verdict = Degeneracy::WellPosed;
  bool pure_rotation = false;
  bool near_orthographic = false;
  double max_cosine_std = 0.0;  // over edges seen in >= 2 frames
  double max_angle = 0.0;       // radians, over all edges and frames
  std::size_t edges_considered = 0;
  DegeneracyThresholds thresholds;
};

// A camera-centered rotation leaves every inter-ray angle unchanged, so the
// cosines carry no information across frames; tiny angles everywhere mean the
// camera is effectively orthographic. Near-orthographic takes precedence in
// the verdict because the cosine spread is meaningless at vanishing angles.
inline DegeneracyReport detect_degeneracy(const TrackedSequence& seq, const NeighborGraph& graph,
                                          const DegeneracyThresholds& thresholds = {}) {
  const auto rays = compute_rays(seq);
  DegeneracyReport report;
  report.thresholds = thresholds;

  std::vector<double> cosines;
  for (const Edge& e : graph.edges) {
    cosines.clear();
    for (std::size_t k = 0; k < seq.n_frames(); ++k) {
      const auto& ri = rays(k, e.i);
      const auto& rj = rays(k, e.j);
      if (!ri || !rj) continue;
      cosines.push_back(pair_cosine(*ri, *rj));
      report.max_angle = std::max(report.max_angle, pair_angle(*ri, *rj));
    }
    if (cosines.size() < 2) continue;
    double mean = 0.0;
    for (double c : cosines) mean += c;
    mean /= static_cast<double>(cosines.size());
    double var = 0.0;
    for (double c : cosines) var += (c - mean) * (c - mean);
    var /= static_cast<double>(cosines.size());
    report.max_cosine_std = std::max(report.max_cosine_std, std::sqrt(var));
    ++report.edges_considered;
  }

  report.pure_rotation = report.edges_considered > 0 && report.max_cosine_std < thresholds.rotation_cosine_std;
  report.near_orthographic = report.max_angle < thresholds.orthographic_angle;
  if (report.near_orthographic) {
    report.verdict = Degeneracy::NearOrthographic;
  } else if (report.pure_rotation) {
    report.verdict = Degeneracy::PureRotationSuspected;
  }
  return report;
}

}  // namespace maxrigid
