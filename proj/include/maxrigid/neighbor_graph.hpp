#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "maxrigid/error.hpp"
#include "maxrigid/sequence.hpp"

namespace maxrigid {

struct Edge {
  std::size_t i = 0;
  std::size_t j = 0;  // i < j

  auto operator<=>(const Edge&) const = default;
};

struct NeighborGraph {
  std::vector<Edge> edges;  // sorted, unique
  std::size_t k_neighbors = 0;
  std::size_t n_points = 0;

  std::vector<std::size_t> degrees() const {
    std::vector<std::size_t> deg(n_points, 0);
    for (const Edge& e : edges) {
      ++deg[e.i];
      ++deg[e.j];
    }
    return deg;
  }
};

// Mean image distance over frames where both points are visible; +inf when
// the pair is never co-visible.
inline Eigen::MatrixXd aggregated_image_distances(const TrackedSequence& seq) {
  const std::size_t n = seq.n_points();
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXi count = Eigen::MatrixXi::Zero(n, n);
  for (std::size_t k = 0; k < seq.n_frames(); ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      const Observation& a = seq.observations(k, i);
      if (!a.visible) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        const Observation& b = seq.observations(k, j);
        if (!b.visible) continue;
        const double d = std::hypot(a.u - b.u, a.v - b.v);
        sum(i, j) += d;
        sum(j, i) += d;
        ++count(i, j);
        ++count(j, i);
      }
    }
  }
  Eigen::MatrixXd dist(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      dist(i, j) = count(i, j) > 0 ? sum(i, j) / count(i, j) : std::numeric_limits<double>::infinity();
    }
  }
  return dist;
}

// Symmetrized (union) K-nearest-neighbor graph from aggregated 2D distances.
// Ties go to the smaller point index.
inline NeighborGraph build_knn_graph(const TrackedSequence& seq, std::size_t k) {
  const std::size_t n = seq.n_points();
  std::size_t min_visible = n;
  for (std::size_t f = 0; f < seq.n_frames(); ++f) min_visible = std::min(min_visible, seq.visible_count(f));
  if (k < 1 || k >= min_visible) {
    throw Error(ErrorCode::InvalidNeighborCount,
                "k = " + std::to_string(k) + " must lie in [1, " + std::to_string(min_visible) +
                    ") for this sequence");
  }

  const Eigen::MatrixXd dist = aggregated_image_distances(seq);
  std::set<Edge> edges;
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) {
    order.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i && std::isfinite(dist(i, j))) order.push_back(j);
    }
    if (order.empty()) {
      throw Error(ErrorCode::DisconnectedPoint,
                  "point " + std::to_string(i) + " shares no frame with any other point");
    }
    const std::size_t take = std::min(k, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                      [&](std::size_t a, std::size_t b) {
                        return dist(i, a) < dist(i, b) || (dist(i, a) == dist(i, b) && a < b);
                      });
    for (std::size_t r = 0; r < take; ++r) {
      const std::size_t j = order[r];
      edges.insert(Edge{std::min(i, j), std::max(i, j)});
    }
  }

  NeighborGraph graph;
  graph.edges.assign(edges.begin(), edges.end());
  graph.k_neighbors = k;
  graph.n_points = n;
  return graph;
}

}  // namespace maxrigid
