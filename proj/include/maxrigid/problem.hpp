#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "maxrigid/conic_problem.hpp"
#include "maxrigid/error.hpp"
#include "maxrigid/geometry.hpp"
#include "maxrigid/neighbor_graph.hpp"
#include "maxrigid/sequence.hpp"

namespace maxrigid {

// Cosine-law constraint of one viewing triangle: for legs l_i, l_j the
// squared inter-point distance is l_i^2 + l_j^2 - 2 c l_i l_j.
struct EdgeConstraint {
  std::size_t frame = 0;
  std::size_t edge = 0;  // index into NeighborGraph::edges
  std::size_t i = 0;
  std::size_t j = 0;
  double cosine = 0.0;

  double quadratic_form(double leg_i, double leg_j) const {
    return leg_i * leg_i + leg_j * leg_j - 2.0 * cosine * leg_i * leg_j;
  }

  // n x n matrix with (i,i) = (j,j) = 1 and (i,j) = (j,i) = -cosine.
  Eigen::SparseMatrix<double> a_matrix(std::size_t n) const {
    Eigen::SparseMatrix<double> a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    std::vector<Eigen::Triplet<double>> t{
        {static_cast<int>(i), static_cast<int>(i), 1.0},
        {static_cast<int>(j), static_cast<int>(j), 1.0},
        {static_cast<int>(i), static_cast<int>(j), -cosine},
        {static_cast<int>(j), static_cast<int>(i), -cosine},
    };
    a.setFromTriplets(t.begin(), t.end());
    return a;
  }
};

struct ProblemWeights {
  double lambda1 = 1.0;   // maximum-leg term
  double lambda2 = 20.0;  // distance-expansion term

  void validate() const {
    if (!(lambda1 > 0.0 && std::isfinite(lambda1) && lambda2 > 0.0 && std::isfinite(lambda2))) {
      throw Error(ErrorCode::InvalidWeights, "lambda1 and lambda2 must be positive and finite");
    }
  }
};

// One constraint per (edge, frame) with both endpoints visible, ordered by
// frame then edge.
inline std::vector<EdgeConstraint> build_edge_constraints(const TrackedSequence& seq, const NeighborGraph& graph) {
  const auto rays = compute_rays(seq);
  std::vector<EdgeConstraint> out;
  for (std::size_t k = 0; k < seq.n_frames(); ++k) {
    for (std::size_t e = 0; e < graph.edges.size(); ++e) {
      const Edge& edge = graph.edges[e];
      const auto& ri = rays(k, edge.i);
      const auto& rj = rays(k, edge.j);
      if (!ri || !rj) continue;
      out.push_back(EdgeConstraint{k, e, edge.i, edge.j, pair_cosine(*ri, *rj)});
    }
  }
  return out;
}

// Per-frame PSD block [[1, l^T], [l, Y]] over the frame's visible points.
struct FrameBlock {
  std::size_t frame = 0;
  std::vector<std::size_t> points;  // global point ids; local row r + 1
};

struct DhatVariable {
  std::size_t frame = 0;
  std::size_t edge = 0;  // index into RigidityProgram::edges
  std::size_t var = 0;
  double cosine = 0.0;
};

// The assembled convex program together with the map from its flat variable
// vector back to legs, squared distances and the squared internal model.
struct RigidityProgram {
  ConicProblem conic;
  std::size_t n_frames = 0;
  std::size_t n_points = 0;
  ProblemWeights weights;
  std::vector<Edge> edges;  // edges constrained in at least one frame
  std::vector<FrameBlock> blocks;
  std::vector<std::size_t> dropped_frames;
  std::vector<DhatVariable> dhat;
  std::vector<std::size_t> ghat_var;  // one per edge
  std::vector<std::string> warnings;

  std::optional<std::size_t> block_of_frame(std::size_t frame) const {
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      if (blocks[b].frame == frame) return b;
    }
    return std::nullopt;
  }

  std::optional<std::size_t> local_index(std::size_t block, std::size_t point) const {
    const auto& pts = blocks[block].points;
    for (std::size_t r = 0; r < pts.size(); ++r) {
      if (pts[r] == point) return r;
    }
    return std::nullopt;
  }

  std::size_t leg_var(std::size_t block, std::size_t local) const { return conic.entry_var(block, 0, local + 1); }

  std::size_t gram_var(std::size_t block, std::size_t a, std::size_t b) const {
    return conic.entry_var(block, a + 1, b + 1);
  }

  // Objective coefficient on leg l_point^frame; zero when the point is not
  // part of the frame's block (masked out).
  double leg_objective_coefficient(std::size_t frame, std::size_t point) const {
    const auto b = block_of_frame(frame);
    if (!b) return 0.0;
    const auto r = local_index(*b, point);
    if (!r) return 0.0;
    const std::size_t var = leg_var(*b, *r);
    double coef = 0.0;
    for (const LinearTerm& t : conic.objective) {
      if (t.var == var) coef += t.coef;
    }
    return coef;
  }
};

// Builds
//   min  sum_k tr(Y^k) - lambda1 * sum l - lambda2 * sum dhat
//   s.t. tr(A_ij^k Y^k) = dhat_ij^k,  dhat_ij^k <= ghat_ij,  sum ghat = 1,
//        [[1, l^T], [l, Y^k]] PSD,  l >= 0,  dhat >= 0,  ghat >= 0
// restricted to visible (edge, frame) pairs.
inline RigidityProgram assemble_problem(const TrackedSequence& seq, const NeighborGraph& graph,
                                        const ProblemWeights& weights) {
  weights.validate();
  if (graph.edges.empty()) throw Error(ErrorCode::EmptyProblem, "neighbor graph has no edges");
  if (graph.n_points != seq.n_points()) {
    throw Error(ErrorCode::InvalidConfig, "graph and sequence disagree on the number of points");
  }

  const std::vector<EdgeConstraint> constraints = build_edge_constraints(seq, graph);

  RigidityProgram prog;
  prog.n_frames = seq.n_frames();
  prog.n_points = seq.n_points();
  prog.weights = weights;

  // Edges never constrained are dropped; frames without constraints too.
  std::vector<bool> edge_used(graph.edges.size(), false);
  std::vector<bool> frame_used(seq.n_frames(), false);
  for (const EdgeConstraint& c : constraints) {
    edge_used[c.edge] = true;
    frame_used[c.frame] = true;
  }
  std::vector<std::size_t> edge_remap(graph.edges.size(), 0);
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    if (!edge_used[e]) {
      prog.warnings.push_back("edge (" + std::to_string(graph.edges[e].i) + ", " +
                              std::to_string(graph.edges[e].j) + ") is never co-visible; removed");
      continue;
    }
    edge_remap[e] = prog.edges.size();
    prog.edges.push_back(graph.edges[e]);
  }
  if (prog.edges.empty()) throw Error(ErrorCode::EmptyProblem, "no edge is visible in any frame");

  for (std::size_t k = 0; k < seq.n_frames(); ++k) {
    if (!frame_used[k]) {
      prog.dropped_frames.push_back(k);
      prog.warnings.push_back("frame " + std::to_string(k) + " has no constrained edge; dropped");
      continue;
    }
    FrameBlock block;
    block.frame = k;
    for (std::size_t i = 0; i < seq.n_points(); ++i) {
      if (seq.visible(k, i)) block.points.push_back(i);
    }
    prog.blocks.push_back(std::move(block));
    prog.conic.psd_blocks.push_back(prog.blocks.back().points.size() + 1);
  }

  ConicProblem& cp = prog.conic;
  cp.n_scalars = constraints.size() + prog.edges.size();
  const std::size_t scalar0 = cp.scalar_offset();

  // Local row of every (frame, point) in its block.
  std::vector<std::vector<std::size_t>> local(seq.n_frames(), std::vector<std::size_t>(seq.n_points(), 0));
  std::vector<std::size_t> frame_block(seq.n_frames(), 0);
  for (std::size_t b = 0; b < prog.blocks.size(); ++b) {
    frame_block[prog.blocks[b].frame] = b;
    for (std::size_t r = 0; r < prog.blocks[b].points.size(); ++r) local[prog.blocks[b].frame][prog.blocks[b].points[r]] = r;
  }

  for (std::size_t b = 0; b < prog.blocks.size(); ++b) {
    const std::size_t count = prog.blocks[b].points.size();
    for (std::size_t r = 0; r < count; ++r) {
      cp.objective.push_back({prog.gram_var(b, r, r), 1.0});
      cp.objective.push_back({prog.leg_var(b, r), -weights.lambda1});
      cp.nonneg_entries.push_back(prog.leg_var(b, r));
    }
  }

  prog.ghat_var.resize(prog.edges.size());
  for (std::size_t e = 0; e < prog.edges.size(); ++e) prog.ghat_var[e] = scalar0 + constraints.size() + e;

  for (std::size_t t = 0; t < constraints.size(); ++t) {
    const EdgeConstraint& c = constraints[t];
    const std::size_t b = frame_block[c.frame];
    const std::size_t ri = local[c.frame][c.i];
    const std::size_t rj = local[c.frame][c.j];
    const std::size_t dvar = scalar0 + t;
    const std::size_t e = edge_remap[c.edge];
    prog.dhat.push_back(DhatVariable{c.frame, e, dvar, c.cosine});

    cp.objective.push_back({dvar, -weights.lambda2});
    cp.equalities.push_back(LinearRow{{{prog.gram_var(b, ri, ri), 1.0},
                                       {prog.gram_var(b, rj, rj), 1.0},
                                       {prog.gram_var(b, ri, rj), -2.0 * c.cosine},
                                       {dvar, -1.0}},
                                      0.0});
    cp.inequalities.push_back(LinearRow{{{dvar, 1.0}, {prog.ghat_var[e], -1.0}}, 0.0});
  }

  for (std::size_t b = 0; b < prog.blocks.size(); ++b) {
    cp.equalities.push_back(LinearRow{{{cp.entry_var(b, 0, 0), 1.0}}, 1.0});
  }
  LinearRow simplex;
  simplex.rhs = 1.0;
  for (std::size_t e = 0; e < prog.edges.size(); ++e) simplex.terms.push_back({prog.ghat_var[e], 1.0});
  cp.equalities.push_back(std::move(simplex));

  cp.validate();
  return prog;
}

}  // namespace maxrigid
