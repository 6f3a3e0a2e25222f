#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "maxrigid/conic_solver.hpp"
#include "maxrigid/grid.hpp"
#include "maxrigid/problem.hpp"

namespace maxrigid {

struct DhatValue {
  std::size_t frame = 0;
  std::size_t edge = 0;  // index into SolverSolution::edges
  double value = 0.0;
};

struct FrameSolution {
  std::size_t frame = 0;
  std::vector<std::size_t> points;  // block row r + 1 <-> points[r]
  Eigen::MatrixXd schur;            // [[1, l^T], [l, Y]]

  Eigen::VectorXd legs() const { return schur.block(1, 0, schur.rows() - 1, 1); }
  Eigen::MatrixXd gram() const { return schur.bottomRightCorner(schur.rows() - 1, schur.cols() - 1); }
};

// Solver output mapped back onto the rigidity program's unknowns.
struct SolverSolution {
  SolveStatus status = SolveStatus::MaxIterations;
  double objective_value = 0.0;
  Residuals residuals;
  std::size_t iterations = 0;

  Grid<std::optional<double>> legs;  // (frame, point), absent where masked
  std::vector<Edge> edges;
  std::vector<DhatValue> dhat;
  std::vector<double> ghat;  // per edge
  std::vector<FrameSolution> psd_blocks;
  ConicSolution raw;

  // Sum over constrained (edge, frame) pairs of ghat - dhat: the quantity the
  // convex program actually penalizes in place of sum |g - d|.
  double hatted_surrogate() const {
    double total = 0.0;
    for (const DhatValue& d : dhat) total += ghat[d.edge] - d.value;
    return total;
  }
};

inline SolverSolution extract_solution(const RigidityProgram& prog, const ConicSolution& raw) {
  SolverSolution out;
  out.status = raw.status;
  out.objective_value = raw.objective;
  out.residuals = raw.residuals;
  out.iterations = raw.iterations;
  out.edges = prog.edges;
  out.raw = raw;
  out.legs = Grid<std::optional<double>>(prog.n_frames, prog.n_points);

  const std::vector<double>& x = raw.x;
  for (std::size_t b = 0; b < prog.blocks.size(); ++b) {
    const FrameBlock& blk = prog.blocks[b];
    const std::size_t p = prog.conic.psd_blocks[b];
    FrameSolution fs;
    fs.frame = blk.frame;
    fs.points = blk.points;
    fs.schur.resize(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
    for (std::size_t r = 0; r < p; ++r) {
      for (std::size_t c = 0; c < p; ++c) {
        fs.schur(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = x[prog.conic.entry_var(b, r, c)];
      }
    }
    for (std::size_t r = 0; r < blk.points.size(); ++r) out.legs(blk.frame, blk.points[r]) = x[prog.leg_var(b, r)];
    out.psd_blocks.push_back(std::move(fs));
  }
  for (const DhatVariable& d : prog.dhat) out.dhat.push_back(DhatValue{d.frame, d.edge, x[d.var]});
  for (std::size_t v : prog.ghat_var) out.ghat.push_back(x[v]);
  return out;
}

inline SolverSolution solve_program(const RigidityProgram& prog, const SolverConfig& config = {}) {
  return extract_solution(prog, solve(prog.conic, config));
}

}  // namespace maxrigid
