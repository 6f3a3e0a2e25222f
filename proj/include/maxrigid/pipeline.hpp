#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "maxrigid/conic_solver.hpp"
#include "maxrigid/degeneracy.hpp"
#include "maxrigid/evaluation.hpp"
#include "maxrigid/neighbor_graph.hpp"
#include "maxrigid/problem.hpp"
#include "maxrigid/reconstruction.hpp"
#include "maxrigid/sequence.hpp"
#include "maxrigid/solution.hpp"

namespace maxrigid {

struct PipelineOptions {
  std::size_t k_neighbors = 20;
  ProblemWeights weights;  // lambda1 = 1, lambda2 = 20
  SolverConfig solver;
  DegeneracyThresholds degeneracy;
  bool force = false;  // solve even when the degeneracy check fires

  void validate() const {
    if (k_neighbors < 1) throw Error(ErrorCode::InvalidNeighborCount, "k_neighbors must be >= 1");
    weights.validate();
    solver.validate();
  }
};

enum class PipelineOutcome { Solved, Degenerate, SolverFailed };

constexpr std::string_view to_string(PipelineOutcome o) {
  switch (o) {
    case PipelineOutcome::Solved: return "solved";
    case PipelineOutcome::Degenerate: return "degenerate";
    case PipelineOutcome::SolverFailed: return "solver-failed";
  }
  return "unknown";
}

struct PipelineResult {
  PipelineOutcome outcome = PipelineOutcome::Solved;
  IngestResult ingested;  // sequence restricted to kept frames
  double masked_fraction = 0.0;
  NeighborGraph graph;
  DegeneracyReport degeneracy;
  std::optional<RigidityProgram> program;
  std::optional<SolverSolution> solution;
  std::optional<Reconstruction> reconstruction;
  std::optional<RigidityDiagnostics> diagnostics;
  std::optional<EvaluationReport> evaluation;
  std::vector<std::string> warnings;
};

// Ingest, graph, degeneracy check, assemble, solve, reconstruct, evaluate.
inline PipelineResult run_pipeline(const TrackedSequence& input, const PipelineOptions& options) {
  options.validate();
  PipelineResult r;
  r.ingested = ingest(input, options.k_neighbors);
  const TrackedSequence& seq = r.ingested.sequence;
  r.masked_fraction = seq.masked_fraction();
  for (std::size_t f : r.ingested.dropped_frames) {
    r.warnings.push_back("frame " + std::to_string(f) + " has too few visible points; dropped");
  }

  r.graph = build_knn_graph(seq, options.k_neighbors);
  r.degeneracy = detect_degeneracy(seq, r.graph, options.degeneracy);
  if (r.degeneracy.verdict != Degeneracy::WellPosed) {
    r.warnings.push_back("degeneracy detected: " + std::string(to_string(r.degeneracy.verdict)));
    if (!options.force) {
      r.outcome = PipelineOutcome::Degenerate;
      return r;
    }
  }

  r.program = assemble_problem(seq, r.graph, options.weights);
  for (const std::string& w : r.program->warnings) r.warnings.push_back(w);
  r.solution = solve_program(*r.program, options.solver);
  if (r.solution->status != SolveStatus::Optimal) {
    r.outcome = PipelineOutcome::SolverFailed;
    return r;
  }

  r.reconstruction = reconstruct(seq, *r.solution);
  r.diagnostics = rigidity_diagnostics(*r.reconstruction, r.graph);
  for (const std::string& w : r.diagnostics->warnings) r.warnings.push_back(w);
  if (seq.ground_truth) r.evaluation = evaluate(*r.reconstruction, *seq.ground_truth);
  return r;
}

}  // namespace maxrigid
