#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "maxrigid/evaluation.hpp"
#include "maxrigid/reconstruction.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace maxrigid {
namespace {

using test::as_recon;
using test::horn_oracle;
using test::metrics_oracle;
using test::random_grid;
using test::relative_diff;

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no maxrigid::Error thrown";
  return ErrorCode::IoError;
}

SolverSolution solution_with_legs(const Grid<std::optional<double>>& legs) {
  SolverSolution s;
  s.status = SolveStatus::Optimal;
  s.legs = legs;
  return s;
}

TEST(Reconstruct, ZeroLegsCollapseToOrigin) {
  const TrackedSequence seq = test::small_rigid_sequence(1, 5, 2);
  Grid<std::optional<double>> legs(2, 5);
  for (std::size_t k = 0; k < 2; ++k) {
    for (std::size_t i = 0; i < 5; ++i) legs(k, i) = 0.0;
  }
  const Reconstruction r = reconstruct(seq, solution_with_legs(legs));
  for (std::size_t k = 0; k < 2; ++k) {
    for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(*r.points(k, i), Vec3::Zero());
  }
}

TEST(Reconstruct, GroundTruthLegsReproduceGroundTruth) {
  const TrackedSequence seq = test::small_rigid_sequence(2, 8, 3);
  Grid<std::optional<double>> legs(3, 8);
  for (std::size_t k = 0; k < 3; ++k) {
    for (std::size_t i = 0; i < 8; ++i) legs(k, i) = (*seq.ground_truth)(k, i).norm();
  }
  const Reconstruction r = reconstruct(seq, solution_with_legs(legs));
  for (std::size_t k = 0; k < 3; ++k) {
    for (std::size_t i = 0; i < 8; ++i) {
      EXPECT_LE((*r.points(k, i) - (*seq.ground_truth)(k, i)).norm(), 1e-12);
      const Vec3 ray = normalize_ray(seq.intrinsics, seq.observations(k, i)).direction();
      EXPECT_LE((*r.points(k, i) - *r.source_legs(k, i) * ray).norm(), 1e-9);
    }
  }
  const EvaluationReport e = evaluate(r, *seq.ground_truth);
  EXPECT_LE(e.r_err, 1e-10);
}

TEST(Reconstruct, MaskedEntriesStayAbsent) {
  TrackedSequence seq = test::small_rigid_sequence(3, 5, 2);
  seq.observations(1, 3).visible = false;
  Grid<std::optional<double>> legs(2, 5);
  for (std::size_t k = 0; k < 2; ++k) {
    for (std::size_t i = 0; i < 5; ++i) legs(k, i) = 1.0;
  }
  legs(1, 3).reset();
  const Reconstruction r = reconstruct(seq, solution_with_legs(legs));
  EXPECT_FALSE(r.points(1, 3).has_value());
  EXPECT_TRUE(r.points(0, 3).has_value());
}

TEST(Reconstruct, RejectsNegativeLegsAndBadStatus) {
  const TrackedSequence seq = test::small_rigid_sequence(4, 4, 2);
  Grid<std::optional<double>> legs(2, 4);
  for (std::size_t k = 0; k < 2; ++k) {
    for (std::size_t i = 0; i < 4; ++i) legs(k, i) = 1.0;
  }
  legs(0, 1) = -1e-9;  // within tolerance, clamped
  EXPECT_EQ(*reconstruct(seq, solution_with_legs(legs)).source_legs(0, 1), 0.0);
  legs(0, 1) = -0.1;
  EXPECT_EQ(code_of([&] { reconstruct(seq, solution_with_legs(legs)); }), ErrorCode::SolutionRejected);

  legs(0, 1) = 1.0;
  SolverSolution s = solution_with_legs(legs);
  s.status = SolveStatus::MaxIterations;
  EXPECT_EQ(code_of([&] { reconstruct(seq, s); }), ErrorCode::SolutionRejected);
  EXPECT_NO_THROW(reconstruct(seq, s, ReconstructOptions{true, 1e-6}));
  s.status = SolveStatus::Infeasible;
  EXPECT_EQ(code_of([&] { reconstruct(seq, s, ReconstructOptions{true, 1e-6}); }), ErrorCode::SolutionRejected);
}

TEST(AlignScale, Examples) {
  std::mt19937_64 rng(5);
  const Grid<Vec3> truth = random_grid(rng, 3, 6);
  Grid<Vec3> half(3, 6);
  for (std::size_t k = 0; k < 3; ++k) {
    for (std::size_t i = 0; i < 6; ++i) half(k, i) = 0.5 * truth(k, i);
  }
  EXPECT_NEAR(align_scale(as_recon(half), truth).scale, 2.0, 1e-14);
  EXPECT_NEAR(align_scale(as_recon(truth), truth).scale, 1.0, 1e-14);
}

TEST(AlignScale, MatchesLeastSquaresOracle) {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 50; ++t) {
    const Grid<Vec3> truth = random_grid(rng, 4, 7);
    Grid<Vec3> rec(4, 7);
    for (std::size_t k = 0; k < 4; ++k) {
      for (std::size_t i = 0; i < 7; ++i) rec(k, i) = 0.3 * truth(k, i) + Vec3::Constant(test::uniform(rng, -0.1, 0.1));
    }
    const Reconstruction r = as_recon(rec, 0.2, &rng);
    const double oracle = test::scale_oracle(r, truth);
    EXPECT_LE(relative_diff(align_scale(r, truth).scale, oracle), 1e-12);
  }
}

TEST(AlignScale, Errors) {
  std::mt19937_64 rng(7);
  const Grid<Vec3> truth = random_grid(rng, 2, 3);
  Reconstruction r = as_recon(truth);
  Reconstruction none = r;
  for (std::size_t k = 0; k < 2; ++k) {
    for (std::size_t i = 0; i < 3; ++i) {
      r.points(k, i) = Vec3::Zero();
      none.points(k, i).reset();
    }
  }
  EXPECT_EQ(code_of([&] { align_scale(r, truth); }), ErrorCode::ScaleUndefined);
  EXPECT_EQ(code_of([&] { align_scale(none, truth); }), ErrorCode::NoOverlap);
}

TEST(Procrustes, RecoversRotationAndScale) {
  std::mt19937_64 rng(8);
  Eigen::Matrix3Xd src(3, 6);
  for (Eigen::Index c = 0; c < 6; ++c) src.col(c) = Vec3(test::uniform(rng, -1, 1), test::uniform(rng, -1, 1), test::uniform(rng, -1, 1));
  const Mat3 rz = Eigen::AngleAxisd(M_PI / 2, Vec3::UnitZ()).toRotationMatrix();
  const Eigen::Matrix3Xd dst = 3.0 * rz * src;
  const SimilarityTransform t = procrustes(src, dst);
  EXPECT_NEAR(t.scale, 3.0, 1e-12);
  EXPECT_LE((t.rotation - rz).norm(), 1e-12);
  EXPECT_LE(t.translation.norm(), 1e-12);
  for (Eigen::Index c = 0; c < 6; ++c) EXPECT_LE((t.apply(src.col(c)) - dst.col(c)).norm(), 1e-12);

  const SimilarityTransform id = procrustes(src, src);
  EXPECT_NEAR(id.scale, 1.0, 1e-12);
  EXPECT_LE((id.rotation - Mat3::Identity()).norm(), 1e-12);
}

TEST(Procrustes, MatchesQuaternionOracle) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> noise(0.0, 0.05);
  for (int t = 0; t < 100; ++t) {
    const Eigen::Index n = 4 + t % 12;
    Eigen::Matrix3Xd src(3, n);
    for (Eigen::Index c = 0; c < n; ++c) src.col(c) = Vec3(test::uniform(rng, -1, 1), test::uniform(rng, -1, 1), test::uniform(rng, -1, 1));
    const Mat3 r = test::random_rotation(rng, 0.0, M_PI);
    const double s = test::uniform(rng, 0.2, 5.0);
    const Vec3 tr(test::uniform(rng, -3, 3), test::uniform(rng, -3, 3), test::uniform(rng, -3, 3));
    Eigen::Matrix3Xd dst = (s * r * src).colwise() + tr;
    for (Eigen::Index i = 0; i < dst.size(); ++i) dst.data()[i] += noise(rng);
    const SimilarityTransform a = procrustes(src, dst);
    const SimilarityTransform b = horn_oracle(src, dst);
    EXPECT_LE(relative_diff(a.scale, b.scale), 1e-10);
    EXPECT_LE((a.rotation - b.rotation).norm(), 1e-10);
    EXPECT_LE((a.translation - b.translation).norm(), 1e-10 * (1.0 + b.translation.norm()));
    EXPECT_NEAR(a.rotation.determinant(), 1.0, 1e-12);
  }
}

TEST(Procrustes, DegenerateInputs) {
  Eigen::Matrix3Xd two(3, 2);
  two << 0, 1, 0, 0, 0, 0;
  EXPECT_EQ(code_of([&] { procrustes(two, two); }), ErrorCode::AlignmentDegenerate);
  Eigen::Matrix3Xd line(3, 4);
  line << 0, 1, 2, 3, 0, 1, 2, 3, 0, 1, 2, 3;
  EXPECT_EQ(code_of([&] { procrustes(line, line); }), ErrorCode::AlignmentDegenerate);
}

TEST(Procrustes, PerFrameAndGlobalAlignment) {
  std::mt19937_64 rng(10);
  const Grid<Vec3> truth = random_grid(rng, 3, 6);
  Grid<Vec3> moved(3, 6);
  const Mat3 r = test::random_rotation(rng, 0.5, 1.0);
  for (std::size_t k = 0; k < 3; ++k) {
    for (std::size_t i = 0; i < 6; ++i) moved(k, i) = 0.5 * r.transpose() * (truth(k, i) - Vec3(1, 2, 3));
  }
  for (bool global : {false, true}) {
    const ProcrustesAlignment pa = align_procrustes(as_recon(moved), truth, global);
    EXPECT_EQ(pa.transforms.size(), global ? 1u : 3u);
    EXPECT_LE(compute_metrics(pa.aligned, truth).rmse, 1e-12);
  }
}

TEST(Metrics, Examples) {
  Grid<Vec3> truth(1, 1);
  truth(0, 0) = Vec3(6, 8, 0);
  Grid<Vec3> rec(1, 1);
  rec(0, 0) = Vec3(3, 4, 0);
  const EvaluationReport e = compute_metrics(as_recon(rec), truth);
  EXPECT_DOUBLE_EQ(e.rmse, 5.0);
  EXPECT_DOUBLE_EQ(e.r_err, 50.0);

  std::mt19937_64 rng(11);
  const Grid<Vec3> same = random_grid(rng, 2, 4);
  const EvaluationReport z = compute_metrics(as_recon(same), same);
  EXPECT_EQ(z.rmse, 0.0);
  EXPECT_EQ(z.r_err, 0.0);
}

TEST(Metrics, MatchLoopFreeOracle) {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 100; ++t) {
    const Grid<Vec3> truth = random_grid(rng, 1 + t % 5, 3 + t % 9);
    const Reconstruction r = as_recon(random_grid(rng, truth.frames(), truth.points()), 0.3, &rng);
    bool any = false;
    for (std::size_t k = 0; k < r.n_frames(); ++k) {
      for (std::size_t i = 0; i < r.n_points(); ++i) any = any || r.points(k, i).has_value();
    }
    if (!any) continue;
    const EvaluationReport e = compute_metrics(r, truth);
    const auto [rmse, rerr] = metrics_oracle(r, truth);
    EXPECT_LE(relative_diff(e.rmse, rmse), 1e-12);
    EXPECT_LE(relative_diff(e.r_err, rerr), 1e-12);
    EXPECT_GE(e.rmse, 0.0);
    const double mean = std::accumulate(e.per_frame_rmse.begin(), e.per_frame_rmse.end(), 0.0) /
                        static_cast<double>(e.per_frame_rmse.size());
    EXPECT_LE(relative_diff(mean, e.rmse), 1e-14);
  }
}

TEST(Metrics, NoOverlap) {
  Grid<Vec3> truth(2, 2);
  Reconstruction r = as_recon(truth);
  for (std::size_t k = 0; k < 2; ++k) {
    for (std::size_t i = 0; i < 2; ++i) r.points(k, i).reset();
  }
  EXPECT_EQ(code_of([&] { compute_metrics(r, truth); }), ErrorCode::NoOverlap);
}

TEST(Metrics, Invariances) {
  std::mt19937_64 rng(13);
  const Grid<Vec3> truth = random_grid(rng, 3, 8);
  Grid<Vec3> rec(3, 8);
  for (std::size_t k = 0; k < 3; ++k) {
    for (std::size_t i = 0; i < 8; ++i) rec(k, i) = 0.7 * truth(k, i) + Vec3::Constant(test::uniform(rng, -0.2, 0.2));
  }
  const EvaluationReport base = evaluate(as_recon(rec), truth);

  // Pre-scaling the reconstruction does not change the aligned metrics.
  Grid<Vec3> big(3, 8);
  for (std::size_t k = 0; k < 3; ++k) {
    for (std::size_t i = 0; i < 8; ++i) big(k, i) = 13.0 * rec(k, i);
  }
  const EvaluationReport scaled = evaluate(as_recon(big), truth);
  EXPECT_LE(relative_diff(scaled.rmse, base.rmse), 1e-12);
  EXPECT_LE(relative_diff(scaled.r_err, base.r_err), 1e-12);

  // R-Err is unitless.
  Grid<Vec3> t2(3, 8), r2(3, 8);
  for (std::size_t k = 0; k < 3; ++k) {
    for (std::size_t i = 0; i < 8; ++i) {
      t2(k, i) = 4.2 * truth(k, i);
      r2(k, i) = 4.2 * rec(k, i);
    }
  }
  EXPECT_LE(relative_diff(evaluate(as_recon(r2), t2).r_err, base.r_err), 1e-12);

  // Relabeling points in both grids.
  std::vector<std::size_t> perm(8);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Grid<Vec3> tp(3, 8), rp(3, 8);
  for (std::size_t k = 0; k < 3; ++k) {
    for (std::size_t i = 0; i < 8; ++i) {
      tp(k, perm[i]) = truth(k, i);
      rp(k, perm[i]) = rec(k, i);
    }
  }
  const EvaluationReport relabeled = evaluate(as_recon(rp), tp);
  EXPECT_LE(relative_diff(relabeled.rmse, base.rmse), 1e-12);
  EXPECT_LE(relative_diff(relabeled.r_err, base.r_err), 1e-12);
}

NeighborGraph single_edge_graph() {
  NeighborGraph g;
  g.n_points = 2;
  g.k_neighbors = 1;
  g.edges = {Edge{0, 1}};
  return g;
}

TEST(RigidityDiagnostics, TwoFrameExample) {
  Grid<Vec3> pts(2, 2);
  pts(0, 0) = Vec3::Zero();
  pts(0, 1) = Vec3(1.0, 0, 0);
  pts(1, 0) = Vec3::Zero();
  pts(1, 1) = Vec3(0.8, 0, 0);
  const RigidityDiagnostics d = rigidity_diagnostics(as_recon(pts), single_edge_graph());
  ASSERT_EQ(d.edges.size(), 1u);
  EXPECT_EQ(d.max_distances[0], 1.0);
  EXPECT_EQ(d.ullman_deviation[0], (1.0 - 0.8) * (1.0 - 0.8));
  EXPECT_DOUBLE_EQ(d.ullman_deviation[0], 0.04);
  EXPECT_EQ(d.total_delta_prime, 1.0 - 0.8);
  EXPECT_DOUBLE_EQ(d.total_delta_prime, 0.2);

  // Explicit internal model.
  const RigidityDiagnostics e = rigidity_diagnostics(as_recon(pts), single_edge_graph(), std::vector<double>{2.0});
  EXPECT_DOUBLE_EQ(e.ullman_deviation[0], (1.0 + 1.2 * 1.2) / 8.0);
}

TEST(RigidityDiagnostics, RigidMotionGivesZero) {
  std::mt19937_64 rng(14);
  const Grid<Vec3> body = random_grid(rng, 1, 6);
  Grid<Vec3> pts(4, 6);
  for (std::size_t k = 0; k < 4; ++k) {
    const Vec3 t(test::uniform(rng, -1, 1), 0.5, 2.0);
    for (std::size_t i = 0; i < 6; ++i) pts(k, i) = body(0, i) + t;
  }
  NeighborGraph g;
  g.n_points = 6;
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t j = i + 1; j < 6; ++j) g.edges.push_back(Edge{i, j});
  }
  // Translated copies: lengths agree to rounding.
  const RigidityDiagnostics d = rigidity_diagnostics(as_recon(pts), g);
  EXPECT_LE(d.total_delta_prime, 1e-12);
  for (double v : d.ullman_deviation) EXPECT_GE(v, 0.0);

  // Identical copies: lengths agree bit for bit.
  Grid<Vec3> copies(4, 6);
  for (std::size_t k = 0; k < 4; ++k) {
    for (std::size_t i = 0; i < 6; ++i) copies(k, i) = body(0, i);
  }
  EXPECT_EQ(rigidity_diagnostics(as_recon(copies), g).total_delta_prime, 0.0);
}

TEST(RigidityDiagnostics, SkipsEdgesNeverCoPresent) {
  Grid<Vec3> pts(2, 3);
  Reconstruction r = as_recon(pts);
  r.points(0, 2).reset();
  r.points(1, 2).reset();
  NeighborGraph g;
  g.n_points = 3;
  g.edges = {Edge{0, 1}, Edge{1, 2}};
  const RigidityDiagnostics d = rigidity_diagnostics(r, g);
  EXPECT_EQ(d.edges.size(), 1u);
  EXPECT_EQ(d.skipped_edges.size(), 1u);
  EXPECT_EQ(d.warnings.size(), 1u);
}

}  // namespace
}  // namespace maxrigid
