#include <cmath>
#include <cstdint>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "maxrigid/degeneracy.hpp"
#include "maxrigid/evaluation.hpp"
#include "maxrigid/neighbor_graph.hpp"
#include "maxrigid/random.hpp"
#include "maxrigid/sequence_io.hpp"
#include "maxrigid/synth.hpp"
#include "test_support.hpp"

namespace maxrigid {
namespace {

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

SynthesisConfig config(MotionKind kind, std::uint64_t seed, std::size_t n = 20, std::size_t m = 5) {
  SynthesisConfig c;
  c.motion_kind = kind;
  c.rng_seed = seed;
  c.n_points = n;
  c.n_frames = m;
  return c;
}

double distance(const TrackedSequence& s, std::size_t k, std::size_t i, std::size_t j) {
  return ((*s.ground_truth)(k, i) - (*s.ground_truth)(k, j)).norm();
}

bool constant_length(const TrackedSequence& s, std::size_t i, std::size_t j, double tol) {
  for (std::size_t k = 1; k < s.n_frames(); ++k) {
    if (std::abs(distance(s, k, i, j) - distance(s, 0, i, j)) > tol) return false;
  }
  return true;
}

TEST(Random, EngineMatchesStandardReference) {
  // The standard pins the 10000th output of a default-seeded mt19937_64.
  Random r(5489u);
  std::uint64_t x = 0;
  for (int t = 0; t < 10000; ++t) x = r.next();
  EXPECT_EQ(x, 9981545732273789042ULL);
}

TEST(Random, DerivedDrawsFollowTheirFormulas) {
  Random a(42), b(42);
  const double u = a.uniform01();
  EXPECT_EQ(u, static_cast<double>(b.next() >> 11) / 9007199254740992.0);
  EXPECT_GE(u, 0.0);
  EXPECT_LT(u, 1.0);
  const double g = a.gaussian();
  const double u1 = static_cast<double>(b.next() >> 11) / 9007199254740992.0;
  const double u2 = static_cast<double>(b.next() >> 11) / 9007199254740992.0;
  EXPECT_EQ(g, std::sqrt(-2.0 * std::log(1.0 - u1)) * std::cos(2.0 * M_PI * u2));
  EXPECT_NEAR(a.unit_vector().norm(), 1.0, 1e-15);
}

TEST(Random, GaussianMoments) {
  Random r(7);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int t = 0; t < n; ++t) {
    const double g = r.gaussian();
    sum += g;
    sq += g * g;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.01);
}

TEST(Generate, RigidObservationsAreExactProjections) {
  const TrackedSequence s = generate(config(MotionKind::Rigid, 3));
  const Mat3& k = s.intrinsics.matrix();
  EXPECT_NEAR(k(0, 0), 320.0 / std::tan(81.69 * M_PI / 360.0), 1e-9);
  for (std::size_t f = 0; f < s.n_frames(); ++f) {
    for (std::size_t i = 0; i < s.n_points(); ++i) {
      const Vec3 p = (*s.ground_truth)(f, i);
      const Observation expect = test::pinhole(k(0, 0), k(0, 2), k(1, 2), p);
      EXPECT_NEAR(s.observations(f, i).u, expect.u, 1e-9);
      EXPECT_NEAR(s.observations(f, i).v, expect.v, 1e-9);
      EXPECT_GT(p.z(), 0.0);
    }
  }
}

TEST(Generate, RigidKeepsAllPairwiseDistances) {
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    const TrackedSequence s = generate(config(MotionKind::Rigid, seed));
    for (std::size_t i = 0; i < s.n_points(); ++i) {
      for (std::size_t j = i + 1; j < s.n_points(); ++j) EXPECT_TRUE(constant_length(s, i, j, 1e-9));
    }
  }
}

TEST(Generate, BendingSheetIsIsometricOnGridEdges) {
  const TrackedSequence s = generate(config(MotionKind::BendingSheet, 4, 25, 6));
  std::size_t bent_pairs = 0;
  for (std::size_t row = 0; row < 5; ++row) {
    for (std::size_t col = 0; col < 5; ++col) {
      const std::size_t i = row * 5 + col;
      if (col + 1 < 5) {
        EXPECT_TRUE(constant_length(s, i, i + 1, 1e-9));
      }
      if (row + 1 < 5) {
        EXPECT_TRUE(constant_length(s, i, i + 5, 1e-9));
      }
      if (col + 2 < 5 && !constant_length(s, i, i + 2, 1e-6)) ++bent_pairs;
    }
  }
  // The surface really bends: chords across two grid steps shrink.
  EXPECT_GT(bent_pairs, 0u);
}

TEST(Generate, ArticulatedKindsSplitIntoTwoRigidGroups) {
  for (MotionKind kind : {MotionKind::PointArticulated, MotionKind::AxisArticulated}) {
    const TrackedSequence s = generate(config(kind, 5));
    std::vector<std::set<std::size_t>> groups;
    for (std::size_t i = 0; i < s.n_points(); ++i) {
      bool placed = false;
      for (auto& g : groups) {
        if (constant_length(s, i, *g.begin(), 1e-9)) {
          for (std::size_t j : g) EXPECT_TRUE(constant_length(s, i, j, 1e-9)) << to_string(kind);
          g.insert(i);
          placed = true;
          break;
        }
      }
      if (!placed) groups.push_back({i});
    }
    EXPECT_EQ(groups.size(), 2u) << to_string(kind);
  }
}

TEST(Generate, PureRotationIsFlaggedByTheDetector) {
  const TrackedSequence s = generate(config(MotionKind::PureRotation, 6));
  const DegeneracyReport r = detect_degeneracy(s, build_knn_graph(s, 10));
  EXPECT_EQ(r.verdict, Degeneracy::PureRotationSuspected);
}

TEST(Generate, RigidIsNotFlagged) {
  const TrackedSequence s = generate(config(MotionKind::Rigid, 6));
  EXPECT_EQ(detect_degeneracy(s, build_knn_graph(s, 10)).verdict, Degeneracy::WellPosed);
}

TEST(Generate, DeterministicPerSeed) {
  for (MotionKind kind : {MotionKind::Rigid, MotionKind::PointArticulated, MotionKind::AxisArticulated,
                          MotionKind::BendingSheet, MotionKind::PureRotation}) {
    SynthesisConfig c = config(kind, 9, kind == MotionKind::BendingSheet ? 25 : 20);
    c.noise_sigma = 1.0;
    c.missing_ratio = 0.1;
    const std::string a = sequence_to_string(generate(c));
    EXPECT_EQ(a, sequence_to_string(generate(c))) << to_string(kind);
    c.rng_seed = 10;
    EXPECT_NE(a, sequence_to_string(generate(c))) << to_string(kind);
  }
}

TEST(Generate, NoiseMovesObservationsOnly) {
  SynthesisConfig c = config(MotionKind::Rigid, 11);
  const TrackedSequence clean = generate(c);
  c.noise_sigma = 2.0;
  const TrackedSequence noisy = generate(c);
  double sq = 0.0;
  for (std::size_t f = 0; f < clean.n_frames(); ++f) {
    for (std::size_t i = 0; i < clean.n_points(); ++i) {
      EXPECT_EQ((*clean.ground_truth)(f, i), (*noisy.ground_truth)(f, i));
      sq += std::pow(noisy.observations(f, i).u - clean.observations(f, i).u, 2);
    }
  }
  EXPECT_NEAR(std::sqrt(sq / 100.0), 2.0, 0.6);
}

TEST(Generate, MissingDataRespectsCoverageRules) {
  SynthesisConfig c = config(MotionKind::Rigid, 12, 20, 6);
  c.missing_ratio = 0.2;
  const TrackedSequence s = generate(c);
  for (std::size_t f = 0; f < s.n_frames(); ++f) EXPECT_GT(s.visible_count(f), c.k_neighbors);
  for (std::size_t i = 0; i < s.n_points(); ++i) {
    std::size_t seen = 0;
    for (std::size_t f = 0; f < s.n_frames(); ++f) seen += s.visible(f, i) ? 1 : 0;
    EXPECT_GE(seen, 2u);
  }
  EXPECT_GT(s.masked_fraction(), 0.1);
  EXPECT_LT(s.masked_fraction(), 0.3);

  // The scene stream does not depend on the mask.
  c.mask_seed = 77;
  const TrackedSequence t = generate(c);
  for (std::size_t f = 0; f < s.n_frames(); ++f) {
    for (std::size_t i = 0; i < s.n_points(); ++i) EXPECT_EQ((*s.ground_truth)(f, i), (*t.ground_truth)(f, i));
  }
}

TEST(Generate, Failures) {
  SynthesisConfig c = config(MotionKind::Rigid, 13, 12, 3);
  c.missing_ratio = 0.9;
  c.max_resample_attempts = 20;
  EXPECT_EQ(code_of([&] { generate(c); }), ErrorCode::GenerationFailed);

  SynthesisConfig behind = config(MotionKind::Rigid, 13);
  behind.scene_depth = 0.1;
  EXPECT_EQ(code_of([&] { generate(behind); }), ErrorCode::GenerationFailed);

  EXPECT_EQ(code_of([] { generate(config(MotionKind::BendingSheet, 1, 20)); }), ErrorCode::InvalidConfig);
  SynthesisConfig bad = config(MotionKind::Rigid, 1);
  bad.missing_ratio = 1.0;
  EXPECT_EQ(code_of([&] { generate(bad); }), ErrorCode::InvalidConfig);
  bad = config(MotionKind::Rigid, 1);
  bad.noise_sigma = -1.0;
  EXPECT_EQ(code_of([&] { generate(bad); }), ErrorCode::InvalidConfig);
}

TEST(MotionKindNames, RoundTrip) {
  for (MotionKind kind : {MotionKind::Rigid, MotionKind::PointArticulated, MotionKind::AxisArticulated,
                          MotionKind::BendingSheet, MotionKind::PureRotation}) {
    EXPECT_EQ(parse_motion_kind(to_string(kind)), kind);
  }
  EXPECT_FALSE(parse_motion_kind("wobbly").has_value());
}

TEST(SequenceIo, RoundTripIsBitIdentical) {
  SynthesisConfig c = config(MotionKind::AxisArticulated, 14);
  c.noise_sigma = 0.7;
  c.missing_ratio = 0.1;
  const TrackedSequence s = generate(c);
  const std::string text = sequence_to_string(s);
  std::istringstream in(text);
  const TrackedSequence back = read_sequence(in);
  ASSERT_EQ(back.n_frames(), s.n_frames());
  ASSERT_EQ(back.n_points(), s.n_points());
  EXPECT_EQ(back.intrinsics.matrix(), s.intrinsics.matrix());
  for (std::size_t f = 0; f < s.n_frames(); ++f) {
    for (std::size_t i = 0; i < s.n_points(); ++i) {
      EXPECT_EQ(back.observations(f, i), s.observations(f, i));
      EXPECT_EQ((*back.ground_truth)(f, i), (*s.ground_truth)(f, i));
    }
  }
  EXPECT_EQ(sequence_to_string(back), text);
}

TEST(SequenceIo, FileRoundTrip) {
  const TrackedSequence s = generate(config(MotionKind::Rigid, 15));
  const std::string path = test::temp_path("seq.json");
  write_sequence_file(path, s);
  EXPECT_EQ(sequence_to_string(read_sequence_file(path)), sequence_to_string(s));
  std::filesystem::remove(path);
  EXPECT_EQ(code_of([&] { read_sequence_file(path); }), ErrorCode::IoError);
}

const char* kHeader = R"({"schema_version": 1, "intrinsics": [[1,0,0],[0,1,0],[0,0,1]], )";

ErrorCode parse_code(const std::string& body, std::string* message = nullptr) {
  std::istringstream in(std::string(kHeader) + body);
  try {
    read_sequence(in);
  } catch (const Error& e) {
    if (message) *message = e.what();
    return e.code();
  }
  return ErrorCode::IoError;
}

TEST(SequenceIo, RaggedFrameNamesTheFrame) {
  std::string msg;
  const std::string body =
      R"("frames": [[{"u":0,"v":0,"visible":true},{"u":1,"v":0,"visible":true}],)"
      R"( [{"u":0,"v":0,"visible":true},{"u":1,"v":0,"visible":true}],)"
      R"( [{"u":0,"v":0,"visible":true}]]})";
  EXPECT_EQ(parse_code(body, &msg), ErrorCode::ParseError);
  EXPECT_NE(msg.find("frames[2]"), std::string::npos) << msg;
}

TEST(SequenceIo, SchemaErrors) {
  std::istringstream wrong_version(R"({"schema_version": 2, "intrinsics": [], "frames": []})");
  EXPECT_EQ(code_of([&] { read_sequence(wrong_version); }), ErrorCode::UnsupportedVersion);
  std::istringstream not_json("{oops");
  EXPECT_EQ(code_of([&] { read_sequence(not_json); }), ErrorCode::ParseError);
  EXPECT_EQ(parse_code(R"("frames": [[{"u":"a","v":0,"visible":true}]]})"), ErrorCode::ParseError);
  EXPECT_EQ(parse_code(R"("frames": [[{"u":0,"v":0}]]})"), ErrorCode::ParseError);
  EXPECT_EQ(parse_code(R"("frames": [[{"u":null,"v":0,"visible":true}]]})"), ErrorCode::ParseError);
  EXPECT_NE(parse_code(R"("frames": [[{"u":null,"v":null,"visible":false},{"u":1,"v":1,"visible":true}]]})"),
            ErrorCode::ParseError);
}

TEST(SequenceIo, MissingGroundTruthLoadsAndEvaluationHasNoOverlap) {
  const std::string body =
      R"("frames": [[{"u":0,"v":0,"visible":true},{"u":1,"v":0,"visible":true},{"u":0,"v":1,"visible":true}],)"
      R"( [{"u":0,"v":0,"visible":true},{"u":1,"v":0,"visible":true},{"u":0,"v":1,"visible":true}]]})";
  std::istringstream in(std::string(kHeader) + body);
  const TrackedSequence s = read_sequence(in);
  EXPECT_FALSE(s.ground_truth.has_value());
  EXPECT_EQ(s.n_frames(), 2u);

  // Without ground truth nothing can be compared: an empty truth grid gives
  // no co-present point.
  Reconstruction r;
  r.points = Grid<std::optional<Vec3>>(2, 3);
  r.source_legs = Grid<std::optional<double>>(2, 3);
  r.rank_ratios.assign(2, std::nullopt);
  EXPECT_EQ(code_of([&] { evaluate(r, Grid<Vec3>(2, 3)); }), ErrorCode::NoOverlap);
}

}  // namespace
}  // namespace maxrigid
