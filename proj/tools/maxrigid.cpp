// maxrigid command-line driver: synth, reconstruct, eval, solve.
//
// Exit codes: 0 success, 1 usage or other error, 2 I/O or parse error,
// 3 degeneracy detected, 4 solver did not reach Optimal.

#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "maxrigid/maxrigid.hpp"

namespace fs = std::filesystem;
namespace mr = maxrigid;

namespace {

enum Exit : int { kOk = 0, kFailure = 1, kIo = 2, kDegenerate = 3, kSolverFailed = 4 };

int exit_for(const mr::Error& e) {
  switch (e.code()) {
    case mr::ErrorCode::IoError:
    case mr::ErrorCode::ParseError:
    case mr::ErrorCode::UnsupportedVersion:
      return kIo;
    default:
      return kFailure;
  }
}

std::string timestamp_utc() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct SynthArgs {
  std::string kind = "rigid";
  std::uint64_t seed = 0;
  std::size_t n_points = 30;
  std::size_t n_frames = 8;
  double noise = 0.0;
  double missing = 0.0;
  std::optional<std::uint64_t> mask_seed;
  double fov = 81.69;

  mr::SynthesisConfig config(std::size_t k_neighbors) const {
    mr::SynthesisConfig c;
    c.motion_kind = *mr::parse_motion_kind(kind);
    c.rng_seed = seed;
    c.n_points = n_points;
    c.n_frames = n_frames;
    c.noise_sigma = noise;
    c.missing_ratio = missing;
    c.mask_seed = mask_seed;
    c.fov_degrees = fov;
    c.k_neighbors = k_neighbors;
    return c;
  }
};

const std::vector<std::string> kKinds{"rigid", "point-articulated", "axis-articulated", "bending-sheet",
                                      "pure-rotation"};

void add_scene_options(CLI::App* app, SynthArgs& a) {
  app->add_option("--seed", a.seed, "Scene seed")->capture_default_str();
  app->add_option("--n-points", a.n_points, "Number of tracked points")->capture_default_str();
  app->add_option("--n-frames", a.n_frames, "Number of frames")->capture_default_str();
  app->add_option("--noise", a.noise, "Gaussian pixel noise sigma")->capture_default_str();
  app->add_option("--missing", a.missing, "Fraction of hidden (frame, point) entries")->capture_default_str();
  app->add_option("--mask-seed", a.mask_seed, "Seed of the visibility mask stream (default: derived from --seed)");
  app->add_option("--fov", a.fov, "Horizontal field of view, degrees")->capture_default_str();
}

struct SolverArgs {
  mr::SolverConfig config;

  void add(CLI::App* app) {
    app->add_option("--eps-primal", config.eps_primal, "Primal residual tolerance")->capture_default_str();
    app->add_option("--eps-dual", config.eps_dual, "Dual residual tolerance")->capture_default_str();
    app->add_option("--eps-gap", config.eps_gap, "Relative duality gap tolerance")->capture_default_str();
    app->add_option("--max-iterations", config.max_iterations, "Iteration cap")->capture_default_str();
    app->add_option("--over-relaxation", config.over_relaxation, "ADMM relaxation in (1, 2)")->capture_default_str();
    app->add_flag("!--no-scaling", config.scaling_enabled, "Disable Ruiz equilibration");
  }
};

std::string output_dir_default() {
  const char* env = std::getenv("MAXRIGID_OUTPUT_DIR");
  return env && *env ? env : "maxrigid-out";
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw mr::Error(mr::ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
}

void emit_summary(mr::ordered_json summary, const fs::path& dir) {
  summary["timestamp"] = timestamp_utc();
  if (!dir.empty()) mr::write_file_atomic(dir / "summary.json", mr::dump(summary));
  std::cout << summary.dump() << std::endl;
}

// ---------------------------------------------------------------- synth

struct SynthCommand {
  SynthArgs scene;
  std::size_t k_neighbors = 20;
  std::string output;
  std::string output_dir = output_dir_default();

  int run() const {
    const mr::TrackedSequence seq = mr::generate(scene.config(k_neighbors));
    fs::path path = output;
    if (path.empty()) {
      ensure_dir(output_dir);
      path = fs::path(output_dir) / "sequence.json";
    } else if (path.has_parent_path()) {
      ensure_dir(path.parent_path());
    }
    mr::write_file_atomic(path, mr::sequence_to_string(seq));
    mr::ordered_json s{{"command", "synth"},
                       {"exit_code", kOk},
                       {"kind", scene.kind},
                       {"seed", scene.seed},
                       {"n_points", seq.n_points()},
                       {"n_frames", seq.n_frames()},
                       {"masked_fraction", seq.masked_fraction()},
                       {"output", path.string()}};
    emit_summary(s, {});
    return kOk;
  }
};

// ---------------------------------------------------------- reconstruct

struct ReconstructCommand {
  std::string input;
  std::optional<std::string> synth_kind;
  SynthArgs scene;
  std::size_t k_neighbors = 20;
  double lambda1 = 1.0;
  double lambda2 = 20.0;
  SolverArgs solver;
  bool force = false;
  bool dump_problem = false;
  bool trace = false;
  bool per_frame_csv = false;
  bool save_sequence = false;
  std::string output_dir = output_dir_default();

  int run() const {
    if (input.empty() == !synth_kind.has_value()) {
      throw mr::Error(mr::ErrorCode::InvalidConfig, "give exactly one of --input and --synth");
    }
    mr::TrackedSequence seq;
    mr::ordered_json source;
    if (synth_kind) {
      SynthArgs a = scene;
      a.kind = *synth_kind;
      seq = mr::generate(a.config(k_neighbors));
      source = {{"synth", a.kind}, {"seed", a.seed}, {"n_points", a.n_points}, {"n_frames", a.n_frames},
                {"noise", a.noise}, {"missing", a.missing}};
    } else {
      seq = mr::read_sequence_file(input);
      source = {{"input", input}};
    }

    const fs::path dir = output_dir;
    ensure_dir(dir);
    if (save_sequence) mr::write_file_atomic(dir / "sequence.json", mr::sequence_to_string(seq));

    mr::PipelineOptions opts;
    opts.k_neighbors = k_neighbors;
    opts.weights = mr::ProblemWeights{lambda1, lambda2};
    opts.solver = solver.config;
    opts.force = force;
    const fs::path trace_tmp = dir / "trace.csv.tmp";
    if (trace) opts.solver.trace_path = trace_tmp.string();

    const mr::PipelineResult r = mr::run_pipeline(seq, opts);
    const auto& ids = r.ingested.kept_frames;

    mr::ordered_json files = mr::ordered_json::array();
    auto write = [&](const std::string& name, const std::string& text) {
      mr::write_file_atomic(dir / name, text);
      files.push_back(name);
    };

    write("degeneracy.json", mr::dump(mr::to_json(r.degeneracy)));
    if (r.program && dump_problem) {
      std::ostringstream os;
      mr::write_conic_problem(os, r.program->conic);
      write("problem.txt", os.str());
    }
    if (r.solution) write("solution.json", mr::dump(mr::solver_json(*r.solution, ids)));
    if (trace && fs::exists(trace_tmp)) {
      fs::rename(trace_tmp, dir / "trace.csv");
      files.push_back("trace.csv");
    }
    if (r.reconstruction) {
      mr::ordered_json rec = mr::to_json(*r.reconstruction, ids);
      rec["masked_fraction"] = r.masked_fraction;
      write("reconstruction.json", mr::dump(rec));
    }
    if (r.diagnostics) write("diagnostics.json", mr::dump(mr::to_json(*r.diagnostics)));
    if (r.evaluation) write("evaluation.json", mr::dump(mr::to_json(*r.evaluation, ids)));
    if (r.reconstruction && per_frame_csv) write("per_frame.csv", mr::per_frame_csv(*r.reconstruction, r.evaluation, ids));

    int code = kOk;
    if (r.outcome == mr::PipelineOutcome::Degenerate) code = kDegenerate;
    if (r.outcome == mr::PipelineOutcome::SolverFailed) code = kSolverFailed;

    mr::ordered_json s{{"command", "reconstruct"},
                       {"outcome", mr::to_string(r.outcome)},
                       {"exit_code", code},
                       {"source", source},
                       {"k_neighbors", k_neighbors},
                       {"lambda1", lambda1},
                       {"lambda2", lambda2},
                       {"kept_frames", ids},
                       {"dropped_frames", r.ingested.dropped_frames},
                       {"masked_fraction", r.masked_fraction},
                       {"degeneracy", mr::to_string(r.degeneracy.verdict)}};
    if (r.graph.edges.size()) s["edges"] = r.graph.edges.size();
    if (r.solution) {
      s["solver_status"] = mr::to_string(r.solution->status);
      s["iterations"] = r.solution->iterations;
      s["objective"] = r.solution->objective_value;
    }
    if (r.evaluation) {
      s["rmse"] = r.evaluation->rmse;
      s["r_err_percent"] = r.evaluation->r_err;
    }
    if (r.diagnostics) s["total_delta_prime"] = r.diagnostics->total_delta_prime;
    s["warnings"] = r.warnings;
    s["files"] = files;
    emit_summary(s, dir);
    return code;
  }
};

// ------------------------------------------------------------------ eval

struct EvalCommand {
  std::string reconstruction;
  std::string sequence;
  std::string align = "scale";
  bool per_frame_csv = false;
  std::string output_dir = output_dir_default();

  int run() const {
    std::ifstream in(reconstruction);
    if (!in) throw mr::Error(mr::ErrorCode::IoError, "cannot open " + reconstruction);
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw mr::Error(mr::ErrorCode::ParseError, reconstruction + ": " + e.what());
    }
    const mr::LoadedReconstruction loaded = mr::reconstruction_from_json(doc);
    const mr::Reconstruction& rec = loaded.reconstruction;
    const mr::TrackedSequence seq = mr::read_sequence_file(sequence);
    if (!seq.ground_truth) throw mr::Error(mr::ErrorCode::NoOverlap, sequence + " has no ground truth");
    if (seq.n_points() != rec.n_points()) throw mr::Error(mr::ErrorCode::InvalidConfig, "point counts differ");

    mr::Grid<mr::Vec3> truth(rec.n_frames(), rec.n_points());
    for (std::size_t k = 0; k < rec.n_frames(); ++k) {
      if (loaded.frame_ids[k] >= seq.n_frames()) throw mr::Error(mr::ErrorCode::InvalidConfig, "frame id out of range");
      for (std::size_t i = 0; i < rec.n_points(); ++i) truth(k, i) = (*seq.ground_truth)(loaded.frame_ids[k], i);
    }

    mr::EvaluationReport report;
    if (align == "scale") {
      report = mr::evaluate(rec, truth);
    } else if (align == "none") {
      report = mr::compute_metrics(rec, truth);
    } else {
      const bool global = align == "procrustes-global";
      const mr::ProcrustesAlignment pa = mr::align_procrustes(rec, truth, global);
      report = mr::compute_metrics(pa.aligned, truth);
      report.alignment.kind = global ? mr::AlignmentKind::ProcrustesGlobal : mr::AlignmentKind::ProcrustesPerFrame;
      report.alignment.transforms = pa.transforms;
    }

    const fs::path dir = output_dir;
    ensure_dir(dir);
    mr::ordered_json files = mr::ordered_json::array({"evaluation.json"});
    mr::write_file_atomic(dir / "evaluation.json", mr::dump(mr::to_json(report, loaded.frame_ids)));
    if (per_frame_csv) {
      mr::write_file_atomic(dir / "per_frame.csv", mr::per_frame_csv(rec, report, loaded.frame_ids));
      files.push_back("per_frame.csv");
    }
    mr::ordered_json s{{"command", "eval"},         {"exit_code", kOk},
                       {"alignment", align},        {"rmse", report.rmse},
                       {"r_err_percent", report.r_err}, {"points_compared", report.points_compared},
                       {"files", files}};
    emit_summary(s, dir);
    return kOk;
  }
};

// ----------------------------------------------------------------- solve

struct SolveCommand {
  std::string problem;
  SolverArgs solver;
  bool trace = false;
  std::string output_dir = output_dir_default();

  int run() const {
    const mr::ConicProblem cp = mr::read_conic_problem_file(problem);
    const fs::path dir = output_dir;
    ensure_dir(dir);
    mr::SolverConfig cfg = solver.config;
    const fs::path trace_tmp = dir / "trace.csv.tmp";
    if (trace) cfg.trace_path = trace_tmp.string();
    const mr::ConicSolution sol = mr::solve(cp, cfg);
    mr::ordered_json files = mr::ordered_json::array({"solution.json"});
    mr::write_file_atomic(dir / "solution.json", mr::dump(mr::to_json(sol)));
    if (trace && fs::exists(trace_tmp)) {
      fs::rename(trace_tmp, dir / "trace.csv");
      files.push_back("trace.csv");
    }
    const int code = sol.status == mr::SolveStatus::Optimal ? kOk : kSolverFailed;
    mr::ordered_json s{{"command", "solve"},
                       {"exit_code", code},
                       {"status", mr::to_string(sol.status)},
                       {"objective", sol.objective},
                       {"iterations", sol.iterations},
                       {"residuals", mr::to_json(sol.residuals)},
                       {"files", files}};
    emit_summary(s, dir);
    return code;
  }
};

void add_output_dir(CLI::App* app, std::string& dir) {
  app->add_option("--output-dir", dir, "Directory for reports (env MAXRIGID_OUTPUT_DIR)")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Perspective non-rigid reconstruction from tracked points via a rigidity-maximizing SDP"};
  app.require_subcommand(1);

  SynthCommand synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic tracked sequence (JSON)");
  s->add_option("--kind", synth.scene.kind, "Motion kind")->check(CLI::IsMember(kKinds))->capture_default_str();
  add_scene_options(s, synth.scene);
  s->add_option("--k", synth.k_neighbors, "Neighbors each frame must exceed when masking")->capture_default_str();
  s->add_option("-o,--output", synth.output, "Output file (default: <output-dir>/sequence.json)");
  add_output_dir(s, synth.output_dir);

  ReconstructCommand rec;
  auto* r = app.add_subcommand("reconstruct", "Run the full pipeline on a file or a synthetic scene");
  auto* in_opt = r->add_option("-i,--input", rec.input, "Sequence JSON file");
  auto* syn_opt = r->add_option("--synth", rec.synth_kind, "Generate a scene of this kind instead")->check(CLI::IsMember(kKinds));
  in_opt->excludes(syn_opt);
  add_scene_options(r, rec.scene);
  r->add_option("--k", rec.k_neighbors, "Neighborhood size K")->capture_default_str()->check(CLI::PositiveNumber);
  r->add_option("--lambda1", rec.lambda1, "Maximum-leg weight")->capture_default_str();
  r->add_option("--lambda2", rec.lambda2, "Distance-expansion weight")->capture_default_str();
  rec.solver.add(r);
  r->add_flag("--force", rec.force, "Solve even when a degeneracy is detected");
  r->add_flag("--dump-problem", rec.dump_problem, "Write the conic problem to problem.txt");
  r->add_flag("--trace", rec.trace, "Write per-iteration residuals to trace.csv");
  r->add_flag("--per-frame-csv", rec.per_frame_csv, "Write per-frame errors to per_frame.csv");
  r->add_flag("--save-sequence", rec.save_sequence, "Write the input sequence to sequence.json");
  add_output_dir(r, rec.output_dir);

  EvalCommand ev;
  auto* e = app.add_subcommand("eval", "Score a reconstruction against a sequence's ground truth");
  e->add_option("-r,--reconstruction", ev.reconstruction, "reconstruction.json")->required();
  e->add_option("-s,--sequence", ev.sequence, "Sequence JSON with ground truth")->required();
  e->add_option("--align", ev.align, "Alignment before scoring")
      ->check(CLI::IsMember({"scale", "procrustes", "procrustes-global", "none"}))
      ->capture_default_str();
  e->add_flag("--per-frame-csv", ev.per_frame_csv, "Write per-frame errors to per_frame.csv");
  add_output_dir(e, ev.output_dir);

  SolveCommand so;
  auto* v = app.add_subcommand("solve", "Solve a serialized conic problem");
  v->add_option("-p,--problem", so.problem, "Problem file")->required();
  so.solver.add(v);
  v->add_flag("--trace", so.trace, "Write per-iteration residuals to trace.csv");
  add_output_dir(v, so.output_dir);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForAllHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kFailure;
  }

  try {
    if (s->parsed()) return synth.run();
    if (r->parsed()) return rec.run();
    if (e->parsed()) return ev.run();
    if (v->parsed()) return so.run();
  } catch (const mr::Error& err) {
    std::cerr << "error: " << err.what() << '\n';
    const int code = exit_for(err);
    std::cout << mr::ordered_json{{"exit_code", code}, {"error", mr::to_string(err.code())}, {"message", err.detail()}}.dump()
              << std::endl;
    return code;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kFailure;
  }
  return kFailure;
}
