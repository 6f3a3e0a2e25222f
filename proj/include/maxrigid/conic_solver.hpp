#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "maxrigid/conic_problem.hpp"
#include "maxrigid/error.hpp"
#include "maxrigid/psd.hpp"

namespace maxrigid {

struct SolverConfig {
  double eps_primal = 1e-6;
  double eps_dual = 1e-6;
  double eps_gap = 1e-6;
  std::size_t max_iterations = 100000;
  double over_relaxation = 1.6;
  bool scaling_enabled = true;

  double eps_infeasible = 1e-10;
  double rho = 0.1;
  double sigma = 1e-6;
  bool adaptive_rho = true;
  std::size_t adaptive_rho_interval = 25;
  std::size_t scaling_iterations = 20;
  std::string trace_path;  // per-iteration residual CSV when non-empty

  void validate() const {
    if (!(eps_primal > 0.0 && eps_dual > 0.0 && eps_gap > 0.0 && eps_infeasible > 0.0)) {
      throw Error(ErrorCode::InvalidConfig, "solver tolerances must be positive");
    }
    if (max_iterations < 1) throw Error(ErrorCode::InvalidConfig, "max_iterations must be >= 1");
    if (!(over_relaxation > 1.0 && over_relaxation < 2.0)) {
      throw Error(ErrorCode::InvalidConfig, "over_relaxation must lie in (1, 2)");
    }
    if (!(rho > 0.0 && sigma > 0.0)) throw Error(ErrorCode::InvalidConfig, "rho and sigma must be positive");
    if (adaptive_rho_interval < 1) throw Error(ErrorCode::InvalidConfig, "adaptive_rho_interval must be >= 1");
  }
};

enum class SolveStatus { Optimal, MaxIterations, Infeasible, Unbounded };

constexpr std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::MaxIterations: return "MaxIterations";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::Unbounded: return "Unbounded";
  }
  return "Unknown";
}

// Relative residuals, all measured on the unscaled problem:
//   primal = max constraint violation / (1 + max(|b|, |a.x| over linear rows, |x|))
//   dual   = |c + A^T y|_inf / (1 + max(|c|, |A^T y|))
//   gap    = |c.x + b.y| / (1 + |c.x| + |b.y|)
struct Residuals {
  double primal = 0.0;
  double dual = 0.0;
  double gap = 0.0;
};

// Rows of the internal constraint system A x + s = b, s in K, in this order:
//   equalities (s = 0), inequalities, nonneg entries, scalars (s >= 0),
//   then one svec-packed row group per PSD block (s PSD).
// y holds the matching dual variables (y in the dual cone).
struct ConicSolution {
  SolveStatus status = SolveStatus::MaxIterations;
  std::vector<double> x;
  std::vector<double> s;
  std::vector<double> y;
  double objective = 0.0;
  Residuals residuals;
  std::size_t iterations = 0;
  double rho = 0.0;
};

struct WarmStart {
  std::vector<double> x;
  std::vector<double> s;
  std::vector<double> y;

  static WarmStart from(const ConicSolution& sol) { return WarmStart{sol.x, sol.s, sol.y}; }
};

namespace detail {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

struct ConeLayout {
  std::size_t zero = 0;
  std::size_t nonneg = 0;
  std::vector<std::size_t> psd;  // block sizes
  std::size_t rows() const {
    std::size_t r = zero + nonneg;
    for (std::size_t p : psd) r += ConicProblem::triangle_size(p);
    return r;
  }
};

struct StandardForm {
  SpMat a;  // rows x vars
  Vec b;
  Vec c;
  ConeLayout cones;
  std::size_t linear_rows = 0;  // equalities + inequalities
  SpMat linear;                 // the first linear_rows rows of a
  std::vector<std::size_t> sign_constrained;  // variables required >= 0
};

inline StandardForm to_standard_form(const ConicProblem& p) {
  StandardForm f;
  const std::size_t n = p.n_variables();
  f.cones.zero = p.equalities.size();
  f.cones.nonneg = p.inequalities.size() + p.nonneg_entries.size() + p.n_scalars;
  f.cones.psd = p.psd_blocks;
  f.linear_rows = p.equalities.size() + p.inequalities.size();
  const std::size_t m = f.cones.rows();

  std::vector<Eigen::Triplet<double>> t;
  f.b = Vec::Zero(static_cast<Eigen::Index>(m));
  std::size_t row = 0;
  auto add_rows = [&](const std::vector<LinearRow>& rows) {
    for (const LinearRow& r : rows) {
      for (const LinearTerm& term : r.terms) {
        t.emplace_back(static_cast<int>(row), static_cast<int>(term.var), term.coef);
      }
      f.b(static_cast<Eigen::Index>(row)) = r.rhs;
      ++row;
    }
  };
  add_rows(p.equalities);
  add_rows(p.inequalities);
  for (std::size_t v : p.nonneg_entries) t.emplace_back(static_cast<int>(row++), static_cast<int>(v), -1.0);
  for (std::size_t v = 0; v < p.n_scalars; ++v) {
    t.emplace_back(static_cast<int>(row++), static_cast<int>(p.scalar_offset() + v), -1.0);
  }
  for (std::size_t b = 0; b < p.psd_blocks.size(); ++b) {
    const std::size_t size = p.psd_blocks[b];
    const std::size_t off = p.block_offset(b);
    for (std::size_t r = 0; r < size; ++r) {
      for (std::size_t c = r; c < size; ++c) {
        const std::size_t var = off + ConicProblem::entry_index(size, r, c);
        t.emplace_back(static_cast<int>(row++), static_cast<int>(var), r == c ? -1.0 : -kSqrt2);
      }
    }
  }
  f.a.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  f.a.setFromTriplets(t.begin(), t.end());
  f.a.makeCompressed();

  std::vector<Eigen::Triplet<double>> lin;
  for (const auto& tr : t) {
    if (static_cast<std::size_t>(tr.row()) < f.linear_rows) lin.push_back(tr);
  }
  f.linear.resize(static_cast<Eigen::Index>(f.linear_rows), static_cast<Eigen::Index>(n));
  f.linear.setFromTriplets(lin.begin(), lin.end());
  f.sign_constrained = p.nonneg_entries;
  for (std::size_t v = 0; v < p.n_scalars; ++v) f.sign_constrained.push_back(p.scalar_offset() + v);

  f.c = Vec::Zero(static_cast<Eigen::Index>(n));
  for (const LinearTerm& term : p.objective) f.c(static_cast<Eigen::Index>(term.var)) += term.coef;
  return f;
}

// Euclidean projection onto K = {0}^zero x R+^nonneg x PSD blocks (svec).
inline void project_cone(const ConeLayout& cones, Vec& v) {
  Eigen::Index r = 0;
  for (std::size_t i = 0; i < cones.zero; ++i) v(r++) = 0.0;
  for (std::size_t i = 0; i < cones.nonneg; ++i, ++r) v(r) = std::max(v(r), 0.0);
  for (std::size_t p : cones.psd) {
    const Eigen::MatrixXd m = svec_unpack(v.data() + r, static_cast<Eigen::Index>(p));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    if (eig.info() != Eigen::Success) throw Error(ErrorCode::NumericalError, "eigendecomposition failed");
    const Eigen::MatrixXd proj =
        eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).asDiagonal() * eig.eigenvectors().transpose();
    svec_pack(proj, v.data() + r);
    r += static_cast<Eigen::Index>(ConicProblem::triangle_size(p));
  }
}

inline double inf_norm(const Vec& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

// Ruiz equilibration of A: E A D with E uniform inside every PSD row group so
// the scaled cone is still the PSD cone.
inline void equilibrate(const SpMat& a, const ConeLayout& cones, std::size_t iterations, Vec& d, Vec& e) {
  d = Vec::Ones(a.cols());
  e = Vec::Ones(a.rows());
  SpMat work = a;
  for (std::size_t it = 0; it < iterations; ++it) {
    Vec col = Vec::Zero(work.cols());
    Vec row = Vec::Zero(work.rows());
    for (Eigen::Index j = 0; j < work.outerSize(); ++j) {
      for (SpMat::InnerIterator itr(work, j); itr; ++itr) {
        const double v = std::abs(itr.value());
        col(j) = std::max(col(j), v);
        row(itr.row()) = std::max(row(itr.row()), v);
      }
    }
    auto factor = [](double norm) { return norm > 0.0 ? std::clamp(1.0 / std::sqrt(norm), 1e-4, 1e4) : 1.0; };
    Vec dc(work.cols()), er(work.rows());
    for (Eigen::Index j = 0; j < dc.size(); ++j) dc(j) = factor(col(j));
    for (Eigen::Index i = 0; i < er.size(); ++i) er(i) = factor(row(i));
    Eigen::Index r = static_cast<Eigen::Index>(cones.zero + cones.nonneg);
    for (std::size_t p : cones.psd) {
      const auto len = static_cast<Eigen::Index>(ConicProblem::triangle_size(p));
      const double mean = er.segment(r, len).mean();
      er.segment(r, len).setConstant(mean);
      r += len;
    }
    work = er.asDiagonal() * work * dc.asDiagonal();
    d = d.cwiseProduct(dc);
    e = e.cwiseProduct(er);
  }
}

class KktSystem {
 public:
  KktSystem(const SpMat& a, double sigma) : a_(a), sigma_(sigma) {}

  void factor(const Vec& rho) {
    const Eigen::Index n = a_.cols();
    const Eigen::Index m = a_.rows();
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(static_cast<std::size_t>(a_.nonZeros() + n + m));
    for (Eigen::Index j = 0; j < n; ++j) t.emplace_back(j, j, sigma_);
    for (Eigen::Index j = 0; j < a_.outerSize(); ++j) {
      for (SpMat::InnerIterator it(a_, j); it; ++it) t.emplace_back(n + it.row(), j, it.value());
    }
    for (Eigen::Index i = 0; i < m; ++i) t.emplace_back(n + i, n + i, -1.0 / rho(i));
    SpMat kkt(n + m, n + m);
    kkt.setFromTriplets(t.begin(), t.end());
    if (!analyzed_) {
      ldlt_.analyzePattern(kkt);
      analyzed_ = true;
    }
    ldlt_.factorize(kkt);
    if (ldlt_.info() != Eigen::Success) throw Error(ErrorCode::NumericalError, "KKT factorization failed");
  }

  Vec solve(const Vec& rhs) const {
    Vec sol = ldlt_.solve(rhs);
    if (!sol.allFinite()) throw Error(ErrorCode::NumericalError, "KKT solve produced non-finite values");
    return sol;
  }

 private:
  const SpMat& a_;
  double sigma_;
  bool analyzed_ = false;
  Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
};

}  // namespace detail

// Evaluates the relative residuals of (x, y) on the unscaled standard form.
// PSD membership of x is not re-checked here: callers pass points whose PSD
// blocks come from a cone projection.
inline Residuals compute_residuals(const detail::StandardForm& f, const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& y) {
  using detail::inf_norm;
  Residuals r;
  const Eigen::Index lin = static_cast<Eigen::Index>(f.linear_rows);
  const Eigen::Index zero = static_cast<Eigen::Index>(f.cones.zero);
  const Eigen::VectorXd ax = f.linear * x;
  double viol = 0.0;
  for (Eigen::Index i = 0; i < lin; ++i) {
    const double d = ax(i) - f.b(i);
    viol = std::max(viol, i < zero ? std::abs(d) : std::max(d, 0.0));
  }
  for (std::size_t v : f.sign_constrained) viol = std::max(viol, -x(static_cast<Eigen::Index>(v)));

  const double pnorm = 1.0 + std::max({inf_norm(f.b), inf_norm(ax), inf_norm(x)});
  r.primal = viol / pnorm;

  const Eigen::VectorXd aty = f.a.transpose() * y;
  r.dual = inf_norm(f.c + aty) / (1.0 + std::max(inf_norm(f.c), inf_norm(aty)));

  const double cx = f.c.dot(x);
  const double by = f.b.dot(y);
  r.gap = std::abs(cx + by) / (1.0 + std::abs(cx) + std::abs(by));
  return r;
}

// First-order operator splitting (ADMM on A x + s = b, s in K) with Ruiz
// equilibration, over-relaxation, adaptive step size and infeasibility
// detection from the iterate differences.
inline ConicSolution solve(const ConicProblem& problem, const SolverConfig& config = {},
                           const std::optional<WarmStart>& warm = std::nullopt) {
  using namespace detail;
  config.validate();
  problem.validate();

  const StandardForm f = to_standard_form(problem);
  const Eigen::Index n = f.a.cols();
  const Eigen::Index m = f.a.rows();
  const Eigen::Index zero = static_cast<Eigen::Index>(f.cones.zero);
  const Eigen::Index nonneg_end = static_cast<Eigen::Index>(f.cones.zero + f.cones.nonneg);

  Vec d, e;
  if (config.scaling_enabled) {
    equilibrate(f.a, f.cones, config.scaling_iterations, d, e);
  } else {
    d = Vec::Ones(n);
    e = Vec::Ones(m);
  }
  const SpMat a_s = e.asDiagonal() * f.a * d.asDiagonal();
  const Vec b_s = e.cwiseProduct(f.b);
  Vec c_s = d.cwiseProduct(f.c);
  double cost_scale = 1.0;
  if (config.scaling_enabled) {
    cost_scale = std::clamp(1.0 / std::max(inf_norm(c_s), 1e-4), 1e-4, 1e4);
  }
  c_s *= cost_scale;

  auto rho_vector = [&](double rho) {
    Vec r = Vec::Constant(m, rho);
    r.head(zero).setConstant(std::min(rho * 1e3, 1e6));
    return r;
  };
  double rho = config.rho;
  Vec rho_v = rho_vector(rho);
  KktSystem kkt(a_s, config.sigma);
  kkt.factor(rho_v);

  Vec x = Vec::Zero(n), s = Vec::Zero(m), y = Vec::Zero(m);
  if (warm) {
    if (warm->x.size() != static_cast<std::size_t>(n) || warm->s.size() != static_cast<std::size_t>(m) ||
        warm->y.size() != static_cast<std::size_t>(m)) {
      throw Error(ErrorCode::InvalidConfig, "warm start dimensions do not match the problem");
    }
    x = Eigen::Map<const Vec>(warm->x.data(), n).cwiseQuotient(d);
    s = Eigen::Map<const Vec>(warm->s.data(), m).cwiseProduct(e);
    y = Eigen::Map<const Vec>(warm->y.data(), m).cwiseQuotient(e) * cost_scale;
  }

  std::ofstream trace;
  if (!config.trace_path.empty()) {
    trace.open(config.trace_path);
    if (!trace) throw Error(ErrorCode::IoError, "cannot open trace file " + config.trace_path);
    trace << "iteration,primal,dual,gap\n";
    trace.precision(17);
  }

  // Unscaled candidate: PSD blocks and scalars are read from the projected
  // slack so they lie exactly in their cones.
  auto candidate = [&](const Vec& xs, const Vec& ss, Vec& x_out, Vec& y_out, const Vec& ys) {
    x_out = xs.cwiseProduct(d);
    const Vec s_u = ss.cwiseQuotient(e);
    y_out = ys.cwiseProduct(e) / cost_scale;
    Eigen::Index row = static_cast<Eigen::Index>(f.linear_rows + problem.nonneg_entries.size());
    for (std::size_t v = 0; v < problem.n_scalars; ++v) {
      x_out(static_cast<Eigen::Index>(problem.scalar_offset() + v)) = s_u(row++);
    }
    for (std::size_t b = 0; b < problem.psd_blocks.size(); ++b) {
      const std::size_t p = problem.psd_blocks[b];
      const std::size_t off = problem.block_offset(b);
      for (std::size_t r = 0; r < p; ++r) {
        for (std::size_t c = r; c < p; ++c) {
          x_out(static_cast<Eigen::Index>(off + ConicProblem::entry_index(p, r, c))) =
              r == c ? s_u(row) : s_u(row) / kSqrt2;
          ++row;
        }
      }
    }
  };

  ConicSolution out;
  Vec x_out, y_out;
  auto finish = [&](SolveStatus status, std::size_t iterations, const Residuals& res) {
    out.status = status;
    out.iterations = iterations;
    out.residuals = res;
    out.x.assign(x_out.data(), x_out.data() + n);
    const Vec s_u = s.cwiseQuotient(e);
    out.s.assign(s_u.data(), s_u.data() + m);
    out.y.assign(y_out.data(), y_out.data() + m);
    out.objective = f.c.dot(x_out);
    out.rho = rho;
    return out;
  };

  auto converged = [&](const Residuals& r) {
    return r.primal <= config.eps_primal && r.dual <= config.eps_dual && r.gap <= config.eps_gap;
  };

  candidate(x, s, x_out, y_out, y);
  Residuals res = compute_residuals(f, x_out, y_out);
  if (trace) trace << 0 << ',' << res.primal << ',' << res.dual << ',' << res.gap << '\n';
  if (converged(res)) return finish(SolveStatus::Optimal, 0, res);

  const double alpha = config.over_relaxation;
  Vec rhs(n + m), x_tilde(n), s_tilde(m), s_hat(m), v(m);
  for (std::size_t it = 1; it <= config.max_iterations; ++it) {
    rhs.head(n) = config.sigma * x - c_s;
    rhs.tail(m) = b_s - s - y.cwiseQuotient(rho_v);
    const Vec sol = kkt.solve(rhs);
    x_tilde = sol.head(n);
    // A x_tilde = rhs_bottom + nu / rho
    s_tilde = s + y.cwiseQuotient(rho_v) - sol.tail(m).cwiseQuotient(rho_v);

    const Vec x_prev = x;
    const Vec y_prev = y;
    x = alpha * x_tilde + (1.0 - alpha) * x;
    s_hat = alpha * s_tilde + (1.0 - alpha) * s;
    v = s_hat - y.cwiseQuotient(rho_v);
    s = v;
    project_cone(f.cones, s);
    y = y + rho_v.cwiseProduct(s - s_hat);

    if (!x.allFinite() || !y.allFinite()) throw Error(ErrorCode::NumericalError, "iterates became non-finite");

    candidate(x, s, x_out, y_out, y);
    res = compute_residuals(f, x_out, y_out);
    if (trace) trace << it << ',' << res.primal << ',' << res.dual << ',' << res.gap << '\n';
    if (converged(res)) return finish(SolveStatus::Optimal, it, res);

    // Infeasibility certificates from successive differences (unscaled).
    const Vec dy = (y - y_prev).cwiseProduct(e) / cost_scale;
    const double bdy = f.b.dot(dy);
    if (bdy < 0.0) {
      const Vec ydir = dy / -bdy;
      bool cert = inf_norm(f.a.transpose() * ydir) <= config.eps_infeasible;
      for (Eigen::Index i = zero; cert && i < nonneg_end; ++i) cert = ydir(i) >= -config.eps_infeasible;
      Eigen::Index r = nonneg_end;
      for (std::size_t p = 0; cert && p < f.cones.psd.size(); ++p) {
        const auto size = static_cast<Eigen::Index>(f.cones.psd[p]);
        cert = min_eigenvalue(svec_unpack(ydir.data() + r, size)) >= -config.eps_infeasible;
        r += static_cast<Eigen::Index>(ConicProblem::triangle_size(f.cones.psd[p]));
      }
      if (cert) return finish(SolveStatus::Infeasible, it, res);
    }
    const Vec dx = (x - x_prev).cwiseProduct(d);
    const double cdx = f.c.dot(dx);
    if (cdx < 0.0) {
      const Vec xdir = dx / -cdx;
      const Vec adx = f.a * xdir;
      bool cert = true;
      for (Eigen::Index i = 0; cert && i < zero; ++i) cert = std::abs(adx(i)) <= config.eps_infeasible;
      for (Eigen::Index i = zero; cert && i < nonneg_end; ++i) cert = adx(i) <= config.eps_infeasible;
      Eigen::Index r = nonneg_end;
      for (std::size_t p = 0; cert && p < f.cones.psd.size(); ++p) {
        const auto size = static_cast<Eigen::Index>(f.cones.psd[p]);
        const Vec neg = -adx.segment(r, static_cast<Eigen::Index>(ConicProblem::triangle_size(f.cones.psd[p])));
        cert = min_eigenvalue(svec_unpack(neg.data(), size)) >= -config.eps_infeasible;
        r += static_cast<Eigen::Index>(ConicProblem::triangle_size(f.cones.psd[p]));
      }
      if (cert) return finish(SolveStatus::Unbounded, it, res);
    }

    if (config.adaptive_rho && it % config.adaptive_rho_interval == 0) {
      const Vec ax = a_s * x;
      const Vec aty = a_s.transpose() * y;
      const double prim = inf_norm(ax + s - b_s) / std::max({inf_norm(ax), inf_norm(s), inf_norm(b_s), 1e-12});
      const double dual = inf_norm(c_s + aty) / std::max({inf_norm(aty), inf_norm(c_s), 1e-12});
      const double ratio = std::sqrt(prim / std::max(dual, 1e-30));
      if (ratio > 5.0 || ratio < 0.2) {
        const double next = std::clamp(rho * ratio, 1e-6, 1e6);
        if (next != rho) {
          rho = next;
          rho_v = rho_vector(rho);
          kkt.factor(rho_v);
        }
      }
    }
  }
  return finish(SolveStatus::MaxIterations, config.max_iterations, res);
}

}  // namespace maxrigid
