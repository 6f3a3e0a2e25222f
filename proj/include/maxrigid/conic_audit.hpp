#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include <Eigen/Core>

#include "maxrigid/conic_problem.hpp"
#include "maxrigid/conic_solver.hpp"
#include "maxrigid/error.hpp"
#include "maxrigid/psd.hpp"

namespace maxrigid {

// Post-hoc check of a solution against the problem as written, without going
// through the solver's internal matrices.
struct AuditReport {
  Residuals residuals;
  double min_psd_eigenvalue = 0.0;  // smallest over all blocks of x
  double max_equality_violation = 0.0;
  double max_inequality_violation = 0.0;  // positive part of a.x - b
  double min_sign_constrained = 0.0;      // smallest nonneg entry / scalar
};

inline AuditReport audit_kkt(const ConicProblem& p, const ConicSolution& sol) {
  const std::size_t n = p.n_variables();
  if (sol.x.size() != n) throw Error(ErrorCode::InvalidConfig, "solution size does not match the problem");
  const std::vector<double>& x = sol.x;
  const std::vector<double>& y = sol.y;

  AuditReport a;
  double b_norm = 0.0, ax_norm = 0.0, x_norm = 0.0;
  for (double v : x) x_norm = std::max(x_norm, std::abs(v));
  for (const LinearRow& r : p.equalities) {
    const double ax = evaluate_row(r, x);
    b_norm = std::max(b_norm, std::abs(r.rhs));
    ax_norm = std::max(ax_norm, std::abs(ax));
    a.max_equality_violation = std::max(a.max_equality_violation, std::abs(ax - r.rhs));
  }
  for (const LinearRow& r : p.inequalities) {
    const double ax = evaluate_row(r, x);
    b_norm = std::max(b_norm, std::abs(r.rhs));
    ax_norm = std::max(ax_norm, std::abs(ax));
    a.max_inequality_violation = std::max(a.max_inequality_violation, ax - r.rhs);
  }
  a.min_sign_constrained = std::numeric_limits<double>::infinity();
  for (std::size_t v : p.nonneg_entries) a.min_sign_constrained = std::min(a.min_sign_constrained, x[v]);
  for (std::size_t v = 0; v < p.n_scalars; ++v) {
    a.min_sign_constrained = std::min(a.min_sign_constrained, x[p.scalar_offset() + v]);
  }
  if (!std::isfinite(a.min_sign_constrained)) a.min_sign_constrained = 0.0;

  a.min_psd_eigenvalue = std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < p.psd_blocks.size(); ++b) {
    const std::size_t size = p.psd_blocks[b];
    Eigen::MatrixXd m(size, size);
    for (std::size_t r = 0; r < size; ++r) {
      for (std::size_t c = 0; c < size; ++c) m(r, c) = x[p.entry_var(b, r, c)];
    }
    a.min_psd_eigenvalue = std::min(a.min_psd_eigenvalue, min_eigenvalue(m));
  }
  if (!std::isfinite(a.min_psd_eigenvalue)) a.min_psd_eigenvalue = 0.0;

  const double viol = std::max({a.max_equality_violation, a.max_inequality_violation, -a.min_sign_constrained,
                                std::max(0.0, -a.min_psd_eigenvalue)});
  a.residuals.primal = viol / (1.0 + std::max({b_norm, ax_norm, x_norm}));

  // Dual: c + A^T y with y laid out as documented on ConicSolution.
  std::vector<double> c(n, 0.0), aty(n, 0.0);
  for (const LinearTerm& t : p.objective) c[t.var] += t.coef;
  double by = 0.0;
  if (y.size() == sol.s.size() && !y.empty()) {
    std::size_t row = 0;
    for (const auto* rows : {&p.equalities, &p.inequalities}) {
      for (const LinearRow& r : *rows) {
        for (const LinearTerm& t : r.terms) aty[t.var] += t.coef * y[row];
        by += r.rhs * y[row];
        ++row;
      }
    }
    for (std::size_t v : p.nonneg_entries) aty[v] -= y[row++];
    for (std::size_t v = 0; v < p.n_scalars; ++v) aty[p.scalar_offset() + v] -= y[row++];
    for (std::size_t b = 0; b < p.psd_blocks.size(); ++b) {
      const std::size_t size = p.psd_blocks[b];
      for (std::size_t r = 0; r < size; ++r) {
        for (std::size_t cc = r; cc < size; ++cc) {
          aty[p.entry_var(b, r, cc)] -= (r == cc ? 1.0 : kSqrt2) * y[row++];
        }
      }
    }
  }
  double c_norm = 0.0, aty_norm = 0.0, stat = 0.0, cx = 0.0;
  for (std::size_t v = 0; v < n; ++v) {
    c_norm = std::max(c_norm, std::abs(c[v]));
    aty_norm = std::max(aty_norm, std::abs(aty[v]));
    stat = std::max(stat, std::abs(c[v] + aty[v]));
    cx += c[v] * x[v];
  }
  a.residuals.dual = stat / (1.0 + std::max(c_norm, aty_norm));
  a.residuals.gap = std::abs(cx + by) / (1.0 + std::abs(cx) + std::abs(by));
  return a;
}

}  // namespace maxrigid
