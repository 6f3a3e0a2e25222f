#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "maxrigid/error.hpp"

namespace maxrigid {

struct LinearTerm {
  std::size_t var = 0;
  double coef = 0.0;

  bool operator==(const LinearTerm&) const = default;
};

struct LinearRow {
  std::vector<LinearTerm> terms;
  double rhs = 0.0;

  bool operator==(const LinearRow&) const = default;
};

// Solver-agnostic conic program over a flat variable vector x:
//
//   minimize    sum objective[t].coef * x[objective[t].var]
//   subject to  equalities:    row . x == rhs
//               inequalities:  row . x <= rhs
//               x[v] >= 0      for v in nonneg_entries and for every scalar
//               each PSD block is positive semidefinite
//
// Variables are laid out block by block. A PSD block of size p owns
// p(p+1)/2 variables, one per upper-triangular entry (r <= c) in row-major
// order, holding the matrix entry itself (no sqrt(2) scaling). Scalars follow
// the last block.
struct ConicProblem {
  std::vector<std::size_t> psd_blocks;
  std::size_t n_scalars = 0;
  std::vector<std::size_t> nonneg_entries;
  std::vector<LinearTerm> objective;
  std::vector<LinearRow> equalities;
  std::vector<LinearRow> inequalities;

  static constexpr std::size_t triangle_size(std::size_t p) { return p * (p + 1) / 2; }

  // Index of entry (r, c), r <= c, within a block of size p.
  static constexpr std::size_t entry_index(std::size_t p, std::size_t r, std::size_t c) {
    return r * p - r * (r - 1) / 2 + (c - r);
  }

  std::size_t block_offset(std::size_t block) const {
    std::size_t offset = 0;
    for (std::size_t b = 0; b < block; ++b) offset += triangle_size(psd_blocks[b]);
    return offset;
  }

  std::size_t block_variables() const { return block_offset(psd_blocks.size()); }
  std::size_t scalar_offset() const { return block_variables(); }
  std::size_t n_variables() const { return block_variables() + n_scalars; }

  std::size_t entry_var(std::size_t block, std::size_t r, std::size_t c) const {
    if (r > c) std::swap(r, c);
    return block_offset(block) + entry_index(psd_blocks[block], r, c);
  }

  // Throws InvalidConfig when a term references a variable that does not exist.
  void validate_indices() const {
    const std::size_t n = n_variables();
    auto check_terms = [n](const std::vector<LinearTerm>& terms, const char* where) {
      for (const LinearTerm& t : terms) {
        if (t.var >= n) {
          throw Error(ErrorCode::InvalidConfig, std::string(where) + " references variable " +
                                                    std::to_string(t.var) + " out of " + std::to_string(n));
        }
      }
    };
    check_terms(objective, "objective");
    for (const LinearRow& row : equalities) check_terms(row.terms, "equality");
    for (const LinearRow& row : inequalities) check_terms(row.terms, "inequality");
    for (std::size_t v : nonneg_entries) {
      if (v >= n) throw Error(ErrorCode::InvalidConfig, "nonneg entry out of range");
    }
    for (std::size_t p : psd_blocks) {
      if (p == 0) throw Error(ErrorCode::InvalidConfig, "PSD block of size 0");
    }
  }

  void validate() const {
    if (n_variables() == 0) throw Error(ErrorCode::EmptyProblem, "problem has no variables");
    if (equalities.empty()) throw Error(ErrorCode::EmptyProblem, "problem has no equality constraints");
    validate_indices();
  }

  double evaluate_objective(const std::vector<double>& x) const {
    double value = 0.0;
    for (const LinearTerm& t : objective) value += t.coef * x[t.var];
    return value;
  }

  bool operator==(const ConicProblem&) const = default;
};

inline double evaluate_row(const LinearRow& row, const std::vector<double>& x) {
  double value = 0.0;
  for (const LinearTerm& t : row.terms) value += t.coef * x[t.var];
  return value;
}

}  // namespace maxrigid
