#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "maxrigid/conic_problem.hpp"
#include "maxrigid/error.hpp"

// Sparse text format for ConicProblem (see docs/conic_format.md):
//
//   maxrigid-conic 1
//   blocks <count> <size>...
//   scalars <count>
//   nonneg <count>
//   <var>                        (count lines)
//   objective <nnz>
//   <var> <coef>                 (nnz lines)
//   equalities <rows> <nnz>
//   <row> <var> <coef>           (nnz lines, rows ascending)
//   rhs
//   <row> <value>                (rows lines)
//   inequalities <rows> <nnz>
//   ... same as equalities ...
//   end
//
// Reals are written with 17 significant digits so the round trip is exact.

namespace maxrigid {

namespace detail {

inline std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_rows(std::ostream& os, const char* name, const std::vector<LinearRow>& rows) {
  std::size_t nnz = 0;
  for (const LinearRow& r : rows) nnz += r.terms.size();
  os << name << ' ' << rows.size() << ' ' << nnz << '\n';
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (const LinearTerm& t : rows[r].terms) os << r << ' ' << t.var << ' ' << format_real(t.coef) << '\n';
  }
  os << "rhs\n";
  for (std::size_t r = 0; r < rows.size(); ++r) os << r << ' ' << format_real(rows[r].rhs) << '\n';
}

class LineReader {
 public:
  explicit LineReader(std::istream& is) : is_(is) {}

  std::istringstream next(const char* expecting) {
    std::string line;
    while (std::getline(is_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      return std::istringstream(line);
    }
    fail(std::string("unexpected end of input, expecting ") + expecting);
  }

  void expect_keyword(std::istringstream& ls, const char* keyword) {
    std::string word;
    ls >> word;
    if (word != keyword) fail(std::string("expected '") + keyword + "', found '" + word + "'");
  }

  template <typename T>
  T read(std::istringstream& ls, const char* what) {
    T value{};
    if (!(ls >> value)) fail(std::string("cannot read ") + what);
    return value;
  }

  [[noreturn]] void fail(const std::string& message) const {
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no_) + ": " + message);
  }

 private:
  std::istream& is_;
  std::size_t line_no_ = 0;
};

inline double read_real(LineReader& reader, std::istringstream& ls, const char* what) {
  std::string token;
  if (!(ls >> token)) reader.fail(std::string("cannot read ") + what);
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end != token.c_str() + token.size()) reader.fail(std::string("malformed ") + what + " '" + token + "'");
  return v;
}

inline std::vector<LinearRow> read_rows(LineReader& reader, const char* name) {
  auto header = reader.next(name);
  reader.expect_keyword(header, name);
  const auto rows = reader.read<std::size_t>(header, "row count");
  const auto nnz = reader.read<std::size_t>(header, "nonzero count");
  std::vector<LinearRow> out(rows);
  for (std::size_t t = 0; t < nnz; ++t) {
    auto ls = reader.next("row triplet");
    const auto r = reader.read<std::size_t>(ls, "row index");
    const auto v = reader.read<std::size_t>(ls, "variable index");
    const double c = read_real(reader, ls, "coefficient");
    if (r >= rows) reader.fail("row index " + std::to_string(r) + " out of range");
    out[r].terms.push_back({v, c});
  }
  auto rhs = reader.next("rhs");
  reader.expect_keyword(rhs, "rhs");
  for (std::size_t t = 0; t < rows; ++t) {
    auto ls = reader.next("rhs entry");
    const auto r = reader.read<std::size_t>(ls, "row index");
    if (r >= rows) reader.fail("row index " + std::to_string(r) + " out of range");
    out[r].rhs = read_real(reader, ls, "rhs value");
  }
  return out;
}

}  // namespace detail

inline void write_conic_problem(std::ostream& os, const ConicProblem& p) {
  os << "maxrigid-conic 1\n";
  os << "blocks " << p.psd_blocks.size();
  for (std::size_t s : p.psd_blocks) os << ' ' << s;
  os << '\n';
  os << "scalars " << p.n_scalars << '\n';
  os << "nonneg " << p.nonneg_entries.size() << '\n';
  for (std::size_t v : p.nonneg_entries) os << v << '\n';
  os << "objective " << p.objective.size() << '\n';
  for (const LinearTerm& t : p.objective) os << t.var << ' ' << detail::format_real(t.coef) << '\n';
  detail::write_rows(os, "equalities", p.equalities);
  detail::write_rows(os, "inequalities", p.inequalities);
  os << "end\n";
}

inline ConicProblem read_conic_problem(std::istream& is) {
  detail::LineReader reader(is);
  ConicProblem p;

  auto magic = reader.next("header");
  reader.expect_keyword(magic, "maxrigid-conic");
  const int version = reader.read<int>(magic, "format version");
  if (version != 1) {
    throw Error(ErrorCode::UnsupportedVersion, "conic format version " + std::to_string(version));
  }

  auto blocks = reader.next("blocks");
  reader.expect_keyword(blocks, "blocks");
  const auto nb = reader.read<std::size_t>(blocks, "block count");
  for (std::size_t b = 0; b < nb; ++b) p.psd_blocks.push_back(reader.read<std::size_t>(blocks, "block size"));

  auto scalars = reader.next("scalars");
  reader.expect_keyword(scalars, "scalars");
  p.n_scalars = reader.read<std::size_t>(scalars, "scalar count");

  auto nonneg = reader.next("nonneg");
  reader.expect_keyword(nonneg, "nonneg");
  const auto nn = reader.read<std::size_t>(nonneg, "nonneg count");
  for (std::size_t t = 0; t < nn; ++t) {
    auto ls = reader.next("nonneg entry");
    p.nonneg_entries.push_back(reader.read<std::size_t>(ls, "variable index"));
  }

  auto objective = reader.next("objective");
  reader.expect_keyword(objective, "objective");
  const auto no = reader.read<std::size_t>(objective, "objective count");
  for (std::size_t t = 0; t < no; ++t) {
    auto ls = reader.next("objective term");
    const auto v = reader.read<std::size_t>(ls, "variable index");
    p.objective.push_back({v, detail::read_real(reader, ls, "coefficient")});
  }

  p.equalities = detail::read_rows(reader, "equalities");
  p.inequalities = detail::read_rows(reader, "inequalities");

  auto end = reader.next("end");
  reader.expect_keyword(end, "end");

  try {
    p.validate_indices();
  } catch (const Error& e) {
    throw Error(ErrorCode::ParseError, e.detail());
  }
  return p;
}

inline ConicProblem read_conic_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  return read_conic_problem(in);
}

}  // namespace maxrigid
