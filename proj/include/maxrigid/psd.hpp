#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "maxrigid/error.hpp"

namespace maxrigid {

inline constexpr double kSqrt2 = 1.41421356237309504880;

// Frobenius-nearest PSD matrix: symmetrize, then clip negative eigenvalues.
inline Eigen::MatrixXd project_psd(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw Error(ErrorCode::NumericalError, "project_psd needs a square matrix");
  if (!m.allFinite()) throw Error(ErrorCode::NumericalError, "project_psd input has non-finite entries");
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  if (eig.info() != Eigen::Success) throw Error(ErrorCode::NumericalError, "eigendecomposition failed");
  const Eigen::VectorXd clipped = eig.eigenvalues().cwiseMax(0.0);
  return eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
}

inline double min_eigenvalue(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw Error(ErrorCode::NumericalError, "eigendecomposition failed");
  return eig.eigenvalues()(0);
}

// svec of a symmetric p x p matrix: upper triangle row by row, off-diagonal
// entries times sqrt(2), so that <svec(A), svec(B)> = <A, B>_F.
inline void svec_pack(const Eigen::MatrixXd& m, double* out) {
  const Eigen::Index p = m.rows();
  std::size_t t = 0;
  for (Eigen::Index r = 0; r < p; ++r) {
    out[t++] = m(r, r);
    for (Eigen::Index c = r + 1; c < p; ++c) out[t++] = kSqrt2 * m(r, c);
  }
}

inline Eigen::MatrixXd svec_unpack(const double* in, Eigen::Index p) {
  Eigen::MatrixXd m(p, p);
  std::size_t t = 0;
  for (Eigen::Index r = 0; r < p; ++r) {
    m(r, r) = in[t++];
    for (Eigen::Index c = r + 1; c < p; ++c) {
      m(r, c) = in[t++] / kSqrt2;
      m(c, r) = m(r, c);
    }
  }
  return m;
}

struct RankOneCheck {
  double ratio = 0.0;             // second / first eigenvalue
  Eigen::VectorXd leading_vector;  // sqrt(lambda_1) * principal eigenvector
};

// For Y = l l^T the leading vector is l itself. The eigenvector sign is fixed
// by pairing with `legs` (the first row of the Schur block) when given, and by
// a non-negative entry sum otherwise.
inline RankOneCheck check_rank_one(const Eigen::MatrixXd& y,
                                   const std::optional<Eigen::VectorXd>& legs = std::nullopt) {
  RankOneCheck out;
  const Eigen::Index p = y.rows();
  if (p == 0) return out;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (y + y.transpose()));
  if (eig.info() != Eigen::Success) throw Error(ErrorCode::NumericalError, "eigendecomposition failed");
  const double l1 = eig.eigenvalues()(p - 1);
  const double l2 = p > 1 ? eig.eigenvalues()(p - 2) : 0.0;
  out.ratio = l1 > 0.0 ? std::max(l2, 0.0) / l1 : 0.0;
  Eigen::VectorXd v = eig.eigenvectors().col(p - 1) * std::sqrt(std::max(l1, 0.0));
  const double orientation = legs ? v.dot(*legs) : v.sum();
  if (orientation < 0.0) v = -v;
  out.leading_vector = v;
  return out;
}

}  // namespace maxrigid
