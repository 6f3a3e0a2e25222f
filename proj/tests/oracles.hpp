#pragma once

// Brute-force reference implementations of the evaluation metrics, shared by
// the unit tests and the acceptance runner. None of them call library code
// beyond the plain containers.

#include <algorithm>
#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "maxrigid/evaluation.hpp"
#include "maxrigid/reconstruction.hpp"
#include "test_support.hpp"

namespace maxrigid::test {

inline Grid<Vec3> random_grid(std::mt19937_64& rng, std::size_t m, std::size_t n, double lo = -2, double hi = 2) {
  Grid<Vec3> g(m, n);
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      g(k, i) = Vec3(uniform(rng, lo, hi), uniform(rng, lo, hi), uniform(rng, lo, hi));
    }
  }
  return g;
}

inline Reconstruction as_recon(const Grid<Vec3>& pts, double hide = 0.0, std::mt19937_64* rng = nullptr) {
  Reconstruction r;
  r.points = Grid<std::optional<Vec3>>(pts.frames(), pts.points());
  r.source_legs = Grid<std::optional<double>>(pts.frames(), pts.points());
  r.rank_ratios.assign(pts.frames(), std::nullopt);
  for (std::size_t k = 0; k < pts.frames(); ++k) {
    for (std::size_t i = 0; i < pts.points(); ++i) {
      if (rng && uniform(*rng, 0, 1) < hide) continue;
      r.points(k, i) = pts(k, i);
    }
  }
  return r;
}

// Least-squares scale over every present coordinate, solved by QR.
inline double scale_oracle(const Reconstruction& r, const Grid<Vec3>& truth) {
  std::vector<double> x, y;
  for (std::size_t k = 0; k < r.n_frames(); ++k) {
    for (std::size_t i = 0; i < r.n_points(); ++i) {
      if (!r.points(k, i)) continue;
      for (int c = 0; c < 3; ++c) {
        x.push_back((*r.points(k, i))(c));
        y.push_back(truth(k, i)(c));
      }
    }
  }
  const Eigen::Map<Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
  const Eigen::Map<Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(y.size()));
  return xv.colPivHouseholderQr().solve(yv)(0);
}

// Horn's closed form: the rotation is the top eigenvector of a 4x4 symmetric
// matrix built from the cross-covariance, read as a unit quaternion.
inline SimilarityTransform horn_oracle(const Eigen::Matrix3Xd& src, const Eigen::Matrix3Xd& dst) {
  const Vec3 ms = src.rowwise().mean();
  const Vec3 md = dst.rowwise().mean();
  const Eigen::Matrix3Xd a = src.colwise() - ms;
  const Eigen::Matrix3Xd b = dst.colwise() - md;
  const Mat3 s = a * b.transpose();
  Eigen::Matrix4d n;
  n << s(0, 0) + s(1, 1) + s(2, 2), s(1, 2) - s(2, 1), s(2, 0) - s(0, 2), s(0, 1) - s(1, 0),
      s(1, 2) - s(2, 1), s(0, 0) - s(1, 1) - s(2, 2), s(0, 1) + s(1, 0), s(2, 0) + s(0, 2),
      s(2, 0) - s(0, 2), s(0, 1) + s(1, 0), -s(0, 0) + s(1, 1) - s(2, 2), s(1, 2) + s(2, 1),
      s(0, 1) - s(1, 0), s(2, 0) + s(0, 2), s(1, 2) + s(2, 1), -s(0, 0) - s(1, 1) + s(2, 2);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(n);
  const Eigen::Vector4d q = eig.eigenvectors().col(3);
  SimilarityTransform t;
  t.rotation = Eigen::Quaterniond(q(0), q(1), q(2), q(3)).normalized().toRotationMatrix();
  t.scale = (b.cwiseProduct(t.rotation * a)).sum() / a.squaredNorm();
  t.translation = md - t.scale * t.rotation * ms;
  return t;
}

// Frame-wise metrics with Eigen reductions in place of point loops.
inline std::pair<double, double> metrics_oracle(const Reconstruction& recon, const Grid<Vec3>& truth) {
  double rmse = 0.0, rerr = 0.0;
  int frames = 0;
  for (std::size_t k = 0; k < recon.n_frames(); ++k) {
    std::vector<Vec3> q, t;
    for (std::size_t i = 0; i < recon.n_points(); ++i) {
      if (recon.points(k, i)) {
        q.push_back(*recon.points(k, i));
        t.push_back(truth(k, i));
      }
    }
    if (q.empty()) continue;
    const Eigen::Map<const Eigen::Matrix3Xd> qm(q[0].data(), 3, static_cast<Eigen::Index>(q.size()));
    const Eigen::Map<const Eigen::Matrix3Xd> tm(t[0].data(), 3, static_cast<Eigen::Index>(t.size()));
    rmse += std::sqrt((tm - qm).colwise().squaredNorm().mean());
    rerr += 100.0 * (tm - qm).norm() / tm.norm();
    ++frames;
  }
  return {rmse / frames, rerr / frames};
}

inline double relative_diff(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace maxrigid::test
