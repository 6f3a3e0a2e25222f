#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace maxrigid {

// Seeded stream used by the generator. The engine is std::mt19937_64, whose
// output sequence is fixed by the C++ standard. Derived draws:
//   uniform01  = (next() >> 11) * 2^-53                      in [0, 1)
//   uniform    = lo + (hi - lo) * uniform01
//   gaussian   = sqrt(-2 ln(1 - u1)) * cos(2 pi u2)          (u1 drawn first)
//   unit axis  = normalize(gaussian, gaussian, gaussian), redrawn if zero
// See docs/rng.md.
class Random {
 public:
  explicit Random(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  double gaussian() {
    const double u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(1.0 - u1)) * std::cos(2.0 * M_PI * u2);
  }

  Eigen::Vector3d unit_vector() {
    for (;;) {
      const double x = gaussian();
      const double y = gaussian();
      const double z = gaussian();
      const Eigen::Vector3d v(x, y, z);
      const double n = v.norm();
      if (n > 1e-12) return v / n;
    }
  }

  // Rotation about a uniformly random axis by an angle drawn in [lo, hi].
  Eigen::Matrix3d rotation(double lo, double hi) {
    const Eigen::Vector3d axis = unit_vector();
    const double angle = uniform(lo, hi);
    return Eigen::AngleAxisd(angle, axis).toRotationMatrix();
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace maxrigid
