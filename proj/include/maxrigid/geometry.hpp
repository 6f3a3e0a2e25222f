#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Core>
#include <Eigen/LU>

#include "maxrigid/error.hpp"

namespace maxrigid {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Pinhole intrinsics. Stored normalized so that K(2,2) == 1, with the inverse
// cached for ray construction.
class CameraIntrinsics {
 public:
  CameraIntrinsics() : CameraIntrinsics(Mat3::Identity()) {}

  explicit CameraIntrinsics(const Mat3& k) {
    if (!k.allFinite()) {
      throw Error(ErrorCode::InvalidIntrinsics, "non-finite entries");
    }
    if (k(1, 0) != 0.0 || k(2, 0) != 0.0 || k(2, 1) != 0.0) {
      throw Error(ErrorCode::InvalidIntrinsics, "matrix must be upper-triangular");
    }
    if (!(k(0, 0) > 0.0 && k(1, 1) > 0.0 && k(2, 2) > 0.0)) {
      throw Error(ErrorCode::InvalidIntrinsics, "diagonal must be positive");
    }
    k_ = k / k(2, 2);
    inverse_ = k_.inverse();
    if (!inverse_.allFinite()) {
      throw Error(ErrorCode::InvalidIntrinsics, "matrix is singular");
    }
    const double cond = k_.norm() * inverse_.norm();
    if (!std::isfinite(cond)) {
      throw Error(ErrorCode::InvalidIntrinsics, "condition number is not finite");
    }
  }

  // Square pixels, principal point at the image center, horizontal field of view.
  static CameraIntrinsics from_fov(double width, double height, double fov_degrees) {
    if (!(fov_degrees > 0.0 && fov_degrees < 180.0) || !(width > 0.0) || !(height > 0.0)) {
      throw Error(ErrorCode::InvalidIntrinsics, "invalid image size or field of view");
    }
    const double half = fov_degrees * M_PI / 360.0;
    const double f = 0.5 * width / std::tan(half);
    Mat3 k;
    k << f, 0.0, 0.5 * width,
         0.0, f, 0.5 * height,
         0.0, 0.0, 1.0;
    return CameraIntrinsics(k);
  }

  const Mat3& matrix() const noexcept { return k_; }
  const Mat3& inverse() const noexcept { return inverse_; }

  bool operator==(const CameraIntrinsics& other) const { return k_ == other.k_; }

 private:
  Mat3 k_;
  Mat3 inverse_;
};

// One tracked image measurement. u, v are meaningless when !visible.
struct Observation {
  double u = 0.0;
  double v = 0.0;
  bool visible = false;

  bool operator==(const Observation&) const = default;
};

// Unit viewing direction from the camera center, pointing into the scene.
class NormalizedRay {
 public:
  static NormalizedRay from_direction(const Vec3& d) {
    const double norm = d.norm();
    if (!std::isfinite(norm) || norm == 0.0 || !(d.z() > 0.0)) {
      throw Error(ErrorCode::InvalidObservation, "ray must be finite and point in front of the camera");
    }
    return NormalizedRay(d / norm);
  }

  const Vec3& direction() const noexcept { return direction_; }

 private:
  explicit NormalizedRay(const Vec3& d) : direction_(d) {}
  Vec3 direction_;
};

inline NormalizedRay normalize_ray(const CameraIntrinsics& intrinsics, const Observation& obs) {
  if (!obs.visible) {
    throw Error(ErrorCode::NotVisible, "observation is not visible");
  }
  if (!std::isfinite(obs.u) || !std::isfinite(obs.v)) {
    throw Error(ErrorCode::InvalidObservation, "visible observation has non-finite coordinates");
  }
  const Vec3 homogeneous = intrinsics.inverse() * Vec3(obs.u, obs.v, 1.0);
  return NormalizedRay::from_direction(homogeneous);
}

// cos of the angle between two viewing rays.
inline double pair_cosine(const NormalizedRay& a, const NormalizedRay& b) {
  return std::clamp(a.direction().dot(b.direction()), -1.0, 1.0);
}

// Angle between two rays, accurate for nearly parallel rays where acos is not.
inline double pair_angle(const NormalizedRay& a, const NormalizedRay& b) {
  return std::atan2(a.direction().cross(b.direction()).norm(), a.direction().dot(b.direction()));
}

inline Vec3 point_from_leg(double leg, const NormalizedRay& ray) {
  if (!(leg >= 0.0)) {
    throw Error(ErrorCode::InvalidLeg, "leg must be non-negative, got " + std::to_string(leg));
  }
  return leg * ray.direction();
}

// Pixel coordinates of a camera-frame point; z must be positive.
inline Observation project(const CameraIntrinsics& intrinsics, const Vec3& point) {
  const Vec3 h = intrinsics.matrix() * point;
  return Observation{h.x() / h.z(), h.y() / h.z(), true};
}

}  // namespace maxrigid
