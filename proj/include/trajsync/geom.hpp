#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace trajsync {

using Rot3 = Eigen::Quaterniond;

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, 3, 3> skew(const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  Eigen::Matrix<Scalar, 3, 3> m;
  m << Scalar(0), -v(2), v(1), v(2), Scalar(0), -v(0), -v(1), v(0), Scalar(0);
  return m;
}

/// Axis-angle exponential; so3_exp(0) = identity.
template <typename Derived>
Eigen::Quaternion<typename Derived::Scalar> so3_exp(const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  const Scalar theta = v.norm();
  if (theta < Scalar(1e-12)) {
    Eigen::Quaternion<Scalar> q(Scalar(1), v(0) / Scalar(2), v(1) / Scalar(2), v(2) / Scalar(2));
    q.normalize();
    return q;
  }
  const Scalar half = theta / Scalar(2);
  const Scalar s = std::sin(half) / theta;
  return Eigen::Quaternion<Scalar>(std::cos(half), s * v(0), s * v(1), s * v(2));
}

/// Principal axis-angle, norm <= pi. Axis sign at the pi cut fixed by making the
/// largest-magnitude component positive, so the result is deterministic.
Eigen::Vector3d so3_log(const Rot3& r);

/// Flips the quaternion so the scalar part is non-negative (q and -q are the same rotation).
Rot3 positive_scalar(const Rot3& q);

/// a . Exp(0.5 Log(a^T b)). Throws for antipodal inputs.
Rot3 geodesic_midpoint(const Rot3& a, const Rot3& b);

/// ||Log(a^T b)|| in [0, pi].
double rotation_angle_between(const Rot3& a, const Rot3& b);

/// Inverse right Jacobian of the SO(3) exponential at phi.
Eigen::Matrix3d so3_right_jacobian_inverse(const Eigen::Vector3d& phi);

/// Right Jacobian of the SO(3) exponential at phi.
Eigen::Matrix3d so3_right_jacobian(const Eigen::Vector3d& phi);

struct Pose {
  Rot3 rotation = Rot3::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Pose() = default;
  Pose(const Rot3& r, const Eigen::Vector3d& t) : rotation(r), translation(t) {}

  Pose operator*(const Pose& other) const {
    return {rotation * other.rotation, translation + rotation * other.translation};
  }
  Eigen::Vector3d operator*(const Eigen::Vector3d& point) const {
    return rotation * point + translation;
  }
  Pose inverse() const {
    const Rot3 rinv = rotation.conjugate();
    return {rinv, rinv * (-translation)};
  }
  static Pose Identity() { return {}; }
};

struct StampedPose {
  double t = 0.0;
  Pose pose;
};

using Trajectory = std::vector<StampedPose>;

/// Throws unless stamps are finite and strictly increasing.
void validate_trajectory(const Trajectory& traj);

}  // namespace trajsync
