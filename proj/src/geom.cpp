#include "trajsync/geom.hpp"

namespace trajsync {

Rot3 positive_scalar(const Rot3& q) {
  if (q.w() < 0.0) return Rot3(-q.w(), -q.x(), -q.y(), -q.z());
  return q;
}

Eigen::Vector3d so3_log(const Rot3& r) {
  Rot3 q = positive_scalar(r.normalized());
  const double sin_half = q.vec().norm();
  const double cos_half = q.w();
  if (sin_half < 1e-12) return 2.0 * q.vec();
  Eigen::Vector3d axis = q.vec() / sin_half;
  if (cos_half < 1e-9) {
    // At the pi cut both +axis and -axis describe the rotation; pick a fixed sign.
    int k = 0;
    axis.cwiseAbs().maxCoeff(&k);
    if (axis(k) < 0.0) axis = -axis;
  }
  const double angle = 2.0 * std::atan2(sin_half, cos_half);
  return angle * axis;
}

Rot3 geodesic_midpoint(const Rot3& a, const Rot3& b) {
  const Eigen::Vector3d rel = so3_log(a.conjugate() * b);
  if (M_PI - rel.norm() < 1e-9) throw std::domain_error("antipodal rotations");
  return a * so3_exp(Eigen::Vector3d(0.5 * rel));
}

double rotation_angle_between(const Rot3& a, const Rot3& b) {
  return so3_log(a.conjugate() * b).norm();
}

Eigen::Matrix3d so3_right_jacobian(const Eigen::Vector3d& phi) {
  const double theta = phi.norm();
  const Eigen::Matrix3d w = skew(phi);
  if (theta < 1e-7) return Eigen::Matrix3d::Identity() - 0.5 * w + w * w / 6.0;
  const double t2 = theta * theta;
  return Eigen::Matrix3d::Identity() - w * (1.0 - std::cos(theta)) / t2 +
         w * w * (theta - std::sin(theta)) / (t2 * theta);
}

Eigen::Matrix3d so3_right_jacobian_inverse(const Eigen::Vector3d& phi) {
  const double theta = phi.norm();
  const Eigen::Matrix3d w = skew(phi);
  if (theta < 1e-7) return Eigen::Matrix3d::Identity() + 0.5 * w + w * w / 12.0;
  const double t2 = theta * theta;
  return Eigen::Matrix3d::Identity() + 0.5 * w +
         w * w * (1.0 / t2 - (1.0 + std::cos(theta)) / (2.0 * theta * std::sin(theta)));
}

void validate_trajectory(const Trajectory& traj) {
  for (size_t i = 0; i < traj.size(); ++i) {
    if (!std::isfinite(traj[i].t)) throw std::invalid_argument("non-finite stamp");
    if (i > 0 && traj[i].t <= traj[i - 1].t)
      throw std::invalid_argument("stamps not strictly increasing");
  }
}

}  // namespace trajsync
