#include "trajsync/kinematics.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace trajsync {

TimedVec3Series angular_rate_central_diff(const Trajectory& traj) {
  if (traj.size() < 3) throw std::invalid_argument("too short");
  validate_trajectory(traj);
  TimedVec3Series out;
  out.stamps.reserve(traj.size() - 2);
  out.values.reserve(traj.size() - 2);
  for (size_t i = 1; i + 1 < traj.size(); ++i) {
    const Rot3& prev = traj[i - 1].pose.rotation;
    const Rot3& next = traj[i + 1].pose.rotation;
    const double span = traj[i + 1].t - traj[i - 1].t;
    const Eigen::Vector3d world_rate = so3_log(next * prev.conjugate()) / span;
    out.stamps.push_back(traj[i].t);
    out.values.push_back(traj[i].pose.rotation.conjugate() * world_rate);
  }
  return out;
}

TimedVec3Series lever_arm_velocity(const Trajectory& traj, const Extrinsics& ext) {
  if (traj.size() < 3) throw std::invalid_argument("too short");
  validate_trajectory(traj);
  std::vector<Eigen::Vector3d> world_points(traj.size());
  for (size_t i = 0; i < traj.size(); ++i)
    world_points[i] = traj[i].pose.translation + traj[i].pose.rotation * ext.p_is;

  TimedVec3Series out;
  out.stamps.reserve(traj.size() - 2);
  out.values.reserve(traj.size() - 2);
  for (size_t i = 1; i + 1 < traj.size(); ++i) {
    const double span = traj[i + 1].t - traj[i - 1].t;
    const Eigen::Vector3d world_vel = (world_points[i + 1] - world_points[i - 1]) / span;
    out.stamps.push_back(traj[i].t);
    out.values.push_back(traj[i].pose.rotation.conjugate() * world_vel);
  }
  return out;
}

EgoVelocityResult ego_velocity_gnc(const RadarScan& scan, double inlier_threshold,
                                   double mu_update, int max_iters) {
  const size_t n = scan.points.size();
  if (n < 3) throw std::invalid_argument("degenerate geometry");

  std::vector<Eigen::Vector3d> dirs(n);
  Eigen::VectorXd doppler(n);
  for (size_t k = 0; k < n; ++k) {
    const double range = scan.points[k].position.norm();
    if (!(range > 0.0)) throw std::invalid_argument("zero-range radar point");
    dirs[k] = scan.points[k].position / range;
    doppler(k) = scan.points[k].doppler;
  }

  Eigen::VectorXd weights = Eigen::VectorXd::Ones(n);
  auto solve_weighted = [&](const Eigen::VectorXd& w) {
    Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
    Eigen::Vector3d g = Eigen::Vector3d::Zero();
    for (size_t k = 0; k < n; ++k) {
      h += w(k) * dirs[k] * dirs[k].transpose();
      g -= w(k) * doppler(k) * dirs[k];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(h);
    if (!(eig.eigenvalues()(0) > 0.0) ||
        eig.eigenvalues()(2) / eig.eigenvalues()(0) > 1e6)
      throw std::runtime_error("degenerate geometry");
    return Eigen::Vector3d(eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() *
                           (eig.eigenvectors().transpose() * g));
  };
  auto residuals = [&](const Eigen::Vector3d& v) {
    Eigen::VectorXd r(n);
    for (size_t k = 0; k < n; ++k) r(k) = doppler(k) + dirs[k].dot(v);
    return r;
  };

  const double c2 = inlier_threshold * inlier_threshold;
  Eigen::Vector3d v = solve_weighted(weights);
  Eigen::VectorXd r = residuals(v);

  // GNC-TLS: start near-convex (mu small), anneal mu upward until the weights
  // are binary.
  const double r2max = r.array().square().maxCoeff();
  if (r2max <= c2) {
    // Everything already within the inlier bound: plain least squares.
    EgoVelocityResult out;
    out.velocity = v;
    out.inlier_mask.assign(n, true);
    out.converged = true;
    return out;
  }
  double mu = c2 / (2.0 * r2max - c2);
  if (!(mu > 0.0)) mu = 1e-3;

  EgoVelocityResult out;
  bool binary = false;
  for (int iter = 0; iter < max_iters && !binary; ++iter) {
    for (size_t k = 0; k < n; ++k) {
      const double rk2 = r(k) * r(k);
      const double upper = (mu + 1.0) / mu * c2;
      const double lower = mu / (mu + 1.0) * c2;
      if (rk2 >= upper)
        weights(k) = 0.0;
      else if (rk2 <= lower)
        weights(k) = 1.0;
      else
        weights(k) = std::sqrt(c2 * mu * (mu + 1.0) / rk2) - mu;
    }
    v = solve_weighted(weights);
    r = residuals(v);
    mu *= mu_update;
    binary = true;
    for (size_t k = 0; k < n; ++k)
      if (weights(k) > 1e-6 && weights(k) < 1.0 - 1e-6) binary = false;
  }

  out.velocity = v;
  out.inlier_mask.resize(n);
  for (size_t k = 0; k < n; ++k) out.inlier_mask[k] = weights(k) > 0.5;
  out.converged = binary;
  return out;
}

}  // namespace trajsync
