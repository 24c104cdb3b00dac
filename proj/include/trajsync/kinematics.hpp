#pragma once

#include <vector>

#include "trajsync/geom.hpp"
#include "trajsync/xcorr.hpp"

namespace trajsync {

struct RadarPoint {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();  // meters, radar frame
  double doppler = 0.0;                                // m/s, radial
  double intensity = 0.0;
};

struct RadarScan {
  double t = 0.0;
  std::vector<RadarPoint> points;
};

struct Extrinsics {
  Rot3 r_is = Rot3::Identity();                      // sensor-to-INS rotation
  Eigen::Vector3d p_is = Eigen::Vector3d::Zero();    // lever arm, meters
};

/// Body-frame angular rates at interior stamps:
/// w_i = R_i^T Log(R_{i+1} R_{i-1}^T) / (t_{i+1} - t_{i-1}); endpoints dropped.
TimedVec3Series angular_rate_central_diff(const Trajectory& traj);

/// Central-difference velocity of the lever-arm point p_i = p_WI + R_WI p_IS,
/// expressed in the INS body frame at each interior stamp.
TimedVec3Series lever_arm_velocity(const Trajectory& traj, const Extrinsics& ext);

struct EgoVelocityResult {
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();  // radar frame, m/s
  std::vector<bool> inlier_mask;
  bool converged = false;
};

/// Robust ego velocity from per-point radial rates, doppler_k ~ -u_k . v,
/// solved by graduated non-convexity with truncated-least-squares weights.
EgoVelocityResult ego_velocity_gnc(const RadarScan& scan, double inlier_threshold = 0.1,
                                   double mu_update = 1.4, int max_iters = 100);

}  // namespace trajsync
