#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "trajsync/kinematics.hpp"
#include "trajsync/rng.hpp"
#include "trajsync/synth.hpp"

using namespace trajsync;

namespace {

Trajectory pure_yaw_trajectory(double rate_rad_s, double hz, double duration) {
  Trajectory traj;
  for (double t = 0.0; t <= duration + 1e-12; t += 1.0 / hz) {
    StampedPose p;
    p.t = t;
    p.pose.rotation = so3_exp(Eigen::Vector3d(0, 0, rate_rad_s * t));
    traj.push_back(p);
  }
  return traj;
}

RadarScan hemisphere_scan(Rng& rng, const Eigen::Vector3d& v, int count, double noise) {
  RadarScan scan;
  for (int k = 0; k < count; ++k) {
    Eigen::Vector3d dir(rng.normal(), rng.normal(), std::abs(rng.normal()) + 0.1);
    dir.normalize();
    RadarPoint pt;
    pt.position = dir * rng.uniform(5.0, 50.0);
    pt.doppler = -dir.dot(v) + noise * rng.normal();
    pt.intensity = 10.0;
    scan.points.push_back(pt);
  }
  return scan;
}

}  // namespace

TEST_CASE("angular rate of a constant pose is zero") {
  Trajectory traj;
  for (int i = 0; i < 20; ++i) traj.push_back({0.1 * i, Pose{}});
  const TimedVec3Series w = angular_rate_central_diff(traj);
  CHECK(w.size() == traj.size() - 2);
  for (const auto& v : w.values) CHECK(v.norm() < 1e-15);
}

TEST_CASE("angular rate of pure yaw") {
  const TimedVec3Series w = angular_rate_central_diff(pure_yaw_trajectory(0.3, 10.0, 5.0));
  for (const auto& v : w.values) CHECK((v - Eigen::Vector3d(0, 0, 0.3)).norm() < 1e-4);
}

TEST_CASE("angular rate against the analytic model") {
  const ScenarioConfig cfg = default_scenario();
  const TruthModel truth = generate_truth(cfg);
  Trajectory traj;
  for (double t = 0.0; t <= 20.0; t += 0.01) traj.push_back({t, truth.pose(t)});
  const TimedVec3Series w = angular_rate_central_diff(traj);
  for (size_t i = 0; i < w.size(); i += 7)
    CHECK((w.values[i] - truth.angular_rate_body(w.stamps[i])).norm() < 1e-4);
}

TEST_CASE("angular rate invariant to a fixed world transform") {
  const ScenarioConfig cfg = default_scenario();
  const TruthModel truth = generate_truth(cfg);
  Trajectory traj;
  for (double t = 0.0; t <= 5.0; t += 0.05) traj.push_back({t, truth.pose(t)});
  const Pose world(so3_exp(Eigen::Vector3d(0.5, -1.0, 0.7)), Eigen::Vector3d(10, -4, 2));
  Trajectory moved = traj;
  for (auto& p : moved) p.pose = world * p.pose;
  const TimedVec3Series wa = angular_rate_central_diff(traj);
  const TimedVec3Series wb = angular_rate_central_diff(moved);
  for (size_t i = 0; i < wa.size(); ++i)
    CHECK((wa.values[i] - wb.values[i]).norm() < 1e-12);
}

TEST_CASE("angular rate needs three poses") {
  Trajectory traj;
  traj.push_back({0.0, Pose{}});
  traj.push_back({0.1, Pose{}});
  CHECK_THROWS_WITH_AS(angular_rate_central_diff(traj), "too short", std::invalid_argument);
}

TEST_CASE("lever arm velocity") {
  Extrinsics ext;
  ext.p_is = Eigen::Vector3d(0.5, -0.2, 0.1);

  Trajectory still;
  for (int i = 0; i < 10; ++i) still.push_back({0.1 * i, Pose{}});
  for (const auto& v : lever_arm_velocity(still, ext).values) CHECK(v.norm() < 1e-15);

  // Pure rotation: speed of the lever point equals |w x r|.
  const double yaw_rate = 0.4;
  const Trajectory spin = pure_yaw_trajectory(yaw_rate, 100.0, 3.0);
  const Eigen::Vector3d expect =
      Eigen::Vector3d(0, 0, yaw_rate).cross(ext.p_is);
  for (const auto& v : lever_arm_velocity(spin, ext).values)
    CHECK(std::abs(v.norm() - expect.norm()) < 1e-4);
}

TEST_CASE("zero lever arm reduces to body-frame origin velocity") {
  const ScenarioConfig cfg = default_scenario();
  const TruthModel truth = generate_truth(cfg);
  Trajectory traj;
  for (double t = 0.0; t <= 5.0; t += 0.02) traj.push_back({t, truth.pose(t)});
  Extrinsics ext;  // identity, zero lever arm
  const TimedVec3Series v = lever_arm_velocity(traj, ext);
  for (size_t i = 0; i < v.size(); ++i) {
    const size_t k = i + 1;
    const Eigen::Vector3d diff =
        (traj[k + 1].pose.translation - traj[k - 1].pose.translation) /
        (traj[k + 1].t - traj[k - 1].t);
    CHECK((v.values[i] - traj[k].pose.rotation.conjugate() * diff).norm() < 1e-12);
  }
}

TEST_CASE("ego velocity: stationary scan") {
  Rng rng(41);
  RadarScan scan = hemisphere_scan(rng, Eigen::Vector3d::Zero(), 40, 0.0);
  const EgoVelocityResult r = ego_velocity_gnc(scan);
  CHECK(r.velocity.norm() < 1e-12);
  CHECK(r.converged);
  for (const bool in : r.inlier_mask) CHECK(in);
}

TEST_CASE("ego velocity: exact recovery on clean data") {
  Rng rng(42);
  const Eigen::Vector3d v(5.0, 0.0, 0.0);
  RadarScan scan = hemisphere_scan(rng, v, 50, 0.0);
  const EgoVelocityResult r = ego_velocity_gnc(scan);
  CHECK((r.velocity - v).norm() < 1e-9);
}

TEST_CASE("ego velocity equals unweighted least squares on inlier-only data") {
  Rng rng(43);
  const Eigen::Vector3d v(1.2, -0.7, 0.3);
  RadarScan scan = hemisphere_scan(rng, v, 60, 0.005);
  const EgoVelocityResult r = ego_velocity_gnc(scan);

  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  Eigen::Vector3d g = Eigen::Vector3d::Zero();
  for (const auto& pt : scan.points) {
    const Eigen::Vector3d u = pt.position.normalized();
    h += u * u.transpose();
    g -= pt.doppler * u;
  }
  const Eigen::Vector3d ls = h.ldlt().solve(g);
  CHECK((r.velocity - ls).norm() < 1e-9);
}

TEST_CASE("ego velocity under 40 percent outliers") {
  Rng rng(44);
  std::vector<double> errors;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Vector3d v(rng.uniform(-6, 6), rng.uniform(-6, 6), rng.uniform(-1, 1));
    RadarScan scan = hemisphere_scan(rng, v, 100, 0.01);
    // A single independently moving object contaminates 40% of the returns.
    const Eigen::Vector3d obj(rng.uniform(-8, 8), rng.uniform(-8, 8), rng.uniform(-2, 2));
    for (size_t k = 0; k < scan.points.size(); ++k) {
      if (rng.uniform01() < 0.4) {
        const Eigen::Vector3d u = scan.points[k].position.normalized();
        scan.points[k].doppler = u.dot(obj - v) + 0.01 * rng.normal();
      }
    }
    const EgoVelocityResult r = ego_velocity_gnc(scan);
    errors.push_back((r.velocity - v).norm());
  }
  std::sort(errors.begin(), errors.end());
  CHECK(errors[94] < 0.05);
}

TEST_CASE("ego velocity rejects degenerate direction spreads") {
  RadarScan scan;
  for (int k = 0; k < 20; ++k) {
    RadarPoint pt;
    pt.position = Eigen::Vector3d(10.0 + k, 0.0, 0.0);  // all collinear
    pt.doppler = -1.0;
    scan.points.push_back(pt);
  }
  CHECK_THROWS_WITH_AS(ego_velocity_gnc(scan), "degenerate geometry", std::runtime_error);
}

TEST_CASE("doppler sign convention round trip") {
  // Moving forward, a target dead ahead closes in: negative doppler.
  const Eigen::Vector3d v(3.0, 0.0, 0.0);
  RadarPoint ahead;
  ahead.position = Eigen::Vector3d(20.0, 0.0, 0.0);
  ahead.doppler = -ahead.position.normalized().dot(v);
  CHECK(ahead.doppler < 0.0);

  Rng rng(45);
  RadarScan scan = hemisphere_scan(rng, v, 30, 0.0);
  scan.points.push_back(ahead);
  const EgoVelocityResult r = ego_velocity_gnc(scan);
  CHECK((r.velocity - v).norm() < 1e-9);
}
