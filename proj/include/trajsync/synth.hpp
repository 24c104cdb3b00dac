#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "trajsync/clocksync.hpp"
#include "trajsync/geom.hpp"
#include "trajsync/kinematics.hpp"
#include "trajsync/reversal.hpp"
#include "trajsync/rng.hpp"

namespace trajsync {

// Synthetic scenarios built from sums of sinusoids so every kinematic quantity
// has a closed form: pose, world velocity/acceleration, and body angular rate
// are all analytic, which gives the estimators independent oracles.

struct SinusoidTerm {
  double amplitude = 0.0;   // meters or radians
  double frequency_hz = 0.0;
  double phase = 0.0;       // radians
};

struct StreamClockModel {
  double offset = 0.0;       // host = sensor*(1+drift) + offset + jitter
  double drift = 0.0;        // s/s
  double jitter_mean = 0.0;  // exponential jitter mean, one-sided
};

struct ScenarioConfig {
  double duration = 60.0;
  uint64_t seed = 1;
  std::array<std::vector<SinusoidTerm>, 3> translation;  // per world axis
  std::array<std::vector<SinusoidTerm>, 3> rotation;     // rotation-vector axes
  double imu_rate = 100.0;
  double pose_rate = 10.0;
  double radar_rate = 15.0;
  StreamClockModel imu_clock;
  StreamClockModel bridge_clock;
  double gyro_noise = 0.0;
  double accel_noise = 0.0;
  double position_noise = 0.0;
  double rotation_noise = 0.0;  // radians, per rotation-vector axis
  double doppler_noise = 0.0;
  double doppler_outlier_fraction = 0.0;
  int radar_landmarks = 50;
};

/// A gently moving platform with motion on all axes.
ScenarioConfig default_scenario();

class TruthModel {
 public:
  explicit TruthModel(const ScenarioConfig& cfg);

  Eigen::Vector3d position(double t) const;
  Eigen::Vector3d velocity_world(double t) const;
  Eigen::Vector3d acceleration_world(double t) const;
  Rot3 rotation(double t) const;
  Pose pose(double t) const;
  /// Body angular rate of R(t) = Exp(r(t)): Jr(r) * dr/dt.
  Eigen::Vector3d angular_rate_body(double t) const;
  Eigen::Vector3d velocity_body(double t) const;
  /// Kinematic body acceleration R^T d2p/dt2; gravity is not modeled.
  Eigen::Vector3d accel_body(double t) const;

 private:
  std::array<std::vector<SinusoidTerm>, 3> translation_;
  std::array<std::vector<SinusoidTerm>, 3> rotation_;
  Eigen::Vector3d rotvec(double t) const;
  Eigen::Vector3d rotvec_rate(double t) const;
};

TruthModel generate_truth(const ScenarioConfig& cfg);

/// Poses at cfg.pose_rate with Gaussian position and rotation-vector noise.
Trajectory sample_poses(const TruthModel& truth, const ScenarioConfig& cfg);

/// IMU records at cfg.imu_rate; noiseless when the noise settings are zero.
MessageStream sample_imu(const TruthModel& truth, const ScenarioConfig& cfg);

/// Radar scans at cfg.radar_rate: landmarks uniform in a 5-50 m shell around
/// the platform, doppler = -u . v_body plus noise; the outlier fraction gets
/// the doppler of an independently moving object instead.
std::vector<RadarScan> sample_radar(const TruthModel& truth, const ScenarioConfig& cfg,
                                    int landmark_count);

/// (sensor_time, sensor_time*(1+drift) + offset + jitter) pairs; jitter >= 0.
TimePairSeries sample_clock(const std::vector<double>& truth_times,
                            const StreamClockModel& model, Rng& rng);

struct StrapdownState {
  Pose pose;
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
};

/// Midpoint strapdown integration of gyro/accel samples (no gravity term).
StrapdownState integrate_strapdown(const std::vector<ImuRecord>& imu,
                                   const StrapdownState& init);

std::vector<ImuRecord> imu_records(const MessageStream& stream);

}  // namespace trajsync
