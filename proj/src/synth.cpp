#include "trajsync/synth.hpp"

#include <cmath>
#include <stdexcept>

namespace trajsync {

namespace {

double eval_terms(const std::vector<SinusoidTerm>& terms, double t) {
  double v = 0.0;
  for (const auto& term : terms)
    v += term.amplitude * std::sin(2.0 * M_PI * term.frequency_hz * t + term.phase);
  return v;
}

double eval_terms_rate(const std::vector<SinusoidTerm>& terms, double t) {
  double v = 0.0;
  for (const auto& term : terms) {
    const double w = 2.0 * M_PI * term.frequency_hz;
    v += term.amplitude * w * std::cos(w * t + term.phase);
  }
  return v;
}

double eval_terms_accel(const std::vector<SinusoidTerm>& terms, double t) {
  double v = 0.0;
  for (const auto& term : terms) {
    const double w = 2.0 * M_PI * term.frequency_hz;
    v -= term.amplitude * w * w * std::sin(w * t + term.phase);
  }
  return v;
}

Eigen::Vector3d gaussian3(Rng& rng, double sigma) {
  return sigma * Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
}

}  // namespace

ScenarioConfig default_scenario() {
  ScenarioConfig cfg;
  cfg.translation[0] = {{4.0, 0.05, 0.0}, {0.6, 0.31, 1.2}};
  cfg.translation[1] = {{3.0, 0.07, 0.7}, {0.5, 0.23, 0.3}};
  cfg.translation[2] = {{0.4, 0.11, 0.4}};
  cfg.rotation[0] = {{0.08, 0.19, 0.0}, {0.03, 0.83, 1.0}};
  cfg.rotation[1] = {{0.10, 0.13, 0.9}, {0.04, 0.67, 0.2}};
  cfg.rotation[2] = {{0.50, 0.06, 0.0}, {0.12, 0.42, 2.1}};
  return cfg;
}

TruthModel::TruthModel(const ScenarioConfig& cfg)
    : translation_(cfg.translation), rotation_(cfg.rotation) {}

TruthModel generate_truth(const ScenarioConfig& cfg) {
  if (!(cfg.duration > 0.0)) throw std::invalid_argument("duration must be positive");
  return TruthModel(cfg);
}

Eigen::Vector3d TruthModel::position(double t) const {
  return {eval_terms(translation_[0], t), eval_terms(translation_[1], t),
          eval_terms(translation_[2], t)};
}

Eigen::Vector3d TruthModel::velocity_world(double t) const {
  return {eval_terms_rate(translation_[0], t), eval_terms_rate(translation_[1], t),
          eval_terms_rate(translation_[2], t)};
}

Eigen::Vector3d TruthModel::acceleration_world(double t) const {
  return {eval_terms_accel(translation_[0], t), eval_terms_accel(translation_[1], t),
          eval_terms_accel(translation_[2], t)};
}

Eigen::Vector3d TruthModel::rotvec(double t) const {
  return {eval_terms(rotation_[0], t), eval_terms(rotation_[1], t),
          eval_terms(rotation_[2], t)};
}

Eigen::Vector3d TruthModel::rotvec_rate(double t) const {
  return {eval_terms_rate(rotation_[0], t), eval_terms_rate(rotation_[1], t),
          eval_terms_rate(rotation_[2], t)};
}

Rot3 TruthModel::rotation(double t) const { return so3_exp(rotvec(t)); }

Pose TruthModel::pose(double t) const { return {rotation(t), position(t)}; }

Eigen::Vector3d TruthModel::angular_rate_body(double t) const {
  return so3_right_jacobian(rotvec(t)) * rotvec_rate(t);
}

Eigen::Vector3d TruthModel::velocity_body(double t) const {
  return rotation(t).conjugate() * velocity_world(t);
}

Eigen::Vector3d TruthModel::accel_body(double t) const {
  return rotation(t).conjugate() * acceleration_world(t);
}

Trajectory sample_poses(const TruthModel& truth, const ScenarioConfig& cfg) {
  Rng rng(cfg.seed ^ 0x706f7365ull);
  Trajectory out;
  const double dt = 1.0 / cfg.pose_rate;
  for (double t = 0.0; t <= cfg.duration + 1e-12; t += dt) {
    StampedPose sp;
    sp.t = t;
    sp.pose = truth.pose(t);
    if (cfg.position_noise > 0.0) sp.pose.translation += gaussian3(rng, cfg.position_noise);
    if (cfg.rotation_noise > 0.0)
      sp.pose.rotation = so3_exp(gaussian3(rng, cfg.rotation_noise)) * sp.pose.rotation;
    out.push_back(sp);
  }
  return out;
}

MessageStream sample_imu(const TruthModel& truth, const ScenarioConfig& cfg) {
  Rng rng(cfg.seed ^ 0x696d75ull);
  MessageStream out;
  const double dt = 1.0 / cfg.imu_rate;
  const long n = std::lround(cfg.duration * cfg.imu_rate);
  for (long k = 0; k <= n; ++k) {
    const double t = static_cast<double>(k) * dt;
    ImuRecord rec;
    rec.t = t;
    rec.gyro = truth.angular_rate_body(t);
    rec.accel = truth.accel_body(t);
    if (cfg.gyro_noise > 0.0) rec.gyro += gaussian3(rng, cfg.gyro_noise);
    if (cfg.accel_noise > 0.0) rec.accel += gaussian3(rng, cfg.accel_noise);
    out.emplace_back(rec);
  }
  return out;
}

std::vector<RadarScan> sample_radar(const TruthModel& truth, const ScenarioConfig& cfg,
                                    int landmark_count) {
  Rng rng(cfg.seed ^ 0x726164ull);
  std::vector<RadarScan> scans;
  const double dt = 1.0 / cfg.radar_rate;
  for (double t = 0.0; t <= cfg.duration + 1e-12; t += dt) {
    RadarScan scan;
    scan.t = t;
    const Eigen::Vector3d v_body = truth.velocity_body(t);
    // An independently moving object supplies the outlier returns.
    Eigen::Vector3d object_vel(rng.uniform(-8.0, 8.0), rng.uniform(-8.0, 8.0),
                               rng.uniform(-2.0, 2.0));
    for (int k = 0; k < landmark_count; ++k) {
      Eigen::Vector3d dir(rng.normal(), rng.normal(), rng.normal());
      while (dir.norm() < 1e-6) dir = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
      dir.normalize();
      RadarPoint pt;
      pt.position = dir * rng.uniform(5.0, 50.0);
      pt.intensity = rng.uniform(1.0, 30.0);
      const bool outlier = rng.uniform01() < cfg.doppler_outlier_fraction;
      pt.doppler = outlier ? dir.dot(object_vel - v_body) : -dir.dot(v_body);
      if (cfg.doppler_noise > 0.0) pt.doppler += cfg.doppler_noise * rng.normal();
      scan.points.push_back(pt);
    }
    scans.push_back(scan);
  }
  return scans;
}

TimePairSeries sample_clock(const std::vector<double>& truth_times,
                            const StreamClockModel& model, Rng& rng) {
  TimePairSeries pairs;
  pairs.reserve(truth_times.size());
  for (const double t : truth_times) {
    const double jitter = model.jitter_mean > 0.0 ? rng.exponential(model.jitter_mean) : 0.0;
    pairs.push_back({t, t * (1.0 + model.drift) + model.offset + jitter});
  }
  return pairs;
}

StrapdownState integrate_strapdown(const std::vector<ImuRecord>& imu,
                                   const StrapdownState& init) {
  StrapdownState s = init;
  for (size_t k = 0; k + 1 < imu.size(); ++k) {
    const double dt = imu[k + 1].t - imu[k].t;
    const Eigen::Vector3d gyro_mid = 0.5 * (imu[k].gyro + imu[k + 1].gyro);
    const Rot3 next_rot = (s.pose.rotation * so3_exp(Eigen::Vector3d(gyro_mid * dt))).normalized();
    const Eigen::Vector3d accel_world =
        0.5 * (s.pose.rotation * imu[k].accel + next_rot * imu[k + 1].accel);
    s.pose.translation += s.velocity * dt + 0.5 * accel_world * dt * dt;
    s.velocity += accel_world * dt;
    s.pose.rotation = next_rot;
  }
  return s;
}

std::vector<ImuRecord> imu_records(const MessageStream& stream) {
  std::vector<ImuRecord> out;
  for (const Message& m : stream)
    if (const auto* imu = std::get_if<ImuRecord>(&m)) out.push_back(*imu);
  return out;
}

}  // namespace trajsync
