// Acceptance suite: each criterion prints one PASS/FAIL line with its
// measured numbers. Run with no arguments for all criteria or `--only N`
// for a single one. Exit code is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "trajsync/clocksync.hpp"
#include "trajsync/io.hpp"
#include "trajsync/kinematics.hpp"
#include "trajsync/pgo.hpp"
#include "trajsync/reversal.hpp"
#include "trajsync/rng.hpp"
#include "trajsync/synth.hpp"
#include "trajsync/trajops.hpp"
#include "trajsync/xcorr.hpp"

using namespace trajsync;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Eigen::Vector3d random_unit(Rng& rng) {
  Eigen::Vector3d v(rng.normal(), rng.normal(), rng.normal());
  while (v.norm() < 1e-9) v = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
  return v.normalized();
}

// ---------------------------------------------------------------------------
// 1. Sync precision: hull map -> bridge -> correlation recovers injected
//    offsets within 5 ms.
Outcome criterion_sync_precision() {
  Outcome out;
  std::ostringstream detail;
  const double limit = 10.0;
  int idx = 0;
  for (const double injected : {-0.25, 0.05, 0.5}) {
    const auto start = std::chrono::steady_clock::now();
    ScenarioConfig cfg = default_scenario();
    cfg.duration = 60.0;
    cfg.seed = 1000 + idx++;
    cfg.imu_rate = 100.0;
    cfg.pose_rate = 10.0;
    cfg.imu_clock = {0.01 + injected, 5e-6, 0.002};
    cfg.bridge_clock = {0.01, 5e-6, 0.002};
    cfg.gyro_noise = 0.002;
    cfg.position_noise = 0.002;
    cfg.rotation_noise = 0.0005;

    const TruthModel truth = generate_truth(cfg);

    TimedVec3Series gyro;
    for (const ImuRecord& rec : imu_records(sample_imu(truth, cfg))) {
      gyro.stamps.push_back(rec.t);
      gyro.values.push_back(rec.gyro);
    }

    Rng clock_rng(cfg.seed ^ 0xc10cull);
    const TimePairSeries imu_pairs = sample_clock(gyro.stamps, cfg.imu_clock, clock_rng);
    std::vector<double> bridge_times;
    for (double t = 0.0; t <= cfg.duration + 1e-12; t += 1.0 / cfg.pose_rate)
      bridge_times.push_back(t);
    const TimePairSeries bridge_pairs =
        sample_clock(bridge_times, cfg.bridge_clock, clock_rng);

    const ClockMap topic_map = build_hull_map(imu_pairs);
    const ClockMap bridge_hull = build_hull_map(bridge_pairs);
    std::vector<double> smooth_host, gnss;
    for (const TimePair& p : bridge_pairs) {
      gnss.push_back(p.sensor_time);
      smooth_host.push_back(eval_map(bridge_hull, p.sensor_time));
    }
    const ClockMap bridge = build_bridge_map(smooth_host, gnss);

    TimedVec3Series synced = gyro;
    for (size_t i = 0; i < synced.stamps.size(); ++i)
      synced.stamps[i] =
          to_gnss_time(topic_map, bridge, gyro.stamps[i], imu_pairs[i].host_time);

    const TimedVec3Series rates = angular_rate_central_diff(sample_poses(truth, cfg));

    CorrelationConfig ccfg;
    ccfg.window_a = 5;
    const CorrelationResult r = run_correlation(synced, rates, Rot3::Identity(), ccfg);
    const double err = r.t_d - injected;
    const double elapsed = seconds_since(start);
    detail << " " << injected << "s:err=" << err * 1e3 << "ms,rt=" << elapsed << "s";
    if (std::abs(err) >= 5e-3 || elapsed >= limit) out.pass = false;
  }
  out.detail = detail.str();
  return out;
}

// ---------------------------------------------------------------------------
// 2. Rotation refinement: truncated LS within 0.5 deg under 30% outliers,
//    95th percentile over 100 seeded trials.
Outcome criterion_rotation_refinement() {
  Outcome out;
  const auto start = std::chrono::steady_clock::now();
  std::vector<double> errors;
  for (int trial = 0; trial < 100; ++trial) {
    Rng rng(2000 + trial);
    const Rot3 r_true = so3_exp(Eigen::Vector3d(random_unit(rng) * rng.uniform(0.05, 0.44)));
    TimedVec3Series a, b;
    for (int k = 0; k < 400; ++k) {
      const Eigen::Vector3d vb = random_unit(rng) * rng.uniform(0.2, 2.0);
      b.stamps.push_back(0.01 * k);
      b.values.push_back(vb);
      a.stamps.push_back(0.01 * k);
      a.values.push_back(r_true * vb +
                         0.005 * Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal()));
    }
    const size_t n_out = b.size() * 3 / 10;
    for (size_t k = 0; k < n_out; ++k) {
      const size_t i = static_cast<size_t>(rng.uniform01() * b.size());
      b.values[i] = Eigen::Vector3d(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
    }
    const auto [rec, frac] = refine_rotation_tls(a, b, Rot3::Identity(), 0.005, 3.0);
    errors.push_back(rotation_angle_between(rec, r_true) * 180.0 / M_PI);
  }
  std::sort(errors.begin(), errors.end());
  const double p95 = errors[94];
  const double elapsed = seconds_since(start);
  out.pass = p95 < 0.5 && elapsed < 30.0;
  std::ostringstream detail;
  detail << " p95=" << p95 << "deg, rt=" << elapsed << "s";
  out.detail = detail.str();
  return out;
}

// ---------------------------------------------------------------------------
// 3. Reversal soundness: bit-exact involution; backward strapdown reaches the
//    forward start within 1e-3 m over 10 s.
Outcome criterion_reversal() {
  Outcome out;
  const auto start = std::chrono::steady_clock::now();

  // Mixed stream on dyadic stamps so every mapped time is exact.
  MessageStream stream;
  for (int k = 0; k < 512; ++k) {
    const double t = static_cast<double>(k) / 256.0;
    ImuRecord imu;
    imu.t = t;
    imu.gyro = Eigen::Vector3d(0.31 * k, -1.7, 0.01 * k * k);
    imu.accel = Eigen::Vector3d(0.5, 9.0 - 0.001 * k, -0.2);
    stream.emplace_back(imu);
    if (k % 16 == 0) {
      CloudRecord cloud;
      cloud.t = t;
      for (int p = 0; p < 8; ++p) cloud.point_stamps.push_back(t + p / 1024.0);
      cloud.payload = "frame_" + std::to_string(k);
      stream.emplace_back(cloud);
    }
  }
  const ReversedStream once = reverse_stream(stream);
  const ReversedStream twice = reverse_stream(once.stream, once.t_max);
  bool involution = twice.stream.size() == stream.size();
  for (size_t i = 0; involution && i < stream.size(); ++i) {
    if (message_time(twice.stream[i]) != message_time(stream[i])) involution = false;
    if (const auto* imu = std::get_if<ImuRecord>(&stream[i])) {
      const auto& o = std::get<ImuRecord>(twice.stream[i]);
      if (o.gyro != imu->gyro || o.accel != imu->accel) involution = false;
    } else if (const auto* cloud = std::get_if<CloudRecord>(&stream[i])) {
      const auto& o = std::get<CloudRecord>(twice.stream[i]);
      if (o.point_stamps != cloud->point_stamps || o.payload != cloud->payload)
        involution = false;
    }
  }

  ScenarioConfig cfg = default_scenario();
  cfg.duration = 10.0;
  cfg.imu_rate = 512.0;
  const TruthModel truth = generate_truth(cfg);
  const MessageStream imu_stream = sample_imu(truth, cfg);
  const ReversedStream rev = reverse_stream(imu_stream);
  StrapdownState bwd0;
  bwd0.pose = truth.pose(10.0);
  bwd0.velocity = -truth.velocity_world(10.0);
  const StrapdownState bwd_end = integrate_strapdown(imu_records(rev.stream), bwd0);
  const double closure = (bwd_end.pose.translation - truth.position(0.0)).norm();

  const double elapsed = seconds_since(start);
  out.pass = involution && closure < 1e-3 && elapsed < 5.0;
  std::ostringstream detail;
  detail << " involution=" << (involution ? "exact" : "BROKEN") << ", closure=" << closure
         << "m, rt=" << elapsed << "s";
  out.detail = detail.str();
  return out;
}

// ---------------------------------------------------------------------------
// 4. Forward/backward averaging: per-pose symmetry within 1e-12; averaged
//    RMSE at or below the better single pass in >= 95/100 trials.
Outcome criterion_averaging() {
  Outcome out;
  const auto start = std::chrono::steady_clock::now();
  ScenarioConfig cfg = default_scenario();
  cfg.duration = 20.0;
  const TruthModel model = generate_truth(cfg);
  Trajectory truth;
  for (double t = 0.0; t <= 20.0 + 1e-12; t += 0.1) truth.push_back({t, model.pose(t)});

  auto noisy = [&](Rng& rng) {
    Trajectory out_traj = truth;
    for (auto& sp : out_traj) {
      sp.pose.translation += 0.02 * Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
      sp.pose.rotation =
          so3_exp(Eigen::Vector3d(0.002 * Eigen::Vector3d(rng.normal(), rng.normal(),
                                                          rng.normal()))) *
          sp.pose.rotation;
    }
    return out_traj;
  };
  auto rmse = [&](const Trajectory& a) {
    double sum = 0.0;
    for (size_t i = 0; i < a.size(); ++i)
      sum += (a[i].pose.translation - truth[i].pose.translation).squaredNorm();
    return std::sqrt(sum / a.size());
  };

  double worst_dp_gap = 0.0, worst_dr_gap = 0.0;
  int wins = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Rng rng(4000 + trial);
    const Trajectory fwd = noisy(rng);
    const Trajectory bwd = noisy(rng);
    const Trajectory avg = average_trajectories(fwd, bwd, 0.05);
    if (trial == 0) {
      const DeviationStats sf = deviation_stats(fwd, avg, 0.05);
      const DeviationStats sb = deviation_stats(bwd, avg, 0.05);
      for (size_t i = 0; i < sf.per_pose.size(); ++i) {
        worst_dp_gap = std::max(worst_dp_gap, std::abs(sf.per_pose[i].dp - sb.per_pose[i].dp));
        worst_dr_gap = std::max(worst_dr_gap, std::abs(sf.per_pose[i].dr - sb.per_pose[i].dr));
      }
    }
    if (rmse(avg) <= std::min(rmse(fwd), rmse(bwd))) ++wins;
  }
  const double elapsed = seconds_since(start);
  out.pass = worst_dp_gap < 1e-12 && worst_dr_gap < 1e-12 && wins >= 95 && elapsed < 30.0;
  std::ostringstream detail;
  detail << " dp_gap=" << worst_dp_gap << ", dr_gap=" << worst_dr_gap << "deg, wins=" << wins
         << "/100, rt=" << elapsed << "s";
  out.detail = detail.str();
  return out;
}

// ---------------------------------------------------------------------------
// 5. Ego velocity: exact on clean data, within 0.05 m/s under 40% outliers
//    (95th percentile of 100 trials).
Outcome criterion_ego_velocity() {
  Outcome out;
  const auto start = std::chrono::steady_clock::now();

  Rng rng0(5000);
  const Eigen::Vector3d v_clean(5.0, 0.0, 0.0);
  RadarScan clean;
  for (int k = 0; k < 50; ++k) {
    Eigen::Vector3d dir = random_unit(rng0);
    dir.z() = std::abs(dir.z());
    dir.normalize();
    RadarPoint pt;
    pt.position = dir * rng0.uniform(5.0, 50.0);
    pt.doppler = -dir.dot(v_clean);
    clean.points.push_back(pt);
  }
  const double clean_err = (ego_velocity_gnc(clean).velocity - v_clean).norm();

  std::vector<double> errors;
  for (int trial = 0; trial < 100; ++trial) {
    Rng rng(5100 + trial);
    const Eigen::Vector3d v(rng.uniform(-6, 6), rng.uniform(-6, 6), rng.uniform(-1, 1));
    const Eigen::Vector3d obj(rng.uniform(-8, 8), rng.uniform(-8, 8), rng.uniform(-2, 2));
    RadarScan scan;
    for (int k = 0; k < 120; ++k) {
      const Eigen::Vector3d dir = random_unit(rng);
      RadarPoint pt;
      pt.position = dir * rng.uniform(5.0, 50.0);
      pt.doppler = (rng.uniform01() < 0.4 ? dir.dot(obj - v) : -dir.dot(v)) +
                   0.01 * rng.normal();
      scan.points.push_back(pt);
    }
    errors.push_back((ego_velocity_gnc(scan).velocity - v).norm());
  }
  std::sort(errors.begin(), errors.end());
  const double p95 = errors[94];
  const double elapsed = seconds_since(start);
  out.pass = clean_err < 1e-9 && p95 < 0.05 && elapsed < 10.0;
  std::ostringstream detail;
  detail << " clean=" << clean_err << "m/s, p95=" << p95 << "m/s, rt=" << elapsed << "s";
  out.detail = detail.str();
  return out;
}

// ---------------------------------------------------------------------------
// 6. Cascaded PGO: final cost never exceeds full-only-from-raw in 100 seeded
//    trials; accepted costs monotone in every stage.
Outcome criterion_cascaded_pgo() {
  Outcome out;
  const auto start = std::chrono::steady_clock::now();
  const ScenarioConfig scen = default_scenario();
  const TruthModel model = generate_truth(scen);
  const double deg = M_PI / 180.0;

  int wins = 0;
  bool monotone = true;
  double worst_gap = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    Rng rng(6000 + trial);
    const int n = 100;
    std::vector<Pose> truth;
    for (int i = 0; i < n; ++i) truth.push_back(model.pose(0.5 * i));

    PoseGraph g;
    g.nodes.resize(n);
    for (int i = 0; i + 1 < n; ++i) {
      RelPoseEdge e;
      e.i = i;
      e.j = i + 1;
      Pose rel = truth[i].inverse() * truth[i + 1];
      rel.rotation = so3_exp(Eigen::Vector3d(0.5 * deg * rng.normal(), 0.5 * deg * rng.normal(),
                                             0.5 * deg * rng.normal() + 0.4 * deg)) *
                     rel.rotation;
      rel.translation += 0.03 * Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
      e.t_ij = rel;
      g.rel_edges.push_back(e);
    }
    g.nodes[0] = {0.0, truth[0]};
    for (int i = 1; i < n; ++i) {
      g.nodes[i].t = 0.5 * i;
      g.nodes[i].pose = g.nodes[i - 1].pose * g.rel_edges[i - 1].t_ij;
    }
    for (const int i : {0, 1, n - 2, n - 1}) {
      AbsPoseEdge a;
      a.i = i;
      a.t_i = truth[i];
      g.abs_pose_edges.push_back(a);
    }
    g.rel_loss = {RobustLoss::Kind::kCauchy, 0.5};

    CascadeConfig cc;
    cc.max_iters = 60;
    const auto [cascaded, rep] = cascaded_pgo(g, cc);
    const double cascade_cost = graph_cost(cascaded);
    const auto [full_only, full_cost] = optimize_full(g, 60, 1e-9);
    if (cascade_cost <= full_cost + 1e-9 * std::max(1.0, full_cost))
      ++wins;
    else
      worst_gap = std::max(worst_gap, cascade_cost - full_cost);

    for (const StageReport* stage : {&rep.rotation, &rep.translation, &rep.full}) {
      double prev = stage->initial_cost;
      for (const double c : stage->accepted_costs) {
        if (c > prev + 1e-9 * std::max(1.0, prev)) monotone = false;
        prev = c;
      }
    }
  }
  const double elapsed = seconds_since(start);
  out.pass = wins == 100 && monotone && elapsed < 60.0;
  std::ostringstream detail;
  detail << " wins=" << wins << "/100, monotone=" << (monotone ? "yes" : "NO")
         << (worst_gap > 0 ? ", worst_gap=" + std::to_string(worst_gap) : "")
         << ", rt=" << elapsed << "s";
  out.detail = detail.str();
  return out;
}

// ---------------------------------------------------------------------------
// 7. ATE gauge invariance and the sigma*sqrt(3) Monte-Carlo check.
Outcome criterion_ate() {
  Outcome out;
  const auto start = std::chrono::steady_clock::now();
  Rng rng(7000);
  Trajectory ref;
  for (int i = 0; i < 1000; ++i) {
    StampedPose sp;
    sp.t = 0.1 * i;
    sp.pose.translation =
        Eigen::Vector3d(rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-5, 5));
    ref.push_back(sp);
  }
  const Pose rigid(so3_exp(Eigen::Vector3d(0.4, -0.9, 1.2)), Eigen::Vector3d(17, -4, 3));
  Trajectory moved = ref;
  for (auto& sp : moved) sp.pose.translation = rigid * sp.pose.translation;
  const double gauge_rmse = ate_rmse(moved, ref, 0.05, AteAlignment::kRigid).rmse;

  const double sigma = 0.1;
  Trajectory noisy = ref;
  for (auto& sp : noisy)
    sp.pose.translation += sigma * Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
  const double mc_rmse = ate_rmse(noisy, ref, 0.05, AteAlignment::kRigid).rmse;
  const double expect = sigma * std::sqrt(3.0);

  const double elapsed = seconds_since(start);
  out.pass = gauge_rmse < 1e-9 && std::abs(mc_rmse - expect) < 0.1 * expect && elapsed < 5.0;
  std::ostringstream detail;
  detail << " gauge_rmse=" << gauge_rmse << "m, mc_rmse=" << mc_rmse << "m (expect " << expect
         << "), rt=" << elapsed << "s";
  out.detail = detail.str();
  return out;
}

// ---------------------------------------------------------------------------
// 8. Recall@K equals a brute-force enumeration oracle exactly on 1000 random
//    instances with the 9 m / 30 degree thresholds.
Outcome criterion_recall() {
  Outcome out;
  const auto start = std::chrono::steady_clock::now();
  int mismatches = 0;
  int evaluated_instances = 0;

  auto heading_diff = [](double a, double b) {
    double d = std::fmod(std::abs(a - b), 360.0);
    return d > 180.0 ? 360.0 - d : d;
  };

  for (int instance = 0; instance < 1000; ++instance) {
    Rng rng(8000 + instance);
    const int db_n = 25, q_n = 8, dim = 4;
    std::vector<PlaceEntry> db(db_n), queries(q_n);
    auto fill = [&](PlaceEntry& e) {
      e.descriptor = Eigen::VectorXd::NullaryExpr(dim, [&](Eigen::Index) { return rng.normal(); });
      e.position = Eigen::Vector3d(rng.uniform(-30, 30), rng.uniform(-30, 30), 0.0);
      e.heading_deg = rng.uniform(-180.0, 180.0);
    };
    for (auto& e : db) fill(e);
    for (auto& e : queries) fill(e);

    const std::vector<int> k_list{1, 3, 5, db_n};
    PlaceQueryResult got;
    bool threw = false;
    try {
      got = recall_at_k(db, queries, k_list, 9.0, 30.0);
    } catch (const std::runtime_error&) {
      threw = true;  // no evaluable queries in this instance
    }

    // Brute-force oracle, straight from the definition.
    int denom = 0;
    std::map<int, int> hits;
    for (const int k : k_list) hits[k] = 0;
    for (const auto& q : queries) {
      bool has_pos = false;
      for (const auto& e : db)
        if ((q.position - e.position).norm() <= 9.0 &&
            heading_diff(q.heading_deg, e.heading_deg) <= 30.0)
          has_pos = true;
      if (!has_pos) continue;
      ++denom;
      std::vector<std::pair<double, int>> order;
      for (int i = 0; i < db_n; ++i)
        order.emplace_back((db[i].descriptor - q.descriptor).norm(), i);
      std::sort(order.begin(), order.end());
      for (const int k : k_list) {
        bool hit = false;
        for (int r = 0; r < k && !hit; ++r) {
          const auto& e = db[order[r].second];
          hit = (q.position - e.position).norm() <= 9.0 &&
                heading_diff(q.heading_deg, e.heading_deg) <= 30.0;
        }
        if (hit) ++hits[k];
      }
    }
    if (denom == 0) {
      if (!threw) ++mismatches;
      continue;
    }
    ++evaluated_instances;
    if (threw || got.evaluated_queries != denom) {
      ++mismatches;
      continue;
    }
    for (const int k : k_list)
      if (got.recall_at.at(k) != static_cast<double>(hits[k]) / denom) ++mismatches;
  }
  const double elapsed = seconds_since(start);
  out.pass = mismatches == 0 && elapsed < 10.0;
  std::ostringstream detail;
  detail << " instances=" << evaluated_instances << ", mismatches=" << mismatches
         << ", rt=" << elapsed << "s";
  out.detail = detail.str();
  return out;
}

// ---------------------------------------------------------------------------
// 9. Hand-checkable units.
Outcome criterion_hand_checkable() {
  Outcome out;
  const ClockMap hull = build_hull_map({{0, 0.50}, {1, 0.62}, {2, 0.51}, {3, 0.53}});
  const double map_at_1 = eval_map(hull, 1.0);
  const bool hull_ok = hull.x.size() == 3 && std::abs(map_at_1 - 0.505) < 1e-15;

  const double t_d = offset_from_lag(3.0, 0.1, 10.0, 9.9, 5, 1);
  const bool formula_ok = std::abs(t_d - 0.2) < 1e-12;

  MessageStream s;
  ImuRecord a;
  a.t = 30.0;
  s.emplace_back(a);
  ImuRecord b;
  b.t = 100.0;
  s.emplace_back(b);
  const ReversedStream rev = reverse_stream(s);
  const bool reversal_ok = message_time(rev.stream.back()) == 170.0 && rev.t_max == 100.0;

  out.pass = hull_ok && formula_ok && reversal_ok;
  std::ostringstream detail;
  detail << " map(1)=" << map_at_1 << ", t_d=" << t_d
         << ", t'=" << message_time(rev.stream.back());
  out.detail = detail.str();
  return out;
}

struct Criterion {
  int number;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "sync-precision", criterion_sync_precision},
      {2, "rotation-refinement", criterion_rotation_refinement},
      {3, "reversal-soundness", criterion_reversal},
      {4, "forward-backward-averaging", criterion_averaging},
      {5, "ego-velocity", criterion_ego_velocity},
      {6, "cascaded-pgo", criterion_cascaded_pgo},
      {7, "ate-gauge-invariance", criterion_ate},
      {8, "recall-at-k", criterion_recall},
      {9, "hand-checkable-units", criterion_hand_checkable},
  };

  int only = 0;
  for (int i = 1; i + 1 < argc + 1; ++i) {
    if (i + 1 < argc && std::strcmp(argv[i], "--only") == 0) only = std::atoi(argv[i + 1]);
  }

  int failures = 0;
  for (const Criterion& c : criteria) {
    if (only != 0 && c.number != only) continue;
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.detail = std::string(" exception: ") + e.what();
    }
    std::printf("criterion %d %s: %s%s\n", c.number, c.name, outcome.pass ? "PASS" : "FAIL",
                outcome.detail.c_str());
    std::fflush(stdout);
    if (!outcome.pass) ++failures;
  }
  return failures;
}
