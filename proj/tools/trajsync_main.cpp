// Command-line surface for the synchronization and trajectory toolkit.
// Results go to stdout or files; diagnostics to stderr.
// Exit codes: 0 success, 1 usage error, 2 data error.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "trajsync/io.hpp"

namespace {

using namespace trajsync;

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string fixed9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9f", v);
  return buf;
}

struct SyncClockArgs {
  std::string pairs_path;
  std::string hull_out;
  std::string bridge_pairs;
  std::string map_out;
  std::string series_in;
  std::string series_out;
};

int run_sync_clock(const SyncClockArgs& args) {
  const TimePairSeries pairs = read_time_pairs_csv(args.pairs_path);
  const ClockMap hull = build_hull_map(pairs);
  if (!args.hull_out.empty()) write_clock_map_csv(args.hull_out, hull);

  ClockMap bridge;
  bool have_bridge = false;
  if (!args.bridge_pairs.empty()) {
    // Rows `gnss_time,host_time` for the hardware-synced bridge stream: its
    // host stamps are hull-smoothed, then inverted to map host -> GNSS time.
    const TimePairSeries bp = read_time_pairs_csv(args.bridge_pairs);
    const ClockMap bridge_hull = build_hull_map(bp);
    std::vector<double> smooth_host, gnss;
    for (const TimePair& p : bp) {
      gnss.push_back(p.sensor_time);
      smooth_host.push_back(eval_map(bridge_hull, p.sensor_time));
    }
    bridge = build_bridge_map(smooth_host, gnss);
    have_bridge = true;
  }

  if (!args.map_out.empty()) {
    std::ofstream out(args.map_out);
    if (!out) throw std::runtime_error(args.map_out + ": cannot open for writing");
    for (const TimePair& p : pairs) {
      const double smooth = eval_map(hull, p.sensor_time);
      const double mapped = have_bridge ? eval_map(bridge, smooth) : smooth;
      out << format_double(p.sensor_time) << ',' << format_double(mapped) << '\n';
    }
  }
  if (!args.series_in.empty()) {
    if (args.series_out.empty())
      throw CLI::ValidationError("--series", "requires --series-out");
    TimedVec3Series series = read_series_csv(args.series_in);
    for (double& t : series.stamps) {
      const double smooth = eval_map(hull, t);
      t = have_bridge ? eval_map(bridge, smooth) : smooth;
    }
    write_series_csv(args.series_out, series);
  }
  std::cout << "hull_vertices " << hull.x.size() << '\n';
  return 0;
}

struct EstimateOffsetArgs {
  std::string a_path;
  std::string b_path;
  CorrelationConfig cfg;
  std::vector<double> r0{0.0, 0.0, 0.0, 1.0};  // qx qy qz qw
  std::string out;
};

int run_estimate_offset(const EstimateOffsetArgs& args) {
  const TimedVec3Series a = read_series_csv(args.a_path);
  const TimedVec3Series b = read_series_csv(args.b_path);
  const Rot3 r0(args.r0[3], args.r0[0], args.r0[1], args.r0[2]);
  const CorrelationResult result = run_correlation(a, b, r0.normalized(), args.cfg);

  std::ostringstream record;
  record << "t_d " << fixed9(result.t_d) << '\n';
  const Rot3 q = positive_scalar(result.r_ab);
  record << "r_ab_quat_xyzw " << format_double(q.x()) << ' ' << format_double(q.y()) << ' '
         << format_double(q.z()) << ' ' << format_double(q.w()) << '\n';
  record << "per_axis_offsets";
  for (const double off : result.per_axis_offsets) record << ' ' << fixed9(off);
  record << '\n';
  record << "peak_ratio " << format_double(result.peak_ratio) << '\n';
  record << "inlier_fraction " << fixed6(result.inlier_fraction) << '\n';
  record << "axis_offsets_consistent " << (result.axis_offsets_consistent ? 1 : 0) << '\n';

  std::cout << record.str();
  if (!args.out.empty()) {
    std::ofstream out(args.out);
    if (!out) throw std::runtime_error(args.out + ": cannot open for writing");
    out << record.str();
  }
  if (!result.axis_offsets_consistent)
    std::cerr << "warning: inconsistent axis offsets, inspect the correlation manually\n";
  return 0;
}

struct EgoVelocityArgs {
  std::string scans_path;
  std::string out;
  double doppler_sign = 1.0;
  double threshold = 0.1;
  double mu_update = 1.4;
  int max_iters = 100;
};

int run_ego_velocity(const EgoVelocityArgs& args) {
  const std::vector<RadarScan> scans = read_radar_scans_csv(args.scans_path, args.doppler_sign);
  TimedVec3Series series;
  size_t failures = 0;
  for (const RadarScan& scan : scans) {
    try {
      const EgoVelocityResult r =
          ego_velocity_gnc(scan, args.threshold, args.mu_update, args.max_iters);
      series.stamps.push_back(scan.t);
      series.values.push_back(r.velocity);
      if (!r.converged)
        std::cerr << "warning: scan at t=" << format_double(scan.t) << " did not converge\n";
    } catch (const std::exception& e) {
      ++failures;
      std::cerr << "warning: scan at t=" << format_double(scan.t) << " skipped: " << e.what()
                << '\n';
    }
  }
  if (series.stamps.empty()) throw std::runtime_error("no usable radar scans");
  write_series_csv(args.out, series);
  std::cout << "scans " << scans.size() << " estimated " << series.stamps.size() << " skipped "
            << failures << '\n';
  return 0;
}

struct ReverseArgs {
  std::string in_path;
  std::string out_path;
};

int run_reverse_stream(const ReverseArgs& args) {
  const MessageStream stream = read_stream_jsonl(args.in_path);
  const ReversedStream rev = reverse_stream(stream);
  write_stream_jsonl(args.out_path, rev.stream);
  std::cout << "t_max " << format_double(rev.t_max) << '\n';
  return 0;
}

struct AverageArgs {
  std::string fwd_path;
  std::string bwd_path;
  std::string out;
  std::string stats_prefix;
  double tol = 0.0;
};

void print_stats(const std::string& label, const DeviationStats& s) {
  std::cout << label << "  median_dp_m " << fixed6(s.median_dp) << "  max_dp_m "
            << fixed6(s.max_dp) << "  median_dR_deg " << fixed6(s.median_dr) << "  max_dR_deg "
            << fixed6(s.max_dr) << '\n';
}

int run_average_traj(const AverageArgs& args) {
  const Trajectory fwd = read_trajectory(args.fwd_path);
  const Trajectory bwd = read_trajectory(args.bwd_path);
  const double tol = args.tol > 0.0 ? args.tol : default_association_tol(fwd, bwd);
  const Trajectory avg = average_trajectories(fwd, bwd, tol);
  write_trajectory(args.out, avg);

  const DeviationStats sf = deviation_stats(fwd, avg, tol);
  const DeviationStats sb = deviation_stats(bwd, avg, tol);
  DeviationStats pooled;
  pooled.per_pose = sf.per_pose;
  pooled.per_pose.insert(pooled.per_pose.end(), sb.per_pose.begin(), sb.per_pose.end());
  {
    std::vector<double> dps, drs;
    for (const auto& p : pooled.per_pose) {
      dps.push_back(p.dp);
      drs.push_back(p.dr);
    }
    std::sort(dps.begin(), dps.end());
    std::sort(drs.begin(), drs.end());
    const size_t n = dps.size();
    pooled.median_dp = n % 2 ? dps[n / 2] : 0.5 * (dps[n / 2 - 1] + dps[n / 2]);
    pooled.median_dr = n % 2 ? drs[n / 2] : 0.5 * (drs[n / 2 - 1] + drs[n / 2]);
    pooled.max_dp = dps.back();
    pooled.max_dr = drs.back();
  }
  print_stats("forward ", sf);
  print_stats("backward", sb);
  print_stats("pooled  ", pooled);
  if (!args.stats_prefix.empty()) {
    write_deviation_stats_csv(args.stats_prefix + "_forward.csv", sf);
    write_deviation_stats_csv(args.stats_prefix + "_backward.csv", sb);
  }
  return 0;
}

struct PgoArgs {
  std::string graph_path;
  std::string out;
  std::string stages = "rot,trans,full";
  double cauchy_scale = 0.0;
  bool estimate_frame = false;
  int max_iters = 50;
  double tol = 1e-9;
};

int run_pgo(const PgoArgs& args) {
  PoseGraph graph = read_graph_jsonl(args.graph_path);
  if (args.cauchy_scale > 0.0) {
    graph.rel_loss = {RobustLoss::Kind::kCauchy, args.cauchy_scale};
    graph.abs_pos_loss = {RobustLoss::Kind::kCauchy, args.cauchy_scale};
  }
  if (args.estimate_frame) graph.estimate_frame_transform = true;

  CascadeConfig cfg;
  cfg.run_rotation = args.stages.find("rot") != std::string::npos;
  cfg.run_translation = args.stages.find("trans") != std::string::npos;
  cfg.run_full = args.stages.find("full") != std::string::npos;
  if (!cfg.run_rotation && !cfg.run_translation && !cfg.run_full)
    throw CLI::ValidationError("--stages", "expected a subset of rot,trans,full");
  cfg.max_iters = args.max_iters;
  cfg.tol = args.tol;

  const auto [out, report] = cascaded_pgo(graph, cfg);
  Trajectory traj;
  for (const auto& n : out.nodes) traj.push_back(n);
  write_trajectory(args.out, traj);

  auto stage_line = [](const char* name, const StageReport& r) {
    std::cout << "stage " << name << " iterations " << r.iterations << " initial_cost "
              << format_double(r.initial_cost) << " final_cost " << format_double(r.final_cost)
              << (r.converged ? "" : " (failed to converge)") << '\n';
  };
  if (cfg.run_rotation) stage_line("rot", report.rotation);
  if (cfg.run_translation) stage_line("trans", report.translation);
  if (cfg.run_full) stage_line("full", report.full);
  if ((cfg.run_rotation && report.rotation.fixed_gauge_node0) ||
      (cfg.run_translation && report.translation.fixed_gauge_node0) ||
      (cfg.run_full && report.full.fixed_gauge_node0))
    std::cerr << "note: no absolute constraints, node 0 held fixed\n";
  if (out.estimate_frame_transform) {
    const Rot3 q = positive_scalar(out.frame_transform.rotation);
    std::cout << "frame_transform " << format_double(out.frame_transform.translation.x()) << ' '
              << format_double(out.frame_transform.translation.y()) << ' '
              << format_double(out.frame_transform.translation.z()) << ' '
              << format_double(q.x()) << ' ' << format_double(q.y()) << ' '
              << format_double(q.z()) << ' ' << format_double(q.w()) << '\n';
  }
  return 0;
}

struct AteArgs {
  std::string ref_path;
  std::string est_path;
  std::string align = "rigid";
  double tol = 0.0;
};

int run_eval_ate(const AteArgs& args) {
  const Trajectory ref = read_trajectory(args.ref_path);
  const Trajectory est = read_trajectory(args.est_path);
  const double tol = args.tol > 0.0 ? args.tol : default_association_tol(est, ref);
  const AteAlignment align =
      args.align == "none" ? AteAlignment::kNone : AteAlignment::kRigid;
  const AteResult r = ate_rmse(est, ref, tol, align);
  if (r.weak_alignment) std::cerr << "warning: weak alignment (near-collinear trajectory)\n";
  std::cout << fixed6(r.rmse) << '\n';
  return 0;
}

struct RecallArgs {
  std::string db_path;
  std::string queries_path;
  std::vector<int> k_list{1, 5, 10};
  bool one_percent = false;
  double pos_threshold = 9.0;
  double heading_threshold = 30.0;
};

int run_eval_recall(const RecallArgs& args) {
  const auto db = read_places_csv(args.db_path);
  const auto queries = read_places_csv(args.queries_path);
  std::vector<int> k_list = args.k_list;
  int k1p = 0;
  if (args.one_percent) {
    k1p = one_percent_k(db.size());
    k_list.push_back(k1p);
  }
  const PlaceQueryResult r =
      recall_at_k(db, queries, k_list, args.pos_threshold, args.heading_threshold);
  for (const int k : args.k_list) std::cout << "r@" << k << ' ' << fixed6(r.recall_at.at(k)) << '\n';
  if (args.one_percent)
    std::cout << "r@1% " << fixed6(r.recall_at.at(k1p)) << " (K=" << k1p << ")\n";
  std::cout << "evaluated_queries " << r.evaluated_queries << '\n';
  return 0;
}

struct SynthArgs {
  std::string scenario_path;
  std::string out_dir;
  uint64_t seed = 0;
  bool seed_set = false;
};

int run_synth(const SynthArgs& args) {
  ScenarioConfig cfg =
      args.scenario_path.empty() ? default_scenario() : read_scenario_json(args.scenario_path);
  if (args.seed_set) cfg.seed = args.seed;
  std::filesystem::create_directories(args.out_dir);
  const auto file = [&](const char* name) {
    return (std::filesystem::path(args.out_dir) / name).string();
  };

  const TruthModel truth = generate_truth(cfg);

  ScenarioConfig clean = cfg;
  clean.position_noise = clean.rotation_noise = 0.0;
  write_trajectory(file("truth.txt"), sample_poses(truth, clean));
  write_trajectory(file("poses.txt"), sample_poses(truth, cfg));

  const MessageStream imu = sample_imu(truth, cfg);
  write_stream_jsonl(file("imu.jsonl"), imu);

  TimedVec3Series gyro;
  std::vector<double> imu_times;
  for (const ImuRecord& rec : imu_records(imu)) {
    gyro.stamps.push_back(rec.t);
    gyro.values.push_back(rec.gyro);
    imu_times.push_back(rec.t);
  }
  write_series_csv(file("gyro.csv"), gyro);
  write_series_csv(file("rates.csv"),
                   angular_rate_central_diff(sample_poses(truth, cfg)));

  Rng clock_rng(cfg.seed ^ 0x636c6bull);
  write_time_pairs_csv(file("imu_pairs.csv"),
                       sample_clock(imu_times, cfg.imu_clock, clock_rng));
  std::vector<double> bridge_times;
  for (double t = 0.0; t <= cfg.duration + 1e-12; t += 1.0 / cfg.pose_rate)
    bridge_times.push_back(t);
  write_time_pairs_csv(file("bridge_pairs.csv"),
                       sample_clock(bridge_times, cfg.bridge_clock, clock_rng));

  write_radar_scans_csv(file("radar.csv"), sample_radar(truth, cfg, cfg.radar_landmarks));
  write_scenario_json(file("scenario.json"), cfg);

  std::cout << "wrote truth.txt poses.txt imu.jsonl gyro.csv rates.csv imu_pairs.csv "
               "bridge_pairs.csv radar.csv scenario.json to "
            << args.out_dir << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-sensor time synchronization and reference-trajectory toolkit"};
  app.require_subcommand(1);
  app.set_config("--config");

  SyncClockArgs sync_args;
  auto* sync = app.add_subcommand("sync-clock",
                                  "Build a lower-convex-hull clock map from time pairs");
  sync->add_option("pairs", sync_args.pairs_path, "CSV rows sensor_time,host_time")->required();
  sync->add_option("--hull-out", sync_args.hull_out, "Write hull vertices CSV here");
  sync->add_option("--bridge-pairs", sync_args.bridge_pairs,
                   "CSV rows gnss_time,host_time of the hardware-synced bridge stream");
  sync->add_option("--map-out", sync_args.map_out,
                   "Write sensor_time,mapped_time CSV (GNSS time if a bridge is given)");
  sync->add_option("--series", sync_args.series_in, "Series CSV whose stamps should be mapped");
  sync->add_option("--series-out", sync_args.series_out, "Restamped series output");

  EstimateOffsetArgs off_args;
  auto* off = app.add_subcommand("estimate-offset",
                                 "Estimate time offset and relative rotation of two 3D signals");
  off->add_option("a", off_args.a_path, "Series A CSV t,x,y,z")->required();
  off->add_option("b", off_args.b_path, "Series B CSV t,x,y,z")->required();
  off->add_option("--ma", off_args.cfg.window_a, "Smoothing window for A (odd)");
  off->add_option("--mb", off_args.cfg.window_b, "Smoothing window for B (odd)");
  off->add_option("--tau", off_args.cfg.tau, "Association tolerance (default dt/2)");
  off->add_option("--buffer", off_args.cfg.buffer, "Overlap buffer in seconds");
  off->add_flag("--mask-first-peak", off_args.cfg.mask_first_peak,
                "Exclude the dominant correlation lobe and use the next peak");
  off->add_option("--tls-scale", off_args.cfg.tls_threshold_scale,
                  "Residual truncation at scale * median");
  off->add_option("--r0", off_args.r0, "Initial rotation guess qx qy qz qw")->expected(4);
  off->add_option("--out", off_args.out, "Also write the result record to this file");

  EgoVelocityArgs ego_args;
  auto* ego = app.add_subcommand("ego-velocity",
                                 "Doppler ego-velocity per radar scan (GNC truncated LS)");
  ego->add_option("scans", ego_args.scans_path, "CSV rows t,x,y,z,doppler,intensity")->required();
  ego->add_option("--out", ego_args.out, "Output series CSV")->required();
  ego->add_option("--doppler-sign", ego_args.doppler_sign, "+1 or -1 dataset convention");
  ego->add_option("--threshold", ego_args.threshold, "Inlier threshold in m/s");
  ego->add_option("--mu-update", ego_args.mu_update, "GNC control-parameter growth factor");
  ego->add_option("--max-iters", ego_args.max_iters, "Maximum GNC iterations");

  ReverseArgs rev_args;
  auto* rev = app.add_subcommand("reverse-stream", "Time-invert a message stream");
  rev->add_option("input", rev_args.in_path, "Input JSONL stream")->required();
  rev->add_option("--out", rev_args.out_path, "Output JSONL stream")->required();

  AverageArgs avg_args;
  auto* avg = app.add_subcommand("average-traj",
                                 "Average forward/backward passes and report deviations");
  avg->add_option("forward", avg_args.fwd_path, "Forward trajectory")->required();
  avg->add_option("backward", avg_args.bwd_path, "Backward trajectory (times restored)")
      ->required();
  avg->add_option("--out", avg_args.out, "Averaged trajectory output")->required();
  avg->add_option("--tol", avg_args.tol, "Association tolerance (default: half median gap)");
  avg->add_option("--stats-out", avg_args.stats_prefix, "Per-pose deviation CSV prefix");

  PgoArgs pgo_args;
  auto* pgo_cmd = app.add_subcommand("pgo", "Cascaded pose graph optimization");
  pgo_cmd->add_option("graph", pgo_args.graph_path, "Graph JSONL")->required();
  pgo_cmd->add_option("--out", pgo_args.out, "Optimized trajectory output")->required();
  pgo_cmd->add_option("--stages", pgo_args.stages, "Comma subset of rot,trans,full");
  pgo_cmd->add_option("--cauchy-scale", pgo_args.cauchy_scale,
                      "Cauchy loss scale for relative odometry and absolute positions");
  pgo_cmd->add_flag("--estimate-frame-transform", pgo_args.estimate_frame,
                    "Treat the absolute-position frame transform as a variable");
  pgo_cmd->add_option("--max-iters", pgo_args.max_iters, "Iterations per stage");
  pgo_cmd->add_option("--tol", pgo_args.tol, "Relative cost-change tolerance");

  AteArgs ate_args;
  auto* ate = app.add_subcommand("eval-ate", "Absolute trajectory error RMSE");
  ate->add_option("reference", ate_args.ref_path, "Reference trajectory")->required();
  ate->add_option("estimate", ate_args.est_path, "Estimated trajectory")->required();
  ate->add_option("--align", ate_args.align, "rigid or none")
      ->check(CLI::IsMember({"rigid", "none"}));
  ate->add_option("--tol", ate_args.tol, "Association tolerance");

  RecallArgs rec_args;
  auto* rec = app.add_subcommand("eval-recall", "Place-recognition recall at K");
  rec->add_option("database", rec_args.db_path, "Database places CSV")->required();
  rec->add_option("queries", rec_args.queries_path, "Query places CSV")->required();
  rec->add_option("--k", rec_args.k_list, "K values")->delimiter(',');
  rec->add_flag("--k-one-percent", rec_args.one_percent, "Also report K = 1% of database");
  rec->add_option("--pos-threshold", rec_args.pos_threshold, "Positive distance gate, meters");
  rec->add_option("--heading-threshold", rec_args.heading_threshold,
                  "Positive heading gate, degrees");

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic scenario directory");
  synth->add_option("scenario", synth_args.scenario_path,
                    "Scenario JSON (omit for the default scenario)");
  synth->add_option("--out", synth_args.out_dir, "Output directory")->required();
  auto* seed_opt = synth->add_option("--seed", synth_args.seed, "Override the scenario seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << '\n' << app.help();
    return 1;
  }

  synth_args.seed_set = seed_opt->count() > 0;

  try {
    if (sync->parsed()) return run_sync_clock(sync_args);
    if (off->parsed()) return run_estimate_offset(off_args);
    if (ego->parsed()) return run_ego_velocity(ego_args);
    if (rev->parsed()) return run_reverse_stream(rev_args);
    if (avg->parsed()) return run_average_traj(avg_args);
    if (pgo_cmd->parsed()) return run_pgo(pgo_args);
    if (ate->parsed()) return run_eval_ate(ate_args);
    if (rec->parsed()) return run_eval_recall(rec_args);
    if (synth->parsed()) return run_synth(synth_args);
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
