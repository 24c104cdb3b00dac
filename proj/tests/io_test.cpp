#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "trajsync/io.hpp"

using namespace trajsync;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("trajsync_io_test_" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

}  // namespace

TEST_CASE("trajectory round trip is bit-exact") {
  TempDir dir;
  ScenarioConfig cfg = default_scenario();
  cfg.duration = 3.0;
  cfg.position_noise = 0.1;
  cfg.rotation_noise = 0.05;
  cfg.seed = 99;
  const Trajectory traj = sample_poses(generate_truth(cfg), cfg);

  const std::string path = dir.file("traj.txt");
  write_trajectory(path, traj);
  const Trajectory back = read_trajectory(path);
  REQUIRE(back.size() == traj.size());
  for (size_t i = 0; i < traj.size(); ++i) {
    CHECK(back[i].t == traj[i].t);
    CHECK(back[i].pose.translation == traj[i].pose.translation);
    CHECK(back[i].pose.rotation.coeffs() == traj[i].pose.rotation.coeffs());
  }
}

TEST_CASE("series and time-pair round trips") {
  TempDir dir;
  TimedVec3Series s;
  for (int i = 0; i < 50; ++i) {
    s.stamps.push_back(0.097 * i + 1e-9 * i * i);
    s.values.push_back(Eigen::Vector3d(std::sin(i * 0.7), 1.0 / (i + 1), -i * 1e-7));
  }
  write_series_csv(dir.file("s.csv"), s);
  const TimedVec3Series back = read_series_csv(dir.file("s.csv"));
  REQUIRE(back.size() == s.size());
  for (size_t i = 0; i < s.size(); ++i) {
    CHECK(back.stamps[i] == s.stamps[i]);
    CHECK(back.values[i] == s.values[i]);
  }

  TimePairSeries pairs;
  for (int i = 0; i < 20; ++i) pairs.push_back({i * 0.1, i * 0.1 + 0.503 + 1e-10 * i});
  write_time_pairs_csv(dir.file("p.csv"), pairs);
  const TimePairSeries pback = read_time_pairs_csv(dir.file("p.csv"));
  REQUIRE(pback.size() == pairs.size());
  for (size_t i = 0; i < pairs.size(); ++i) {
    CHECK(pback[i].sensor_time == pairs[i].sensor_time);
    CHECK(pback[i].host_time == pairs[i].host_time);
  }
}

TEST_CASE("radar scan grouping and doppler sign flag") {
  TempDir dir;
  std::vector<RadarScan> scans(2);
  scans[0].t = 0.5;
  scans[1].t = 0.6;
  for (int k = 0; k < 4; ++k) {
    RadarPoint pt;
    pt.position = Eigen::Vector3d(10 + k, -k, 1);
    pt.doppler = -2.0 + 0.1 * k;
    pt.intensity = k;
    scans[k / 2].points.push_back(pt);
  }
  write_radar_scans_csv(dir.file("r.csv"), scans);
  const auto back = read_radar_scans_csv(dir.file("r.csv"));
  REQUIRE(back.size() == 2);
  CHECK(back[0].points.size() == 2);
  CHECK(back[1].points.size() == 2);
  CHECK(back[0].points[0].doppler == scans[0].points[0].doppler);

  const auto flipped = read_radar_scans_csv(dir.file("r.csv"), -1.0);
  CHECK(flipped[0].points[0].doppler == -scans[0].points[0].doppler);
}

TEST_CASE("stream jsonl round trip") {
  TempDir dir;
  MessageStream stream;
  ImuRecord imu;
  imu.t = 0.1;
  imu.gyro = Eigen::Vector3d(0.1, -0.2, 0.3);
  imu.accel = Eigen::Vector3d(9.81, 0, 1e-17);
  stream.emplace_back(imu);
  CloudRecord cloud;
  cloud.t = 0.2;
  cloud.point_stamps = {0.19, 0.2, 0.21};
  cloud.payload = "points_0001.bin";
  stream.emplace_back(cloud);
  PoseRecord pose;
  pose.t = 0.3;
  pose.pose.translation = Eigen::Vector3d(1, 2, 3);
  pose.pose.rotation = so3_exp(Eigen::Vector3d(0.1, 0.2, 0.3));
  stream.emplace_back(pose);

  write_stream_jsonl(dir.file("s.jsonl"), stream);
  const MessageStream back = read_stream_jsonl(dir.file("s.jsonl"));
  REQUIRE(back.size() == 3);
  const auto& imu2 = std::get<ImuRecord>(back[0]);
  CHECK(imu2.t == imu.t);
  CHECK(imu2.gyro == imu.gyro);
  CHECK(imu2.accel == imu.accel);
  const auto& cloud2 = std::get<CloudRecord>(back[1]);
  CHECK(cloud2.point_stamps == cloud.point_stamps);
  CHECK(cloud2.payload == cloud.payload);
  const auto& pose2 = std::get<PoseRecord>(back[2]);
  CHECK(pose2.pose.rotation.coeffs() == pose.pose.rotation.coeffs());
}

TEST_CASE("graph jsonl round trip") {
  TempDir dir;
  PoseGraph g;
  g.nodes.push_back({0.0, Pose{so3_exp(Eigen::Vector3d(0, 0, 0.3)), {1, 2, 3}}});
  g.nodes.push_back({1.0, Pose{}});
  RelPoseEdge rel;
  rel.i = 0;
  rel.j = 1;
  rel.t_ij.translation = Eigen::Vector3d(0.5, 0, 0);
  rel.info.diagonal() << 1, 2, 3, 4, 5, 6;
  g.rel_edges.push_back(rel);
  AbsPoseEdge abs_pose;
  abs_pose.i = 0;
  g.abs_pose_edges.push_back(abs_pose);
  AbsPosEdge abs_pos;
  abs_pos.i = 1;
  abs_pos.p_i = Eigen::Vector3d(7, 8, 9);
  g.abs_pos_edges.push_back(abs_pos);
  g.frame_transform.translation = Eigen::Vector3d(100, 0, 0);
  g.estimate_frame_transform = true;

  write_graph_jsonl(dir.file("g.jsonl"), g);
  const PoseGraph back = read_graph_jsonl(dir.file("g.jsonl"));
  REQUIRE(back.nodes.size() == 2);
  REQUIRE(back.rel_edges.size() == 1);
  CHECK(back.rel_edges[0].t_ij.translation == rel.t_ij.translation);
  CHECK(back.rel_edges[0].info == rel.info);
  CHECK(back.abs_pos_edges[0].p_i == abs_pos.p_i);
  CHECK(back.estimate_frame_transform);
  CHECK(back.frame_transform.translation == g.frame_transform.translation);
}

TEST_CASE("places round trip") {
  TempDir dir;
  std::vector<PlaceEntry> entries(3);
  for (int i = 0; i < 3; ++i) {
    entries[i].descriptor = Eigen::VectorXd::LinSpaced(6, 0.0, i + 0.123456789012345);
    entries[i].position = Eigen::Vector3d(i, -i, 0.5 * i);
    entries[i].heading_deg = 120.0 * i - 180.0;
  }
  write_places_csv(dir.file("db.csv"), entries);
  const auto back = read_places_csv(dir.file("db.csv"));
  REQUIRE(back.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(back[i].descriptor == entries[i].descriptor);
    CHECK(back[i].position == entries[i].position);
    CHECK(back[i].heading_deg == entries[i].heading_deg);
  }
}

TEST_CASE("empty files give empty containers") {
  TempDir dir;
  write_text(dir.file("empty.txt"), "");
  CHECK(read_trajectory(dir.file("empty.txt")).empty());
  write_text(dir.file("empty.csv"), "");
  CHECK(read_series_csv(dir.file("empty.csv")).empty());
  CHECK(read_stream_jsonl(dir.file("empty.csv")).empty());
}

TEST_CASE("CRLF and comments are accepted") {
  TempDir dir;
  write_text(dir.file("crlf.csv"), "# comment\r\n1.0,2.0,3.0,4.0\r\n5.0,6.0,7.0,8.0\r\n");
  const TimedVec3Series s = read_series_csv(dir.file("crlf.csv"));
  REQUIRE(s.size() == 2);
  CHECK(s.stamps[1] == 5.0);
}

TEST_CASE("malformed input errors carry line and column") {
  TempDir dir;
  write_text(dir.file("bad.csv"), "1.0,2.0,3.0,4.0\n2.0,oops,3.0,4.0\n");
  try {
    read_series_csv(dir.file("bad.csv"));
    FAIL("expected throw");
  } catch (const std::runtime_error& e) {
    const std::string what = e.what();
    CHECK(what.find("line 2") != std::string::npos);
    CHECK(what.find("column 5") != std::string::npos);
    CHECK(what.find("malformed number") != std::string::npos);
  }

  write_text(dir.file("short.csv"), "1.0,2.0,3.0,4.0\n2.0,3.0\n");
  try {
    read_series_csv(dir.file("short.csv"));
    FAIL("expected throw");
  } catch (const std::runtime_error& e) {
    const std::string what = e.what();
    CHECK(what.find("schema mismatch") != std::string::npos);
    CHECK(what.find("line 2") != std::string::npos);
  }
}

TEST_CASE("scenario json round trip") {
  TempDir dir;
  ScenarioConfig cfg = default_scenario();
  cfg.duration = 12.5;
  cfg.seed = 4242;
  cfg.imu_clock = {0.26, 5e-6, 0.002};
  cfg.bridge_clock = {0.01, 5e-6, 0.002};
  cfg.gyro_noise = 0.003;
  cfg.doppler_outlier_fraction = 0.4;
  write_scenario_json(dir.file("scenario.json"), cfg);
  const ScenarioConfig back = read_scenario_json(dir.file("scenario.json"));
  CHECK(back.duration == cfg.duration);
  CHECK(back.seed == cfg.seed);
  CHECK(back.imu_clock.offset == cfg.imu_clock.offset);
  CHECK(back.imu_clock.jitter_mean == cfg.imu_clock.jitter_mean);
  CHECK(back.gyro_noise == cfg.gyro_noise);
  CHECK(back.doppler_outlier_fraction == cfg.doppler_outlier_fraction);
  REQUIRE(back.translation[0].size() == cfg.translation[0].size());
  CHECK(back.translation[0][0].amplitude == cfg.translation[0][0].amplitude);
  CHECK(back.rotation[2][1].frequency_hz == cfg.rotation[2][1].frequency_hz);
}

TEST_CASE("format_double uses a dot decimal separator") {
  CHECK(format_double(0.5).find('.') != std::string::npos);
  CHECK(format_double(0.5).find(',') == std::string::npos);
}
