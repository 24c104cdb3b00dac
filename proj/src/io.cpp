#include "trajsync/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <functional>
#include <string_view>

#include <json.hpp>

namespace trajsync {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, size_t line, const std::string& what) {
  throw std::runtime_error(path + ": line " + std::to_string(line) + ": " + what);
}

[[noreturn]] void fail_at(const std::string& path, size_t line, size_t column,
                          const std::string& what) {
  throw std::runtime_error(path + ": line " + std::to_string(line) + ", column " +
                           std::to_string(column) + ": " + what);
}

struct Token {
  std::string_view text;
  size_t column;  // 1-based
};

std::vector<Token> split_line(std::string_view line, char delim) {
  std::vector<Token> tokens;
  size_t pos = 0;
  if (delim == ' ') {
    while (pos < line.size()) {
      while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
      if (pos >= line.size()) break;
      const size_t start = pos;
      while (pos < line.size() && line[pos] != ' ' && line[pos] != '\t') ++pos;
      tokens.push_back({line.substr(start, pos - start), start + 1});
    }
  } else {
    while (true) {
      const size_t next = line.find(delim, pos);
      tokens.push_back({line.substr(pos, next == std::string_view::npos ? next : next - pos),
                        pos + 1});
      if (next == std::string_view::npos) break;
      pos = next + 1;
    }
  }
  return tokens;
}

double parse_double(const std::string& path, size_t line, const Token& tok) {
  double value = 0.0;
  const char* begin = tok.text.data();
  const char* end = begin + tok.text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) fail_at(path, line, tok.column, "malformed number");
  return value;
}

// Calls on_row for every data line; rows must have exactly n_fields tokens.
void for_each_row(const std::string& path, char delim, size_t n_fields,
                  const std::function<void(const std::vector<double>&)>& on_row) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open");
  std::string line;
  size_t line_no = 0;
  std::vector<double> row;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::vector<Token> tokens = split_line(line, delim);
    if (tokens.size() != n_fields) fail(path, line_no, "schema mismatch");
    row.clear();
    for (const Token& tok : tokens) row.push_back(parse_double(path, line_no, tok));
    on_row(row);
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  return out;
}

json vec3_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

json quat_json(const Rot3& q) { return json::array({q.x(), q.y(), q.z(), q.w()}); }

Eigen::Vector3d vec3_from(const json& j, const std::string& path, size_t line) {
  if (!j.is_array() || j.size() != 3) fail(path, line, "schema mismatch");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Rot3 quat_from(const json& j, const std::string& path, size_t line) {
  if (!j.is_array() || j.size() != 4) fail(path, line, "schema mismatch");
  return Rot3(j[3].get<double>(), j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

template <int N>
Eigen::Matrix<double, N, N> info_from(const json& j, const std::string& path, size_t line) {
  if (!j.is_array() || j.size() != N * N) fail(path, line, "schema mismatch");
  Eigen::Matrix<double, N, N> m;
  for (int r = 0; r < N; ++r)
    for (int c = 0; c < N; ++c) m(r, c) = j[r * N + c].template get<double>();
  return m;
}

template <int N>
json info_json(const Eigen::Matrix<double, N, N>& m) {
  json arr = json::array();
  for (int r = 0; r < N; ++r)
    for (int c = 0; c < N; ++c) arr.push_back(m(r, c));
  return arr;
}

// Runs fn over the parsed json of each non-empty line.
void for_each_json_line(const std::string& path,
                        const std::function<void(const json&, size_t)>& fn) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open");
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      fail_at(path, line_no, e.byte, "malformed record");
    }
    fn(j, line_no);
  }
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v,
                                       std::chars_format::general, 17);
  return std::string(buf, ptr);
}

Trajectory read_trajectory(const std::string& path) {
  Trajectory traj;
  for_each_row(path, ' ', 8, [&](const std::vector<double>& f) {
    StampedPose p;
    p.t = f[0];
    p.pose.translation = {f[1], f[2], f[3]};
    p.pose.rotation = Rot3(f[7], f[4], f[5], f[6]);
    traj.push_back(p);
  });
  return traj;
}

void write_trajectory(const std::string& path, const Trajectory& traj) {
  std::ofstream out = open_out(path);
  for (const StampedPose& p : traj) {
    const Rot3& q = p.pose.rotation;
    out << format_double(p.t) << ' ' << format_double(p.pose.translation.x()) << ' '
        << format_double(p.pose.translation.y()) << ' '
        << format_double(p.pose.translation.z()) << ' ' << format_double(q.x()) << ' '
        << format_double(q.y()) << ' ' << format_double(q.z()) << ' ' << format_double(q.w())
        << '\n';
  }
}

TimedVec3Series read_series_csv(const std::string& path) {
  TimedVec3Series s;
  for_each_row(path, ',', 4, [&](const std::vector<double>& f) {
    s.stamps.push_back(f[0]);
    s.values.push_back({f[1], f[2], f[3]});
  });
  return s;
}

void write_series_csv(const std::string& path, const TimedVec3Series& series) {
  std::ofstream out = open_out(path);
  for (size_t i = 0; i < series.size(); ++i) {
    const Eigen::Vector3d& v = series.values[i];
    out << format_double(series.stamps[i]) << ',' << format_double(v.x()) << ','
        << format_double(v.y()) << ',' << format_double(v.z()) << '\n';
  }
}

TimePairSeries read_time_pairs_csv(const std::string& path) {
  TimePairSeries pairs;
  for_each_row(path, ',', 2, [&](const std::vector<double>& f) {
    pairs.push_back({f[0], f[1]});
  });
  return pairs;
}

void write_time_pairs_csv(const std::string& path, const TimePairSeries& pairs) {
  std::ofstream out = open_out(path);
  for (const TimePair& p : pairs)
    out << format_double(p.sensor_time) << ',' << format_double(p.host_time) << '\n';
}

void write_clock_map_csv(const std::string& path, const ClockMap& map) {
  std::ofstream out = open_out(path);
  for (size_t i = 0; i < map.x.size(); ++i)
    out << format_double(map.x[i]) << ',' << format_double(map.y[i]) << '\n';
}

ClockMap read_clock_map_csv(const std::string& path) {
  const TimePairSeries vertices = read_time_pairs_csv(path);
  if (vertices.size() < 2) throw std::runtime_error(path + ": insufficient pairs");
  ClockMap m;
  for (const TimePair& p : vertices) {
    if (!m.x.empty() && p.sensor_time <= m.x.back())
      throw std::runtime_error(path + ": non-monotone sensor clock");
    m.x.push_back(p.sensor_time);
    m.y.push_back(p.host_time);
  }
  m.slope_front = (m.y[1] - m.y[0]) / (m.x[1] - m.x[0]);
  const size_t n = m.x.size();
  m.slope_back = (m.y[n - 1] - m.y[n - 2]) / (m.x[n - 1] - m.x[n - 2]);
  return m;
}

std::vector<RadarScan> read_radar_scans_csv(const std::string& path, double doppler_sign) {
  std::vector<RadarScan> scans;
  for_each_row(path, ',', 6, [&](const std::vector<double>& f) {
    if (scans.empty() || scans.back().t != f[0]) {
      scans.emplace_back();
      scans.back().t = f[0];
    }
    RadarPoint pt;
    pt.position = {f[1], f[2], f[3]};
    pt.doppler = doppler_sign * f[4];
    pt.intensity = f[5];
    scans.back().points.push_back(pt);
  });
  return scans;
}

void write_radar_scans_csv(const std::string& path, const std::vector<RadarScan>& scans) {
  std::ofstream out = open_out(path);
  for (const RadarScan& scan : scans)
    for (const RadarPoint& pt : scan.points)
      out << format_double(scan.t) << ',' << format_double(pt.position.x()) << ','
          << format_double(pt.position.y()) << ',' << format_double(pt.position.z()) << ','
          << format_double(pt.doppler) << ',' << format_double(pt.intensity) << '\n';
}

MessageStream read_stream_jsonl(const std::string& path) {
  MessageStream stream;
  for_each_json_line(path, [&](const json& j, size_t line) {
    const std::string kind = j.value("kind", "");
    if (kind == "imu") {
      ImuRecord rec;
      rec.t = j.at("t").get<double>();
      rec.gyro = vec3_from(j.at("gyro"), path, line);
      rec.accel = vec3_from(j.at("accel"), path, line);
      stream.emplace_back(rec);
    } else if (kind == "cloud") {
      CloudRecord rec;
      rec.t = j.at("t").get<double>();
      for (const auto& s : j.at("point_stamps")) rec.point_stamps.push_back(s.get<double>());
      rec.payload = j.value("payload", "");
      stream.emplace_back(rec);
    } else if (kind == "pose") {
      PoseRecord rec;
      rec.t = j.at("t").get<double>();
      rec.pose.translation = vec3_from(j.at("p"), path, line);
      rec.pose.rotation = quat_from(j.at("q"), path, line);
      stream.emplace_back(rec);
    } else {
      fail(path, line, "schema mismatch");
    }
  });
  return stream;
}

void write_stream_jsonl(const std::string& path, const MessageStream& stream) {
  std::ofstream out = open_out(path);
  for (const Message& m : stream) {
    json j;
    if (const auto* imu = std::get_if<ImuRecord>(&m)) {
      j = {{"kind", "imu"}, {"t", imu->t}, {"gyro", vec3_json(imu->gyro)},
           {"accel", vec3_json(imu->accel)}};
    } else if (const auto* cloud = std::get_if<CloudRecord>(&m)) {
      j = {{"kind", "cloud"}, {"t", cloud->t}, {"point_stamps", cloud->point_stamps},
           {"payload", cloud->payload}};
    } else if (const auto* pose = std::get_if<PoseRecord>(&m)) {
      j = {{"kind", "pose"}, {"t", pose->t}, {"p", vec3_json(pose->pose.translation)},
           {"q", quat_json(pose->pose.rotation)}};
    }
    out << j.dump() << '\n';
  }
}

PoseGraph read_graph_jsonl(const std::string& path) {
  PoseGraph g;
  for_each_json_line(path, [&](const json& j, size_t line) {
    const std::string kind = j.value("kind", "");
    if (kind == "node") {
      StampedPose p;
      p.t = j.value("t", 0.0);
      p.pose.translation = vec3_from(j.at("p"), path, line);
      p.pose.rotation = quat_from(j.at("q"), path, line);
      g.nodes.push_back(p);
    } else if (kind == "rel") {
      RelPoseEdge e;
      e.i = j.at("i").get<int>();
      e.j = j.at("j").get<int>();
      e.t_ij.translation = vec3_from(j.at("p"), path, line);
      e.t_ij.rotation = quat_from(j.at("q"), path, line);
      if (j.contains("info")) e.info = info_from<6>(j.at("info"), path, line);
      g.rel_edges.push_back(e);
    } else if (kind == "abs_pose") {
      AbsPoseEdge e;
      e.i = j.at("i").get<int>();
      e.t_i.translation = vec3_from(j.at("p"), path, line);
      e.t_i.rotation = quat_from(j.at("q"), path, line);
      if (j.contains("info")) e.info = info_from<6>(j.at("info"), path, line);
      g.abs_pose_edges.push_back(e);
    } else if (kind == "abs_pos") {
      AbsPosEdge e;
      e.i = j.at("i").get<int>();
      e.p_i = vec3_from(j.at("p"), path, line);
      if (j.contains("info")) e.info = info_from<3>(j.at("info"), path, line);
      g.abs_pos_edges.push_back(e);
    } else if (kind == "frame") {
      g.frame_transform.translation = vec3_from(j.at("p"), path, line);
      g.frame_transform.rotation = quat_from(j.at("q"), path, line);
      g.estimate_frame_transform = j.value("estimate", false);
    } else {
      fail(path, line, "schema mismatch");
    }
  });
  return g;
}

void write_graph_jsonl(const std::string& path, const PoseGraph& graph) {
  std::ofstream out = open_out(path);
  for (const StampedPose& n : graph.nodes) {
    const json j = {{"kind", "node"}, {"t", n.t}, {"p", vec3_json(n.pose.translation)},
                    {"q", quat_json(n.pose.rotation)}};
    out << j.dump() << '\n';
  }
  for (const RelPoseEdge& e : graph.rel_edges) {
    const json j = {{"kind", "rel"},  {"i", e.i},
                    {"j", e.j},       {"p", vec3_json(e.t_ij.translation)},
                    {"q", quat_json(e.t_ij.rotation)}, {"info", info_json<6>(e.info)}};
    out << j.dump() << '\n';
  }
  for (const AbsPoseEdge& e : graph.abs_pose_edges) {
    const json j = {{"kind", "abs_pose"}, {"i", e.i}, {"p", vec3_json(e.t_i.translation)},
                    {"q", quat_json(e.t_i.rotation)}, {"info", info_json<6>(e.info)}};
    out << j.dump() << '\n';
  }
  for (const AbsPosEdge& e : graph.abs_pos_edges) {
    const json j = {{"kind", "abs_pos"}, {"i", e.i}, {"p", vec3_json(e.p_i)},
                    {"info", info_json<3>(e.info)}};
    out << j.dump() << '\n';
  }
  const json j = {{"kind", "frame"}, {"p", vec3_json(graph.frame_transform.translation)},
                  {"q", quat_json(graph.frame_transform.rotation)},
                  {"estimate", graph.estimate_frame_transform}};
  out << j.dump() << '\n';
}

std::vector<PlaceEntry> read_places_csv(const std::string& path) {
  std::vector<PlaceEntry> entries;
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open");
  std::string line;
  size_t line_no = 0;
  size_t expected_fields = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::vector<Token> tokens = split_line(line, ',');
    if (tokens.size() < 5) fail(path, line_no, "schema mismatch");
    if (expected_fields == 0) expected_fields = tokens.size();
    if (tokens.size() != expected_fields) fail(path, line_no, "schema mismatch");
    PlaceEntry e;
    e.position = {parse_double(path, line_no, tokens[0]), parse_double(path, line_no, tokens[1]),
                  parse_double(path, line_no, tokens[2])};
    e.heading_deg = parse_double(path, line_no, tokens[3]);
    e.descriptor.resize(tokens.size() - 4);
    for (size_t k = 4; k < tokens.size(); ++k)
      e.descriptor(k - 4) = parse_double(path, line_no, tokens[k]);
    entries.push_back(std::move(e));
  }
  return entries;
}

void write_places_csv(const std::string& path, const std::vector<PlaceEntry>& entries) {
  std::ofstream out = open_out(path);
  for (const PlaceEntry& e : entries) {
    out << format_double(e.position.x()) << ',' << format_double(e.position.y()) << ','
        << format_double(e.position.z()) << ',' << format_double(e.heading_deg);
    for (Eigen::Index k = 0; k < e.descriptor.size(); ++k)
      out << ',' << format_double(e.descriptor(k));
    out << '\n';
  }
}

namespace {

std::vector<SinusoidTerm> terms_from(const json& arr) {
  std::vector<SinusoidTerm> terms;
  for (const auto& t : arr) {
    if (!t.is_array() || t.size() != 3)
      throw std::runtime_error("scenario: sinusoid term must be [amplitude, frequency, phase]");
    terms.push_back({t[0].get<double>(), t[1].get<double>(), t[2].get<double>()});
  }
  return terms;
}

json terms_json(const std::vector<SinusoidTerm>& terms) {
  json arr = json::array();
  for (const auto& t : terms) arr.push_back({t.amplitude, t.frequency_hz, t.phase});
  return arr;
}

StreamClockModel clock_from(const json& j) {
  StreamClockModel m;
  m.offset = j.value("offset", 0.0);
  m.drift = j.value("drift", 0.0);
  m.jitter_mean = j.value("jitter_mean", 0.0);
  return m;
}

json clock_json(const StreamClockModel& m) {
  return {{"offset", m.offset}, {"drift", m.drift}, {"jitter_mean", m.jitter_mean}};
}

}  // namespace

ScenarioConfig read_scenario_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  ScenarioConfig cfg = default_scenario();
  cfg.duration = j.value("duration", cfg.duration);
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("trajectory")) {
    const json& traj = j.at("trajectory");
    if (traj.contains("translation"))
      for (int a = 0; a < 3; ++a) cfg.translation[a] = terms_from(traj.at("translation").at(a));
    if (traj.contains("rotation"))
      for (int a = 0; a < 3; ++a) cfg.rotation[a] = terms_from(traj.at("rotation").at(a));
  }
  if (j.contains("rates")) {
    const json& r = j.at("rates");
    cfg.imu_rate = r.value("imu", cfg.imu_rate);
    cfg.pose_rate = r.value("pose", cfg.pose_rate);
    cfg.radar_rate = r.value("radar", cfg.radar_rate);
  }
  if (j.contains("imu_clock")) cfg.imu_clock = clock_from(j.at("imu_clock"));
  if (j.contains("bridge_clock")) cfg.bridge_clock = clock_from(j.at("bridge_clock"));
  if (j.contains("noise")) {
    const json& n = j.at("noise");
    cfg.gyro_noise = n.value("gyro", 0.0);
    cfg.accel_noise = n.value("accel", 0.0);
    cfg.position_noise = n.value("position", 0.0);
    cfg.rotation_noise = n.value("rotation", 0.0);
    cfg.doppler_noise = n.value("doppler", 0.0);
  }
  cfg.doppler_outlier_fraction = j.value("doppler_outlier_fraction", 0.0);
  cfg.radar_landmarks = j.value("radar_landmarks", cfg.radar_landmarks);
  return cfg;
}

void write_scenario_json(const std::string& path, const ScenarioConfig& cfg) {
  json traj = {{"translation", json::array()}, {"rotation", json::array()}};
  for (int a = 0; a < 3; ++a) traj["translation"].push_back(terms_json(cfg.translation[a]));
  for (int a = 0; a < 3; ++a) traj["rotation"].push_back(terms_json(cfg.rotation[a]));
  const json j = {
      {"duration", cfg.duration},
      {"seed", cfg.seed},
      {"trajectory", traj},
      {"rates", {{"imu", cfg.imu_rate}, {"pose", cfg.pose_rate}, {"radar", cfg.radar_rate}}},
      {"imu_clock", clock_json(cfg.imu_clock)},
      {"bridge_clock", clock_json(cfg.bridge_clock)},
      {"noise",
       {{"gyro", cfg.gyro_noise},
        {"accel", cfg.accel_noise},
        {"position", cfg.position_noise},
        {"rotation", cfg.rotation_noise},
        {"doppler", cfg.doppler_noise}}},
      {"doppler_outlier_fraction", cfg.doppler_outlier_fraction},
      {"radar_landmarks", cfg.radar_landmarks}};
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
}

void write_deviation_stats_csv(const std::string& path, const DeviationStats& stats) {
  std::ofstream out = open_out(path);
  for (const auto& p : stats.per_pose)
    out << format_double(p.t) << ',' << format_double(p.dp) << ',' << format_double(p.dr)
        << '\n';
}

}  // namespace trajsync
