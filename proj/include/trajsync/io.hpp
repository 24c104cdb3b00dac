#pragma once

#include <string>
#include <vector>

#include "trajsync/clocksync.hpp"
#include "trajsync/geom.hpp"
#include "trajsync/kinematics.hpp"
#include "trajsync/pgo.hpp"
#include "trajsync/reversal.hpp"
#include "trajsync/synth.hpp"
#include "trajsync/trajops.hpp"
#include "trajsync/xcorr.hpp"

namespace trajsync {

// Text formats, all locale-independent ('.' decimal point), doubles printed at
// 17 significant digits so read(write(x)) round-trips bit-exactly. Blank lines
// and '#' comments are skipped; CRLF is accepted. Parse errors carry 1-based
// line and column numbers.

std::string format_double(double v);

/// Lines of `t x y z qx qy qz qw` (quaternion scalar-last).
Trajectory read_trajectory(const std::string& path);
void write_trajectory(const std::string& path, const Trajectory& traj);

/// CSV rows `t,x,y,z`.
TimedVec3Series read_series_csv(const std::string& path);
void write_series_csv(const std::string& path, const TimedVec3Series& series);

/// CSV rows `sensor_time,host_time`.
TimePairSeries read_time_pairs_csv(const std::string& path);
void write_time_pairs_csv(const std::string& path, const TimePairSeries& pairs);

/// CSV rows of hull vertices `sensor_time,host_time`.
void write_clock_map_csv(const std::string& path, const ClockMap& map);
ClockMap read_clock_map_csv(const std::string& path);

/// CSV rows `t,x,y,z,doppler,intensity`; consecutive rows with equal t form one
/// scan. doppler_sign (+1/-1) is multiplied into the doppler column on read.
std::vector<RadarScan> read_radar_scans_csv(const std::string& path, double doppler_sign = 1.0);
void write_radar_scans_csv(const std::string& path, const std::vector<RadarScan>& scans);

/// JSONL, one record per line:
///   {"kind":"imu","t":..,"gyro":[..],"accel":[..]}
///   {"kind":"cloud","t":..,"point_stamps":[..],"payload":"..."}
///   {"kind":"pose","t":..,"p":[..],"q":[qx,qy,qz,qw]}
MessageStream read_stream_jsonl(const std::string& path);
void write_stream_jsonl(const std::string& path, const MessageStream& stream);

/// JSONL graph records:
///   {"kind":"node","i":..,"t":..,"p":[..],"q":[..]}
///   {"kind":"rel","i":..,"j":..,"p":[..],"q":[..],"info":[36 row-major, optional]}
///   {"kind":"abs_pose","i":..,"p":[..],"q":[..],"info":[36, optional]}
///   {"kind":"abs_pos","i":..,"p":[..],"info":[9, optional]}
///   {"kind":"frame","p":[..],"q":[..],"estimate":bool}
PoseGraph read_graph_jsonl(const std::string& path);
void write_graph_jsonl(const std::string& path, const PoseGraph& graph);

/// CSV rows `x,y,z,heading_deg,d0,d1,...` with a fixed descriptor length.
std::vector<PlaceEntry> read_places_csv(const std::string& path);
void write_places_csv(const std::string& path, const std::vector<PlaceEntry>& entries);

/// Scenario description as a single JSON file; missing keys keep the defaults
/// of default_scenario().
ScenarioConfig read_scenario_json(const std::string& path);
void write_scenario_json(const std::string& path, const ScenarioConfig& cfg);

void write_deviation_stats_csv(const std::string& path, const DeviationStats& stats);

}  // namespace trajsync
