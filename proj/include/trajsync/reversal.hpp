#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "trajsync/geom.hpp"

namespace trajsync {

struct ImuRecord {
  double t = 0.0;
  Eigen::Vector3d gyro = Eigen::Vector3d::Zero();   // rad/s
  Eigen::Vector3d accel = Eigen::Vector3d::Zero();  // m/s^2
};

struct CloudRecord {
  double t = 0.0;
  std::vector<double> point_stamps;
  std::string payload;  // opaque, carried through unchanged (typically a side-file path)
};

struct PoseRecord {
  double t = 0.0;
  Pose pose;
};

using Message = std::variant<ImuRecord, CloudRecord, PoseRecord>;
using MessageStream = std::vector<Message>;

double message_time(const Message& m);

struct ReversedStream {
  MessageStream stream;
  double t_max = 0.0;
};

/// Maps every stamp (message and per-point) to t' = 2 t_max - t, negates gyro
/// readings, leaves accelerometer readings intact, and reverses record and
/// in-cloud point order so output times are non-decreasing. t_max is the
/// maximum over all message and point stamps unless supplied; pass the first
/// call's t_max to reverse a reversed stream back to the original exactly.
ReversedStream reverse_stream(const MessageStream& s,
                              std::optional<double> t_max = std::nullopt);

/// Maps backward-pass pose times t' back to 2 t_max - t' and re-sorts ascending.
std::vector<StampedPose> restore_times(const std::vector<StampedPose>& poses, double t_max);

/// Drops every pose with t > (last pose time - duration).
std::vector<StampedPose> trim_tail(const std::vector<StampedPose>& poses, double duration);

}  // namespace trajsync
