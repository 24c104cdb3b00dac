#include "trajsync/reversal.hpp"

#include <algorithm>
#include <stdexcept>

namespace trajsync {

double message_time(const Message& m) {
  return std::visit([](const auto& rec) { return rec.t; }, m);
}

ReversedStream reverse_stream(const MessageStream& s, std::optional<double> t_max_in) {
  if (s.empty()) throw std::invalid_argument("empty stream");

  double t_max;
  if (t_max_in) {
    t_max = *t_max_in;
  } else {
    // Per-point stamps count too: a cloud's last return can trail the frame stamp.
    t_max = message_time(s.front());
    for (const Message& m : s) {
      t_max = std::max(t_max, message_time(m));
      if (const auto* cloud = std::get_if<CloudRecord>(&m))
        for (const double ps : cloud->point_stamps) t_max = std::max(t_max, ps);
    }
  }
  const double twice_max = 2.0 * t_max;

  ReversedStream out;
  out.t_max = t_max;
  out.stream.reserve(s.size());
  for (auto it = s.rbegin(); it != s.rend(); ++it) {
    Message m = *it;
    if (auto* imu = std::get_if<ImuRecord>(&m)) {
      imu->t = twice_max - imu->t;
      imu->gyro = -imu->gyro;
    } else if (auto* cloud = std::get_if<CloudRecord>(&m)) {
      cloud->t = twice_max - cloud->t;
      std::reverse(cloud->point_stamps.begin(), cloud->point_stamps.end());
      for (double& ps : cloud->point_stamps) ps = twice_max - ps;
    } else if (auto* pose = std::get_if<PoseRecord>(&m)) {
      pose->t = twice_max - pose->t;
    }
    out.stream.push_back(std::move(m));
  }
  return out;
}

std::vector<StampedPose> restore_times(const std::vector<StampedPose>& poses, double t_max) {
  std::vector<StampedPose> out = poses;
  const double twice_max = 2.0 * t_max;
  for (StampedPose& p : out) p.t = twice_max - p.t;
  std::sort(out.begin(), out.end(),
            [](const StampedPose& a, const StampedPose& b) { return a.t < b.t; });
  return out;
}

std::vector<StampedPose> trim_tail(const std::vector<StampedPose>& poses, double duration) {
  if (duration < 0.0) throw std::invalid_argument("negative duration");
  if (poses.empty()) return {};
  const double cutoff = poses.back().t - duration;
  std::vector<StampedPose> out;
  for (const StampedPose& p : poses)
    if (p.t <= cutoff) out.push_back(p);
  return out;
}

}  // namespace trajsync
