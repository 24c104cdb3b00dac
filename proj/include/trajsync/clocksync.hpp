#pragma once

#include <vector>

namespace trajsync {

// One-sided delay model: a message emitted at sensor time x is received at host
// time y = f(x) + delay, delay >= 0 and f smooth. The minimal-delay envelope of
// the (x, y) samples is therefore the lower convex hull, and evaluating the hull
// de-jitters the host stamps.

struct TimePair {
  double sensor_time = 0.0;
  double host_time = 0.0;
};

using TimePairSeries = std::vector<TimePair>;

struct ClockMap {
  std::vector<double> x;  // hull vertex sensor times, strictly increasing
  std::vector<double> y;  // hull vertex host times
  double slope_front = 0.0;
  double slope_back = 0.0;
};

/// Appends (sensor, host) pairs one at a time and maintains the lower hull;
/// batch and incremental construction give the same vertex set.
class HullBuilder {
 public:
  void append(const TimePair& pair);
  const std::vector<TimePair>& vertices() const { return hull_; }
  ClockMap finish() const;

 private:
  std::vector<TimePair> hull_;
  double last_x_ = 0.0;
  bool has_last_ = false;
};

ClockMap build_hull_map(const TimePairSeries& pairs);

/// Piecewise-linear inside the vertex span, terminal-segment slopes outside.
double eval_map(const ClockMap& map, double sensor_time);

/// Plain piecewise-linear interpolant (both axes already smooth, no hull).
ClockMap build_bridge_map(const std::vector<double>& smooth_host,
                          const std::vector<double>& gnss);

/// bridge(topic(sensor_time)). host_time is only consumed by the causal path
/// (see CausalTopicClock); it is accepted here so both paths share a signature.
double to_gnss_time(const ClockMap& topic_map, const ClockMap& bridge, double sensor_time,
                    double host_time = 0.0);

/// Causal variant: each query appends its (sensor, host) pair to the running
/// hull before evaluating, so the mapping never looks ahead of the message.
class CausalTopicClock {
 public:
  double to_gnss_time(const ClockMap& bridge, double sensor_time, double host_time);
  ClockMap map() const { return builder_.finish(); }

 private:
  HullBuilder builder_;
};

}  // namespace trajsync
