#include "trajsync/clocksync.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace trajsync {

namespace {

double cross(const TimePair& o, const TimePair& a, const TimePair& b) {
  return (a.sensor_time - o.sensor_time) * (b.host_time - o.host_time) -
         (a.host_time - o.host_time) * (b.sensor_time - o.sensor_time);
}

double segment_slope(const ClockMap& m, size_t i) {
  return (m.y[i + 1] - m.y[i]) / (m.x[i + 1] - m.x[i]);
}

}  // namespace

void HullBuilder::append(const TimePair& pair) {
  if (!std::isfinite(pair.sensor_time) || !std::isfinite(pair.host_time))
    throw std::invalid_argument("non-finite time pair");
  if (has_last_ && pair.sensor_time <= last_x_)
    throw std::invalid_argument("non-monotone sensor clock");
  last_x_ = pair.sensor_time;
  has_last_ = true;
  // Keep only left turns; collinear middle points are dropped as well.
  while (hull_.size() >= 2 && cross(hull_[hull_.size() - 2], hull_.back(), pair) <= 0.0)
    hull_.pop_back();
  hull_.push_back(pair);
}

ClockMap HullBuilder::finish() const {
  if (hull_.size() < 2) throw std::invalid_argument("insufficient pairs");
  ClockMap m;
  m.x.reserve(hull_.size());
  m.y.reserve(hull_.size());
  for (const TimePair& p : hull_) {
    m.x.push_back(p.sensor_time);
    m.y.push_back(p.host_time);
  }
  m.slope_front = segment_slope(m, 0);
  m.slope_back = segment_slope(m, m.x.size() - 2);
  return m;
}

ClockMap build_hull_map(const TimePairSeries& pairs) {
  if (pairs.size() < 2) throw std::invalid_argument("insufficient pairs");
  HullBuilder builder;
  for (const TimePair& p : pairs) builder.append(p);
  return builder.finish();
}

double eval_map(const ClockMap& map, double sensor_time) {
  if (map.x.size() < 2) throw std::invalid_argument("insufficient pairs");
  if (sensor_time <= map.x.front())
    return map.y.front() + map.slope_front * (sensor_time - map.x.front());
  if (sensor_time >= map.x.back())
    return map.y.back() + map.slope_back * (sensor_time - map.x.back());
  const auto it = std::upper_bound(map.x.begin(), map.x.end(), sensor_time);
  const size_t i = static_cast<size_t>(it - map.x.begin()) - 1;
  return map.y[i] + segment_slope(map, i) * (sensor_time - map.x[i]);
}

ClockMap build_bridge_map(const std::vector<double>& smooth_host,
                          const std::vector<double>& gnss) {
  if (smooth_host.size() != gnss.size() || smooth_host.size() < 2)
    throw std::invalid_argument("non-monotone bridge");
  for (size_t i = 1; i < smooth_host.size(); ++i) {
    if (smooth_host[i] <= smooth_host[i - 1] || gnss[i] <= gnss[i - 1])
      throw std::invalid_argument("non-monotone bridge");
  }
  ClockMap m;
  m.x = smooth_host;
  m.y = gnss;
  m.slope_front = segment_slope(m, 0);
  m.slope_back = segment_slope(m, m.x.size() - 2);
  return m;
}

double to_gnss_time(const ClockMap& topic_map, const ClockMap& bridge, double sensor_time,
                    double /*host_time*/) {
  return eval_map(bridge, eval_map(topic_map, sensor_time));
}

double CausalTopicClock::to_gnss_time(const ClockMap& bridge, double sensor_time,
                                      double host_time) {
  builder_.append({sensor_time, host_time});
  return eval_map(bridge, eval_map(builder_.finish(), sensor_time));
}

}  // namespace trajsync
