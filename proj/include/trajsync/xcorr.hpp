#pragma once

#include <array>
#include <utility>
#include <vector>

#include "trajsync/geom.hpp"

namespace trajsync {

// Time-offset and relative-rotation estimation between two timestamped 3D
// motion signals (angular rates or ego velocities): trim to the overlap,
// smooth, resample on a common interval, cross-correlate the signal norms to
// get the offset, then refine the rotation on time-associated pairs with
// truncated least squares.

struct TimedVec3Series {
  std::vector<double> stamps;
  std::vector<Eigen::Vector3d> values;

  size_t size() const { return stamps.size(); }
  bool empty() const { return stamps.empty(); }
};

void validate_series(const TimedVec3Series& s);

struct CorrelationConfig {
  int window_a = 1;  // smoothing window M_a, odd
  int window_b = 1;  // smoothing window M_b, odd
  double tau = 0.0;  // association tolerance; <= 0 means dt/2
  double buffer = 1.0;
  bool mask_first_peak = false;
  double tls_threshold_scale = 3.0;
};

struct CorrelationPeak {
  double d = 0.0;        // refined peak position in steps
  double t_d = 0.0;      // seconds to add to B's stamps to align with A
  double peak_ratio = 0.0;  // best peak over second-best peak, >= 1
};

struct CorrelationResult {
  double t_d = 0.0;
  Rot3 r_ab = Rot3::Identity();
  double peak_ratio = 0.0;
  std::array<double, 4> per_axis_offsets{};  // norm, x, y, z; NaN if an axis is degenerate
  double inlier_fraction = 0.0;
  bool axis_offsets_consistent = true;  // spread of finite axis offsets <= 3 dt
};

/// Restricts both series to [max(starts) - buffer, min(ends) + buffer], each
/// clipped to its own span.
std::pair<TimedVec3Series, TimedVec3Series> overlap_trim(const TimedVec3Series& a,
                                                         const TimedVec3Series& b,
                                                         double buffer);

/// Trailing window of Gaussian weights (sigma = (window-1)/4 samples), applied
/// per component; stamps unchanged. The window is trailing, not centered: the
/// induced content lag of (window-1)*dt/2 is what the (M_b - M_a)*dt/2 term of
/// the offset formula compensates. Partial start windows are renormalized.
TimedVec3Series gaussian_smooth(const TimedVec3Series& s, int window);

/// Not-a-knot cubic-spline interpolation per component at the given times.
TimedVec3Series resample_cubic(const TimedVec3Series& s, const std::vector<double>& sample_times);

/// t_d = d*dt + s1 - t1 + (mb - ma)*dt/2.
double offset_from_lag(double d, double dt, double s1, double t1, int ma, int mb);

/// Cross-correlates the zero-meaned norm sequences of two series already
/// resampled on a common interval; the integer peak is refined by quadratic
/// fitting.
CorrelationPeak correlate_offset(const TimedVec3Series& a, const TimedVec3Series& b,
                                 const CorrelationConfig& cfg);

/// Iteratively re-solves the small-angle alignment v^A = R v^B over pairs
/// associated within tau, keeping residual norms <= threshold_scale * median.
/// Returns the refined rotation and the final inlier fraction.
std::pair<Rot3, double> refine_rotation_tls(const TimedVec3Series& a,
                                            const TimedVec3Series& b_corrected, const Rot3& r0,
                                            double tau, double threshold_scale);

CorrelationResult run_correlation(const TimedVec3Series& a, const TimedVec3Series& b,
                                  const Rot3& r0, const CorrelationConfig& cfg);

}  // namespace trajsync
