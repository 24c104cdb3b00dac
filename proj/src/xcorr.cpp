#include "trajsync/xcorr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <Eigen/Dense>

#include "trajsync/associate.hpp"

namespace trajsync {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double mean_interval(const TimedVec3Series& s) {
  return (s.stamps.back() - s.stamps.front()) / static_cast<double>(s.size() - 1);
}

TimedVec3Series slice_to_window(const TimedVec3Series& s, double lo, double hi) {
  TimedVec3Series out;
  for (size_t i = 0; i < s.size(); ++i) {
    if (s.stamps[i] >= lo && s.stamps[i] <= hi) {
      out.stamps.push_back(s.stamps[i]);
      out.values.push_back(s.values[i]);
    }
  }
  return out;
}

// Moments (second derivatives) of a not-a-knot cubic spline through (t, y).
// Not-a-knot keeps the third derivative continuous across the second and
// second-to-last knots, which makes the spline reproduce cubic polynomials.
Eigen::MatrixX3d spline_moments(const std::vector<double>& t, const Eigen::MatrixX3d& y) {
  const int n = static_cast<int>(t.size());
  std::vector<double> h(n - 1);
  for (int i = 0; i + 1 < n; ++i) h[i] = t[i + 1] - t[i];

  // Reduced tridiagonal system for M_1 .. M_{n-2} after eliminating M_0 and
  // M_{n-1} via the not-a-knot conditions
  //   M_0 = M_1 + (h0/h1)(M_1 - M_2),
  //   M_{n-1} = M_{n-2} + (h_{n-2}/h_{n-3})(M_{n-2} - M_{n-3}).
  const int m = n - 2;
  Eigen::VectorXd lower(m), diag(m), upper(m);
  Eigen::MatrixX3d rhs(m, 3);
  for (int i = 1; i <= n - 2; ++i) {
    const int r = i - 1;
    lower(r) = h[i - 1];
    diag(r) = 2.0 * (h[i - 1] + h[i]);
    upper(r) = h[i];
    rhs.row(r) = 6.0 * ((y.row(i + 1) - y.row(i)) / h[i] - (y.row(i) - y.row(i - 1)) / h[i - 1]);
  }
  {
    const double c = h[0] / h[1];
    diag(0) += lower(0) * (1.0 + c);
    upper(0) -= lower(0) * c;
    const double e = h[n - 2] / h[n - 3];
    diag(m - 1) += upper(m - 1) * (1.0 + e);
    lower(m - 1) -= upper(m - 1) * e;
  }
  // Thomas elimination.
  for (int r = 1; r < m; ++r) {
    const double f = lower(r) / diag(r - 1);
    diag(r) -= f * upper(r - 1);
    rhs.row(r) -= f * rhs.row(r - 1);
  }
  Eigen::MatrixX3d mom(n, 3);
  mom.row(n - 2) = rhs.row(m - 1) / diag(m - 1);
  for (int r = m - 2; r >= 0; --r)
    mom.row(r + 1) = (rhs.row(r) - upper(r) * mom.row(r + 2)) / diag(r);
  mom.row(0) = mom.row(1) + (h[0] / h[1]) * (mom.row(1) - mom.row(2));
  mom.row(n - 1) = mom.row(n - 2) + (h[n - 2] / h[n - 3]) * (mom.row(n - 2) - mom.row(n - 3));
  return mom;
}

struct Correlogram {
  std::vector<double> c;  // correlation value per lag index
  int k_min = 0;          // lag of c[0]
};

// c(k) = sum_i a[i] * b[i - k] over the valid overlap, lags restricted to a
// minimum overlap (an unnormalized product over a few samples is meaningless).
Correlogram cross_correlate(const std::vector<double>& a, const std::vector<double>& b) {
  const int na = static_cast<int>(a.size());
  const int nb = static_cast<int>(b.size());
  const int min_overlap = std::max(8, std::min(na, nb) / 4);
  Correlogram out;
  out.k_min = -(nb - min_overlap);
  const int k_max = na - min_overlap;
  if (k_max < out.k_min) throw std::runtime_error("degenerate signal");
  out.c.reserve(k_max - out.k_min + 1);
  for (int k = out.k_min; k <= k_max; ++k) {
    const int i_lo = std::max(0, k);
    const int i_hi = std::min(na - 1, nb - 1 + k);
    double sum = 0.0;
    for (int i = i_lo; i <= i_hi; ++i) sum += a[i] * b[i - k];
    out.c.push_back(sum);
  }
  return out;
}

// Contiguous samples around `peak` with c >= half the peak value.
std::pair<int, int> peak_lobe(const std::vector<double>& c, int peak) {
  const double floor_val = 0.5 * c[peak];
  int lo = peak, hi = peak;
  while (lo > 0 && c[lo - 1] >= floor_val) --lo;
  while (hi + 1 < static_cast<int>(c.size()) && c[hi + 1] >= floor_val) ++hi;
  return {lo, hi};
}

int argmax_unmasked(const std::vector<double>& c, const std::vector<bool>& masked) {
  int best = -1;
  for (int i = 0; i < static_cast<int>(c.size()); ++i)
    if (!masked[i] && (best < 0 || c[i] > c[best])) best = i;
  if (best < 0) throw std::runtime_error("degenerate signal");
  return best;
}

// Largest positive local maximum outside `masked`; -1 if none.
int second_peak(const std::vector<double>& c, const std::vector<bool>& masked) {
  int best = -1;
  for (int i = 1; i + 1 < static_cast<int>(c.size()); ++i) {
    if (masked[i] || c[i] <= 0.0) continue;
    if (c[i] >= c[i - 1] && c[i] >= c[i + 1] && (best < 0 || c[i] > c[best])) best = i;
  }
  return best;
}

CorrelationPeak correlate_scalar(const std::vector<double>& sa, const std::vector<double>& sb,
                                 double dt, double s1, double t1, const CorrelationConfig& cfg) {
  auto zero_mean = [](std::vector<double> v) {
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    for (double& x : v) x -= mean;
    return v;
  };
  const std::vector<double> a = zero_mean(sa);
  const std::vector<double> b = zero_mean(sb);
  auto sumsq = [](const std::vector<double>& v) {
    return std::inner_product(v.begin(), v.end(), v.begin(), 0.0);
  };
  if (sumsq(a) <= 0.0 || sumsq(b) <= 0.0) throw std::runtime_error("degenerate signal");

  const Correlogram corr = cross_correlate(a, b);
  const std::vector<double>& c = corr.c;
  std::vector<bool> masked(c.size(), false);
  int peak = argmax_unmasked(c, masked);
  if (cfg.mask_first_peak) {
    const auto [lo, hi] = peak_lobe(c, peak);
    for (int i = lo; i <= hi; ++i) masked[i] = true;
    peak = argmax_unmasked(c, masked);
  }
  if (peak == 0 || peak + 1 == static_cast<int>(c.size()))
    throw std::runtime_error("peak at edge");

  // Quadratic fit through the three samples around the peak.
  const double cm = c[peak - 1], c0 = c[peak], cp = c[peak + 1];
  const double denom = cm - 2.0 * c0 + cp;
  const double frac = denom < 0.0 ? 0.5 * (cm - cp) / denom : 0.0;
  const double d = static_cast<double>(corr.k_min + peak) + frac;

  const auto [plo, phi] = peak_lobe(c, peak);
  for (int i = plo; i <= phi; ++i) masked[i] = true;
  const int second = second_peak(c, masked);
  const double ratio =
      second < 0 ? std::numeric_limits<double>::infinity() : c[peak] / c[second];

  CorrelationPeak out;
  out.d = d;
  out.t_d = offset_from_lag(d, dt, s1, t1, cfg.window_a, cfg.window_b);
  out.peak_ratio = ratio;
  return out;
}

void require_common_grid(const TimedVec3Series& a, const TimedVec3Series& b, double* dt_out) {
  if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("too few points");
  const double dt = mean_interval(a);
  auto check = [dt](const TimedVec3Series& s) {
    for (size_t i = 1; i < s.size(); ++i) {
      const double gap = s.stamps[i] - s.stamps[i - 1];
      if (std::abs(gap - dt) > 1e-6 * std::max(1.0, dt))
        throw std::invalid_argument("series not on a common uniform grid");
    }
  };
  check(a);
  check(b);
  if (std::abs(mean_interval(b) - dt) > 1e-6 * std::max(1.0, dt))
    throw std::invalid_argument("series not on a common uniform grid");
  *dt_out = dt;
}

std::vector<double> component(const TimedVec3Series& s, int axis) {
  std::vector<double> out(s.size());
  for (size_t i = 0; i < s.size(); ++i) out[i] = s.values[i](axis);
  return out;
}

std::vector<double> norms(const TimedVec3Series& s) {
  std::vector<double> out(s.size());
  for (size_t i = 0; i < s.size(); ++i) out[i] = s.values[i].norm();
  return out;
}

std::vector<double> uniform_grid(double start, double end, double dt) {
  std::vector<double> grid;
  const int n = static_cast<int>(std::floor((end - start) / dt * (1.0 + 1e-12))) + 1;
  grid.reserve(n);
  for (int i = 0; i < n; ++i) grid.push_back(start + i * dt);
  while (!grid.empty() && grid.back() > end) grid.pop_back();
  return grid;
}

}  // namespace

void validate_series(const TimedVec3Series& s) {
  if (s.stamps.size() != s.values.size()) throw std::invalid_argument("stamp/value size mismatch");
  for (size_t i = 0; i < s.size(); ++i) {
    if (!std::isfinite(s.stamps[i]) || !s.values[i].allFinite())
      throw std::invalid_argument("non-finite series entry");
    if (i > 0 && s.stamps[i] <= s.stamps[i - 1])
      throw std::invalid_argument("stamps not strictly increasing");
  }
}

std::pair<TimedVec3Series, TimedVec3Series> overlap_trim(const TimedVec3Series& a,
                                                         const TimedVec3Series& b,
                                                         double buffer) {
  if (a.empty() || b.empty()) throw std::invalid_argument("empty series");
  const double lo = std::max(a.stamps.front(), b.stamps.front());
  const double hi = std::min(a.stamps.back(), b.stamps.back());
  if (lo > hi) throw std::runtime_error("no temporal overlap");
  return {slice_to_window(a, lo - buffer, hi + buffer),
          slice_to_window(b, lo - buffer, hi + buffer)};
}

TimedVec3Series gaussian_smooth(const TimedVec3Series& s, int window) {
  if (window < 1 || window % 2 == 0) throw std::invalid_argument("window must be odd");
  if (static_cast<size_t>(window) > s.size()) throw std::invalid_argument("window exceeds length");
  if (window == 1) return s;

  const double sigma = (window - 1) / 4.0;
  std::vector<double> w(window);
  for (int k = 0; k < window; ++k) {
    const double x = k - (window - 1) / 2.0;
    w[k] = std::exp(-0.5 * x * x / (sigma * sigma));
  }

  TimedVec3Series out;
  out.stamps = s.stamps;
  out.values.resize(s.size());
  for (size_t i = 0; i < s.size(); ++i) {
    // Trailing window over samples [i - window + 1, i]; the partial windows at
    // the start are renormalized over what is available.
    const int avail = static_cast<int>(std::min<size_t>(i + 1, window));
    Eigen::Vector3d acc = Eigen::Vector3d::Zero();
    double wsum = 0.0;
    for (int k = 0; k < avail; ++k) {
      const double wk = w[window - 1 - k];
      acc += wk * s.values[i - k];
      wsum += wk;
    }
    out.values[i] = acc / wsum;
  }
  return out;
}

TimedVec3Series resample_cubic(const TimedVec3Series& s, const std::vector<double>& sample_times) {
  if (s.size() < 4) throw std::invalid_argument("too few points for cubic fit");
  const std::vector<double>& t = s.stamps;
  Eigen::MatrixX3d y(s.size(), 3);
  for (size_t i = 0; i < s.size(); ++i) y.row(i) = s.values[i];
  const Eigen::MatrixX3d mom = spline_moments(t, y);

  TimedVec3Series out;
  out.stamps = sample_times;
  out.values.reserve(sample_times.size());
  for (const double x : sample_times) {
    if (x < t.front() - 1e-12 || x > t.back() + 1e-12)
      throw std::invalid_argument("resample out of range");
    const auto it = std::upper_bound(t.begin(), t.end(), x);
    const size_t i = std::min(
        t.size() - 2, static_cast<size_t>(std::max<ptrdiff_t>(0, (it - t.begin()) - 1)));
    const double h = t[i + 1] - t[i];
    const double u = t[i + 1] - x, v = x - t[i];
    const Eigen::RowVector3d val =
        (mom.row(i) * u * u * u + mom.row(i + 1) * v * v * v) / (6.0 * h) +
        (y.row(i) / h - mom.row(i) * h / 6.0) * u +
        (y.row(i + 1) / h - mom.row(i + 1) * h / 6.0) * v;
    out.values.push_back(val.transpose());
  }
  return out;
}

double offset_from_lag(double d, double dt, double s1, double t1, int ma, int mb) {
  return d * dt + s1 - t1 + (mb - ma) * dt / 2.0;
}

CorrelationPeak correlate_offset(const TimedVec3Series& a, const TimedVec3Series& b,
                                 const CorrelationConfig& cfg) {
  double dt = 0.0;
  require_common_grid(a, b, &dt);
  return correlate_scalar(norms(a), norms(b), dt, a.stamps.front(), b.stamps.front(), cfg);
}

std::pair<Rot3, double> refine_rotation_tls(const TimedVec3Series& a,
                                            const TimedVec3Series& b_corrected, const Rot3& r0,
                                            double tau, double threshold_scale) {
  const auto pairs = associate_stamps(a.stamps, b_corrected.stamps, tau);
  if (pairs.size() < 3) throw std::runtime_error("insufficient associations");

  std::vector<Eigen::Vector3d> va, vb;
  va.reserve(pairs.size());
  vb.reserve(pairs.size());
  for (const auto& [i, j] : pairs) {
    va.push_back(a.values[i]);
    vb.push_back(b_corrected.values[j]);
  }

  auto median_of = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  };

  Rot3 r = r0.normalized();
  std::vector<double> rnorm(pairs.size());
  for (int iter = 0; iter < 20; ++iter) {
    for (size_t k = 0; k < pairs.size(); ++k) rnorm[k] = (va[k] - r * vb[k]).norm();
    const double threshold = threshold_scale * median_of(rnorm);

    Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
    Eigen::Vector3d g = Eigen::Vector3d::Zero();
    for (size_t k = 0; k < pairs.size(); ++k) {
      if (rnorm[k] > threshold) continue;
      const Eigen::Vector3d w = r * vb[k];
      h += w.squaredNorm() * Eigen::Matrix3d::Identity() - w * w.transpose();
      g += w.cross(va[k] - w);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(h);
    if (eig.eigenvalues()(0) < 1e-12 * std::max(1.0, eig.eigenvalues()(2)))
      throw std::runtime_error("degenerate geometry");
    const Eigen::Vector3d delta = eig.eigenvectors() *
                                  eig.eigenvalues().cwiseInverse().asDiagonal() *
                                  (eig.eigenvectors().transpose() * g);
    r = (so3_exp(delta) * r).normalized();
    if (delta.norm() < 1e-8) break;
  }

  for (size_t k = 0; k < pairs.size(); ++k) rnorm[k] = (va[k] - r * vb[k]).norm();
  const double threshold = threshold_scale * median_of(rnorm);
  size_t inliers = 0;
  for (const double rn : rnorm)
    if (rn <= threshold) ++inliers;
  return {positive_scalar(r), static_cast<double>(inliers) / pairs.size()};
}

CorrelationResult run_correlation(const TimedVec3Series& a, const TimedVec3Series& b,
                                  const Rot3& r0, const CorrelationConfig& cfg) {
  validate_series(a);
  validate_series(b);
  auto [ta, tb] = overlap_trim(a, b, cfg.buffer);
  if (ta.size() < 4 || tb.size() < 4) throw std::invalid_argument("too few points for cubic fit");

  const TimedVec3Series sa = gaussian_smooth(ta, cfg.window_a);
  const TimedVec3Series sb = gaussian_smooth(tb, cfg.window_b);

  const double dt = std::min(mean_interval(sa), mean_interval(sb));
  const TimedVec3Series ra =
      resample_cubic(sa, uniform_grid(sa.stamps.front(), sa.stamps.back(), dt));
  TimedVec3Series rb = resample_cubic(sb, uniform_grid(sb.stamps.front(), sb.stamps.back(), dt));

  CorrelationResult result;
  const CorrelationPeak main =
      correlate_scalar(norms(ra), norms(rb), dt, ra.stamps.front(), rb.stamps.front(), cfg);
  result.t_d = main.t_d;
  result.peak_ratio = main.peak_ratio;
  result.per_axis_offsets[0] = main.t_d;

  // Per-axis diagnostics: rotate B into A's frame with the initial guess, then
  // correlate each component. A degenerate axis reports NaN instead of failing.
  for (Eigen::Vector3d& v : rb.values) v = r0 * v;
  for (int axis = 0; axis < 3; ++axis) {
    try {
      result.per_axis_offsets[axis + 1] =
          correlate_scalar(component(ra, axis), component(rb, axis), dt, ra.stamps.front(),
                           rb.stamps.front(), cfg)
              .t_d;
    } catch (const std::runtime_error&) {
      result.per_axis_offsets[axis + 1] = kNan;
    }
  }
  double off_min = std::numeric_limits<double>::infinity();
  double off_max = -std::numeric_limits<double>::infinity();
  for (const double off : result.per_axis_offsets) {
    if (!std::isfinite(off)) continue;
    off_min = std::min(off_min, off);
    off_max = std::max(off_max, off);
  }
  result.axis_offsets_consistent = (off_max - off_min) <= 3.0 * dt;

  TimedVec3Series corrected = tb;
  for (double& t : corrected.stamps) t += result.t_d;
  const double tau = cfg.tau > 0.0 ? cfg.tau : dt / 2.0;
  const auto [rot, frac] = refine_rotation_tls(ta, corrected, r0, tau, cfg.tls_threshold_scale);
  result.r_ab = rot;
  result.inlier_fraction = frac;
  return result;
}

}  // namespace trajsync
