#include "trajsync/trajops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "trajsync/associate.hpp"

namespace trajsync {

namespace {

std::vector<double> stamps_of(const Trajectory& t) {
  std::vector<double> s(t.size());
  for (size_t i = 0; i < t.size(); ++i) s[i] = t[i].t;
  return s;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

double default_association_tol(const Trajectory& a, const Trajectory& b) {
  std::vector<double> gaps;
  for (size_t i = 1; i < a.size(); ++i) gaps.push_back(a[i].t - a[i - 1].t);
  for (size_t i = 1; i < b.size(); ++i) gaps.push_back(b[i].t - b[i - 1].t);
  if (gaps.empty()) return 0.0;
  return 0.5 * median(gaps);
}

std::vector<std::pair<size_t, size_t>> associate_by_time(const Trajectory& a,
                                                         const Trajectory& b, double tol) {
  if (tol <= 0.0) throw std::invalid_argument("tolerance must be positive");
  const auto pairs = associate_stamps(stamps_of(a), stamps_of(b), tol);
  if (pairs.empty()) throw std::runtime_error("no associations");
  return pairs;
}

Trajectory average_trajectories(const Trajectory& fwd, const Trajectory& bwd, double tol) {
  const auto pairs = associate_by_time(fwd, bwd, tol);
  Trajectory avg;
  avg.reserve(pairs.size());
  for (const auto& [i, j] : pairs) {
    StampedPose p;
    p.t = fwd[i].t;
    p.pose.translation = 0.5 * (fwd[i].pose.translation + bwd[j].pose.translation);
    p.pose.rotation = geodesic_midpoint(fwd[i].pose.rotation, bwd[j].pose.rotation);
    avg.push_back(p);
  }
  return avg;
}

DeviationStats deviation_stats(const Trajectory& pass, const Trajectory& reference, double tol) {
  const auto pairs = associate_by_time(pass, reference, tol);
  DeviationStats stats;
  std::vector<double> dps, drs;
  for (const auto& [i, j] : pairs) {
    const double dp = (pass[i].pose.translation - reference[j].pose.translation).norm();
    const double dr =
        rotation_angle_between(pass[i].pose.rotation, reference[j].pose.rotation) * 180.0 / M_PI;
    stats.per_pose.push_back({pass[i].t, dp, dr});
    dps.push_back(dp);
    drs.push_back(dr);
  }
  stats.median_dp = median(dps);
  stats.max_dp = *std::max_element(dps.begin(), dps.end());
  stats.median_dr = median(drs);
  stats.max_dr = *std::max_element(drs.begin(), drs.end());
  return stats;
}

AteResult ate_rmse(const Trajectory& estimate, const Trajectory& reference, double tol,
                   AteAlignment align) {
  const auto pairs = associate_by_time(estimate, reference, tol);
  AteResult result;

  if (align == AteAlignment::kRigid) {
    if (pairs.size() < 3) throw std::runtime_error("no associations");
    Eigen::Vector3d ce = Eigen::Vector3d::Zero(), cr = Eigen::Vector3d::Zero();
    for (const auto& [i, j] : pairs) {
      ce += estimate[i].pose.translation;
      cr += reference[j].pose.translation;
    }
    ce /= static_cast<double>(pairs.size());
    cr /= static_cast<double>(pairs.size());

    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& [i, j] : pairs)
      cov += (reference[j].pose.translation - cr) * (estimate[i].pose.translation - ce).transpose();
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
    if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) d(2, 2) = -1.0;
    const Eigen::Matrix3d rot = svd.matrixU() * d * svd.matrixV().transpose();
    result.alignment.rotation = Rot3(rot);
    result.alignment.translation = cr - rot * ce;
    // Rotation about the point line is arbitrary when the geometry is a line.
    result.weak_alignment = svd.singularValues()(1) < 1e-9 * std::max(1.0, svd.singularValues()(0));
  }

  double sum_sq = 0.0;
  for (const auto& [i, j] : pairs) {
    const Eigen::Vector3d aligned = result.alignment * estimate[i].pose.translation;
    sum_sq += (aligned - reference[j].pose.translation).squaredNorm();
  }
  result.rmse = std::sqrt(sum_sq / static_cast<double>(pairs.size()));
  return result;
}

int one_percent_k(size_t db_size) {
  return static_cast<int>((db_size + 99) / 100);
}

PlaceQueryResult recall_at_k(const std::vector<PlaceEntry>& db,
                             const std::vector<PlaceEntry>& queries,
                             const std::vector<int>& k_list, double pos_threshold,
                             double heading_threshold) {
  if (db.empty() || queries.empty()) throw std::invalid_argument("empty database or queries");
  for (const int k : k_list)
    if (k < 1 || static_cast<size_t>(k) > db.size())
      throw std::invalid_argument("K out of range");
  const Eigen::Index dim = db.front().descriptor.size();
  for (const auto& e : db)
    if (e.descriptor.size() != dim) throw std::invalid_argument("descriptor dimension mismatch");
  for (const auto& q : queries)
    if (q.descriptor.size() != dim) throw std::invalid_argument("descriptor dimension mismatch");

  auto heading_diff = [](double a, double b) {
    double d = std::fmod(std::abs(a - b), 360.0);
    return d > 180.0 ? 360.0 - d : d;
  };
  auto is_positive = [&](const PlaceEntry& q, const PlaceEntry& e) {
    return (q.position - e.position).norm() <= pos_threshold &&
           heading_diff(q.heading_deg, e.heading_deg) <= heading_threshold;
  };

  PlaceQueryResult result;
  result.ranked_indices.reserve(queries.size());
  std::map<int, int> recalled;
  for (const int k : k_list) recalled[k] = 0;

  for (const auto& q : queries) {
    std::vector<int> order(db.size());
    for (size_t i = 0; i < db.size(); ++i) order[i] = static_cast<int>(i);
    std::vector<double> dist(db.size());
    for (size_t i = 0; i < db.size(); ++i) dist[i] = (db[i].descriptor - q.descriptor).norm();
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return dist[a] < dist[b]; });
    result.ranked_indices.push_back(order);

    bool has_positive = false;
    for (const auto& e : db)
      if (is_positive(q, e)) {
        has_positive = true;
        break;
      }
    if (!has_positive) continue;
    ++result.evaluated_queries;

    for (const int k : k_list) {
      bool hit = false;
      for (int rank = 0; rank < k && !hit; ++rank) hit = is_positive(q, db[order[rank]]);
      if (hit) ++recalled[k];
    }
  }
  if (result.evaluated_queries == 0) throw std::runtime_error("no evaluable queries");
  for (const int k : k_list)
    result.recall_at[k] =
        static_cast<double>(recalled[k]) / static_cast<double>(result.evaluated_queries);
  return result;
}

}  // namespace trajsync
