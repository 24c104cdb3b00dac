#pragma once

#include <map>
#include <utility>
#include <vector>

#include "trajsync/geom.hpp"

namespace trajsync {

struct DeviationStats {
  double median_dp = 0.0;  // meters
  double max_dp = 0.0;
  double median_dr = 0.0;  // degrees
  double max_dr = 0.0;
  struct PerPose {
    double t;
    double dp;
    double dr;
  };
  std::vector<PerPose> per_pose;
};

struct PlaceEntry {
  Eigen::VectorXd descriptor;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  double heading_deg = 0.0;
};

struct PlaceQueryResult {
  std::vector<std::vector<int>> ranked_indices;  // per query, database ranked by descriptor distance
  std::map<int, double> recall_at;
  int evaluated_queries = 0;
};

/// Default association tolerance: half the median stamp interval of the two
/// trajectories pooled.
double default_association_tol(const Trajectory& a, const Trajectory& b);

/// Greedy nearest-stamp matching, each pose used at most once, |dt| <= tol.
std::vector<std::pair<size_t, size_t>> associate_by_time(const Trajectory& a,
                                                         const Trajectory& b, double tol);

/// Per matched pair: arithmetic-mean translation, geodesic-midpoint rotation,
/// forward stamp.
Trajectory average_trajectories(const Trajectory& fwd, const Trajectory& bwd, double tol);

DeviationStats deviation_stats(const Trajectory& pass, const Trajectory& reference, double tol);

enum class AteAlignment { kNone, kRigid };

struct AteResult {
  double rmse = 0.0;  // meters
  bool weak_alignment = false;  // associated points nearly collinear
  Pose alignment;     // transform applied to the estimate
};

/// RMSE of translational residuals after optional closed-form SE(3) alignment
/// (centroids + SVD of the cross-covariance, determinant-corrected).
AteResult ate_rmse(const Trajectory& estimate, const Trajectory& reference, double tol,
                   AteAlignment align);

/// Ranks the database by Euclidean descriptor distance per query; a query is
/// recalled at K if any top-K entry lies within pos_threshold meters and
/// heading_threshold degrees (circular). Queries without any true positive are
/// excluded from the denominator.
PlaceQueryResult recall_at_k(const std::vector<PlaceEntry>& db,
                             const std::vector<PlaceEntry>& queries,
                             const std::vector<int>& k_list, double pos_threshold,
                             double heading_threshold);

/// K for the "top 1% of the database" convention, rounded up.
int one_percent_k(size_t db_size);

}  // namespace trajsync
