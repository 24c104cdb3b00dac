#pragma once

#include <string>
#include <utility>
#include <vector>

#include "trajsync/geom.hpp"

namespace trajsync {

// Pose-graph refinement in three cascaded stages: rotations only, translations
// only, then a full joint pass. Residual conventions (rotation rows first):
//   relative pose:     [ Log(R_ij^T R_i^T R_j) ; R_i^T (p_j - p_i) - p_ij ]
//   absolute pose:     [ Log(Rbar_i^T R_i)     ; p_i - pbar_i ]
//   absolute position:   (R_f q_i + t_f) - p_i
// where (R_f, t_f) is the optional frame transform mapping the external
// position frame into the map frame (identity unless estimated).

struct RelPoseEdge {
  int i = 0;
  int j = 0;
  Pose t_ij;  // pose of node j expressed in node i's frame
  Eigen::Matrix<double, 6, 6> info = Eigen::Matrix<double, 6, 6>::Identity();
};

struct AbsPoseEdge {
  int i = 0;
  Pose t_i;
  Eigen::Matrix<double, 6, 6> info = Eigen::Matrix<double, 6, 6>::Identity();
};

struct AbsPosEdge {
  int i = 0;
  Eigen::Vector3d p_i = Eigen::Vector3d::Zero();  // external frame
  Eigen::Matrix3d info = Eigen::Matrix3d::Identity();
};

struct RobustLoss {
  enum class Kind { kNone, kCauchy };
  Kind kind = Kind::kNone;
  double scale = 1.0;
};

struct PoseGraph {
  std::vector<StampedPose> nodes;
  std::vector<RelPoseEdge> rel_edges;
  std::vector<AbsPoseEdge> abs_pose_edges;
  std::vector<AbsPosEdge> abs_pos_edges;
  Pose frame_transform;
  bool estimate_frame_transform = false;
  RobustLoss rel_loss;      // applied to relative odometry edges (full stage and IRLS)
  RobustLoss abs_pos_loss;  // applied to absolute position edges
};

struct StageReport {
  int iterations = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  bool converged = true;
  bool fixed_gauge_node0 = false;
  std::vector<double> accepted_costs;
  std::string message;
};

/// Gauss-Newton on the rotation components only, translations untouched.
PoseGraph optimize_rotations(const PoseGraph& g, int max_iters, double tol,
                             StageReport* report = nullptr);

/// Linear least squares on translations with rotations held fixed; a single
/// solve without robust losses, otherwise iteratively reweighted.
PoseGraph optimize_translations(const PoseGraph& g, int max_iters, double tol,
                                StageReport* report = nullptr);

/// Levenberg-Marquardt over all node poses and the optional frame transform.
std::pair<PoseGraph, double> optimize_full(const PoseGraph& g, int max_iters, double tol,
                                           StageReport* report = nullptr);

struct CascadeConfig {
  bool run_rotation = true;
  bool run_translation = true;
  bool run_full = true;
  int max_iters = 50;
  double tol = 1e-9;
};

struct CascadeReport {
  StageReport rotation;
  StageReport translation;
  StageReport full;
};

std::pair<PoseGraph, CascadeReport> cascaded_pgo(const PoseGraph& g, const CascadeConfig& cfg);

/// Total robust objective of the graph in its current state.
double graph_cost(const PoseGraph& g);

}  // namespace trajsync
