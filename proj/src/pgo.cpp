#include "trajsync/pgo.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

namespace trajsync {

namespace {

double loss_rho(const RobustLoss& loss, double s) {
  if (loss.kind == RobustLoss::Kind::kCauchy) {
    const double c2 = loss.scale * loss.scale;
    return c2 * std::log1p(s / c2);
  }
  return s;
}

double loss_weight(const RobustLoss& loss, double s) {
  if (loss.kind == RobustLoss::Kind::kCauchy) {
    const double c2 = loss.scale * loss.scale;
    return 1.0 / (1.0 + s / c2);
  }
  return 1.0;
}

template <int N>
Eigen::Matrix<double, N, N> sqrt_info(const Eigen::Matrix<double, N, N>& info) {
  if ((info - info.transpose()).norm() > 1e-9 * std::max(1.0, info.norm()))
    throw std::invalid_argument("invalid information matrix");
  Eigen::LLT<Eigen::Matrix<double, N, N>> llt(info);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("invalid information matrix");
  return llt.matrixU();
}

void validate_graph(const PoseGraph& g) {
  const int n = static_cast<int>(g.nodes.size());
  if (n == 0) throw std::invalid_argument("empty graph");
  for (const auto& e : g.rel_edges) {
    if (e.i < 0 || e.i >= n || e.j < 0 || e.j >= n || e.i == e.j)
      throw std::invalid_argument("edge index out of range");
    sqrt_info<6>(e.info);
  }
  for (const auto& e : g.abs_pose_edges) {
    if (e.i < 0 || e.i >= n) throw std::invalid_argument("edge index out of range");
    sqrt_info<6>(e.info);
  }
  for (const auto& e : g.abs_pos_edges) {
    if (e.i < 0 || e.i >= n) throw std::invalid_argument("edge index out of range");
    sqrt_info<3>(e.info);
  }
  if (g.rel_loss.kind == RobustLoss::Kind::kCauchy && !(g.rel_loss.scale > 0.0))
    throw std::invalid_argument("loss scale must be positive");
  if (g.abs_pos_loss.kind == RobustLoss::Kind::kCauchy && !(g.abs_pos_loss.scale > 0.0))
    throw std::invalid_argument("loss scale must be positive");
}

// All nodes must be reachable from an anchored node through relative edges.
// Returns true when no anchor exists and node 0 has to be fixed instead.
bool check_gauge(const PoseGraph& g, bool anchored_by_abs_pose, bool anchored_by_abs_pos) {
  const size_t n = g.nodes.size();
  std::vector<bool> reached(n, false);
  std::deque<int> queue;
  auto seed = [&](int i) {
    if (!reached[i]) {
      reached[i] = true;
      queue.push_back(i);
    }
  };
  bool fixed_node0 = false;
  if (anchored_by_abs_pose)
    for (const auto& e : g.abs_pose_edges) seed(e.i);
  if (anchored_by_abs_pos)
    for (const auto& e : g.abs_pos_edges) seed(e.i);
  if (queue.empty()) {
    fixed_node0 = true;
    seed(0);
  }
  std::vector<std::vector<int>> adj(n);
  for (const auto& e : g.rel_edges) {
    adj[e.i].push_back(e.j);
    adj[e.j].push_back(e.i);
  }
  while (!queue.empty()) {
    const int i = queue.front();
    queue.pop_front();
    for (const int j : adj[i]) seed(j);
  }
  for (size_t i = 0; i < n; ++i)
    if (!reached[i]) throw std::runtime_error("gauge freedom");
  return fixed_node0;
}

// Normal equations assembled from whitened Jacobian blocks.
class NormalEq {
 public:
  explicit NormalEq(int dim) : dim_(dim), b_(Eigen::VectorXd::Zero(dim)) {}

  void add(const std::vector<std::pair<int, Eigen::MatrixXd>>& blocks,
           const Eigen::VectorXd& residual) {
    for (const auto& [ca, ja] : blocks) {
      if (ca < 0) continue;
      b_.segment(ca, ja.cols()) += ja.transpose() * residual;
      for (const auto& [cb, jb] : blocks) {
        if (cb < 0) continue;
        const Eigen::MatrixXd h = ja.transpose() * jb;
        for (int r = 0; r < h.rows(); ++r)
          for (int c = 0; c < h.cols(); ++c)
            triplets_.emplace_back(ca + r, cb + c, h(r, c));
      }
    }
  }

  Eigen::VectorXd solve(double lambda) const {
    Eigen::SparseMatrix<double> h(dim_, dim_);
    h.setFromTriplets(triplets_.begin(), triplets_.end());
    if (lambda > 0.0) {
      for (int i = 0; i < dim_; ++i)
        h.coeffRef(i, i) += lambda * std::max(h.coeff(i, i), 1e-12);
    }
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> chol(h);
    if (chol.info() != Eigen::Success) throw std::runtime_error("gauge freedom");
    return chol.solve(-b_);
  }

 private:
  int dim_;
  Eigen::VectorXd b_;
  std::vector<Eigen::Triplet<double>> triplets_;
};

struct RotationProblem {
  const PoseGraph* g;
  std::vector<int> offset;  // 3-dof column offset per node, -1 when fixed

  double cost(const std::vector<Rot3>& rot) const {
    double total = 0.0;
    for (const auto& e : g->rel_edges) {
      const Eigen::Vector3d r =
          so3_log(e.t_ij.rotation.conjugate() * rot[e.i].conjugate() * rot[e.j]);
      total += r.dot(e.info.topLeftCorner<3, 3>() * r);
    }
    for (const auto& e : g->abs_pose_edges) {
      const Eigen::Vector3d r = so3_log(e.t_i.rotation.conjugate() * rot[e.i]);
      total += r.dot(e.info.topLeftCorner<3, 3>() * r);
    }
    return total;
  }
};

struct FullState {
  std::vector<Pose> poses;
  Pose frame;
};

double full_cost(const PoseGraph& g, const FullState& s) {
  double total = 0.0;
  for (const auto& e : g.rel_edges) {
    Eigen::Matrix<double, 6, 1> r;
    r.head<3>() = so3_log(e.t_ij.rotation.conjugate() * s.poses[e.i].rotation.conjugate() *
                          s.poses[e.j].rotation);
    r.tail<3>() = s.poses[e.i].rotation.conjugate() *
                      (s.poses[e.j].translation - s.poses[e.i].translation) -
                  e.t_ij.translation;
    total += loss_rho(g.rel_loss, r.dot(e.info * r));
  }
  for (const auto& e : g.abs_pose_edges) {
    Eigen::Matrix<double, 6, 1> r;
    r.head<3>() = so3_log(e.t_i.rotation.conjugate() * s.poses[e.i].rotation);
    r.tail<3>() = s.poses[e.i].translation - e.t_i.translation;
    total += r.dot(e.info * r);
  }
  for (const auto& e : g.abs_pos_edges) {
    const Eigen::Vector3d r = s.frame * e.p_i - s.poses[e.i].translation;
    total += loss_rho(g.abs_pos_loss, r.dot(e.info * r));
  }
  return total;
}

double translation_cost(const PoseGraph& g, const std::vector<Eigen::Vector3d>& p) {
  double total = 0.0;
  for (const auto& e : g.rel_edges) {
    const Eigen::Vector3d r =
        g.nodes[e.i].pose.rotation.conjugate() * (p[e.j] - p[e.i]) - e.t_ij.translation;
    total += loss_rho(g.rel_loss, r.dot(e.info.bottomRightCorner<3, 3>() * r));
  }
  for (const auto& e : g.abs_pose_edges) {
    const Eigen::Vector3d r = p[e.i] - e.t_i.translation;
    total += r.dot(e.info.bottomRightCorner<3, 3>() * r);
  }
  for (const auto& e : g.abs_pos_edges) {
    const Eigen::Vector3d r = g.frame_transform * e.p_i - p[e.i];
    total += loss_rho(g.abs_pos_loss, r.dot(e.info * r));
  }
  return total;
}

}  // namespace

double graph_cost(const PoseGraph& g) {
  FullState s;
  s.poses.reserve(g.nodes.size());
  for (const auto& n : g.nodes) s.poses.push_back(n.pose);
  s.frame = g.frame_transform;
  return full_cost(g, s);
}

PoseGraph optimize_rotations(const PoseGraph& g, int max_iters, double tol,
                             StageReport* report) {
  validate_graph(g);
  const bool fix0 = check_gauge(g, /*abs_pose=*/true, /*abs_pos=*/false);

  RotationProblem prob;
  prob.g = &g;
  prob.offset.assign(g.nodes.size(), 0);
  int dim = 0;
  for (size_t i = 0; i < g.nodes.size(); ++i) {
    if (fix0 && i == 0) {
      prob.offset[i] = -1;
      continue;
    }
    prob.offset[i] = dim;
    dim += 3;
  }

  std::vector<Rot3> rot;
  rot.reserve(g.nodes.size());
  for (const auto& n : g.nodes) rot.push_back(n.pose.rotation.normalized());

  StageReport rep;
  rep.fixed_gauge_node0 = fix0;
  double cost = prob.cost(rot);
  rep.initial_cost = cost;

  for (int iter = 0; iter < max_iters; ++iter) {
    NormalEq eq(dim);
    for (const auto& e : g.rel_edges) {
      const Eigen::Vector3d r =
          so3_log(e.t_ij.rotation.conjugate() * rot[e.i].conjugate() * rot[e.j]);
      const Eigen::Matrix3d w = sqrt_info<3>(e.info.topLeftCorner<3, 3>());
      const Eigen::Matrix3d base = so3_right_jacobian_inverse(r) *
                                   rot[e.j].conjugate().toRotationMatrix();
      eq.add({{prob.offset[e.i], Eigen::MatrixXd(-w * base)},
              {prob.offset[e.j], Eigen::MatrixXd(w * base)}},
             w * r);
    }
    for (const auto& e : g.abs_pose_edges) {
      const Eigen::Vector3d r = so3_log(e.t_i.rotation.conjugate() * rot[e.i]);
      const Eigen::Matrix3d w = sqrt_info<3>(e.info.topLeftCorner<3, 3>());
      eq.add({{prob.offset[e.i],
               Eigen::MatrixXd(w * so3_right_jacobian_inverse(r) *
                               rot[e.i].conjugate().toRotationMatrix())}},
             w * r);
    }
    const Eigen::VectorXd delta = eq.solve(0.0);
    if (!delta.allFinite()) throw std::runtime_error("gauge freedom");

    // Backtracking keeps the accepted cost non-increasing.
    double alpha = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 12; ++halving, alpha *= 0.5) {
      std::vector<Rot3> trial = rot;
      for (size_t i = 0; i < rot.size(); ++i) {
        if (prob.offset[i] < 0) continue;
        trial[i] =
            (so3_exp(Eigen::Vector3d(alpha * delta.segment<3>(prob.offset[i]))) * rot[i])
                .normalized();
      }
      const double trial_cost = prob.cost(trial);
      if (trial_cost <= cost) {
        rot = std::move(trial);
        const double drop = cost - trial_cost;
        cost = trial_cost;
        rep.accepted_costs.push_back(cost);
        ++rep.iterations;
        accepted = true;
        if (drop <= tol * std::max(1.0, cost) || alpha * delta.norm() < 1e-12) iter = max_iters;
        break;
      }
    }
    if (!accepted) break;
  }

  rep.final_cost = cost;
  if (report) *report = rep;
  PoseGraph out = g;
  for (size_t i = 0; i < out.nodes.size(); ++i) out.nodes[i].pose.rotation = rot[i];
  return out;
}

PoseGraph optimize_translations(const PoseGraph& g, int max_iters, double tol,
                                StageReport* report) {
  validate_graph(g);
  const bool fix0 = check_gauge(g, /*abs_pose=*/true, /*abs_pos=*/true);

  std::vector<int> offset(g.nodes.size(), 0);
  int dim = 0;
  for (size_t i = 0; i < g.nodes.size(); ++i) {
    if (fix0 && i == 0) {
      offset[i] = -1;
      continue;
    }
    offset[i] = dim;
    dim += 3;
  }

  std::vector<Eigen::Vector3d> p;
  p.reserve(g.nodes.size());
  for (const auto& n : g.nodes) p.push_back(n.pose.translation);

  const bool robust = g.rel_loss.kind != RobustLoss::Kind::kNone ||
                      g.abs_pos_loss.kind != RobustLoss::Kind::kNone;

  StageReport rep;
  rep.fixed_gauge_node0 = fix0;
  double cost = translation_cost(g, p);
  rep.initial_cost = cost;

  const int rounds = robust ? max_iters : 1;
  for (int iter = 0; iter < rounds; ++iter) {
    NormalEq eq(dim);
    for (const auto& e : g.rel_edges) {
      const Eigen::Matrix3d ri_t = g.nodes[e.i].pose.rotation.conjugate().toRotationMatrix();
      const Eigen::Vector3d r = ri_t * (p[e.j] - p[e.i]) - e.t_ij.translation;
      Eigen::Matrix3d w = sqrt_info<3>(e.info.bottomRightCorner<3, 3>());
      w *= std::sqrt(loss_weight(g.rel_loss, r.dot(e.info.bottomRightCorner<3, 3>() * r)));
      eq.add({{offset[e.i], Eigen::MatrixXd(-w * ri_t)}, {offset[e.j], Eigen::MatrixXd(w * ri_t)}},
             w * r);
    }
    for (const auto& e : g.abs_pose_edges) {
      const Eigen::Vector3d r = p[e.i] - e.t_i.translation;
      const Eigen::Matrix3d w = sqrt_info<3>(e.info.bottomRightCorner<3, 3>());
      eq.add({{offset[e.i], Eigen::MatrixXd(w)}}, w * r);
    }
    for (const auto& e : g.abs_pos_edges) {
      const Eigen::Vector3d r = g.frame_transform * e.p_i - p[e.i];
      Eigen::Matrix3d w = sqrt_info<3>(e.info);
      w *= std::sqrt(loss_weight(g.abs_pos_loss, r.dot(e.info * r)));
      eq.add({{offset[e.i], Eigen::MatrixXd(-w)}}, w * r);
    }
    const Eigen::VectorXd delta = eq.solve(0.0);
    if (!delta.allFinite()) throw std::runtime_error("gauge freedom");

    double alpha = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 12; ++halving, alpha *= 0.5) {
      std::vector<Eigen::Vector3d> trial = p;
      for (size_t i = 0; i < p.size(); ++i)
        if (offset[i] >= 0) trial[i] += alpha * delta.segment<3>(offset[i]);
      const double trial_cost = translation_cost(g, trial);
      if (trial_cost <= cost) {
        p = std::move(trial);
        const double drop = cost - trial_cost;
        cost = trial_cost;
        rep.accepted_costs.push_back(cost);
        ++rep.iterations;
        accepted = true;
        if (drop <= tol * std::max(1.0, cost) || alpha * delta.norm() < 1e-12) iter = rounds;
        break;
      }
    }
    if (!accepted) break;
  }

  rep.final_cost = cost;
  if (report) *report = rep;
  PoseGraph out = g;
  for (size_t i = 0; i < out.nodes.size(); ++i) out.nodes[i].pose.translation = p[i];
  return out;
}

std::pair<PoseGraph, double> optimize_full(const PoseGraph& g, int max_iters, double tol,
                                           StageReport* report) {
  validate_graph(g);
  const bool fix0 = check_gauge(g, /*abs_pose=*/true, /*abs_pos=*/true);

  std::vector<int> offset(g.nodes.size(), 0);
  int dim = 0;
  for (size_t i = 0; i < g.nodes.size(); ++i) {
    if (fix0 && i == 0) {
      offset[i] = -1;
      continue;
    }
    offset[i] = dim;
    dim += 6;
  }
  const int frame_offset = g.estimate_frame_transform ? dim : -1;
  if (g.estimate_frame_transform) dim += 6;

  FullState state;
  state.poses.reserve(g.nodes.size());
  for (const auto& n : g.nodes) state.poses.push_back(n.pose);
  state.frame = g.frame_transform;

  auto apply = [&](const FullState& s, const Eigen::VectorXd& delta) {
    FullState out = s;
    for (size_t i = 0; i < s.poses.size(); ++i) {
      if (offset[i] < 0) continue;
      out.poses[i].rotation =
          (so3_exp(Eigen::Vector3d(delta.segment<3>(offset[i]))) * s.poses[i].rotation)
              .normalized();
      out.poses[i].translation += delta.segment<3>(offset[i] + 3);
    }
    if (frame_offset >= 0) {
      out.frame.rotation =
          (so3_exp(Eigen::Vector3d(delta.segment<3>(frame_offset))) * s.frame.rotation)
              .normalized();
      out.frame.translation += delta.segment<3>(frame_offset + 3);
    }
    return out;
  };

  StageReport rep;
  rep.fixed_gauge_node0 = fix0;
  double cost = full_cost(g, state);
  rep.initial_cost = cost;

  double lambda = 1e-4;
  for (int iter = 0; iter < max_iters; ++iter) {
    NormalEq eq(dim);
    for (const auto& e : g.rel_edges) {
      const Rot3& qi = state.poses[e.i].rotation;
      const Rot3& qj = state.poses[e.j].rotation;
      const Eigen::Matrix3d ri_t = qi.conjugate().toRotationMatrix();
      Eigen::Matrix<double, 6, 1> r;
      r.head<3>() = so3_log(e.t_ij.rotation.conjugate() * qi.conjugate() * qj);
      r.tail<3>() =
          ri_t * (state.poses[e.j].translation - state.poses[e.i].translation) -
          e.t_ij.translation;

      Eigen::Matrix<double, 6, 6> ji = Eigen::Matrix<double, 6, 6>::Zero();
      Eigen::Matrix<double, 6, 6> jj = Eigen::Matrix<double, 6, 6>::Zero();
      const Eigen::Matrix3d base = so3_right_jacobian_inverse(r.head<3>()) *
                                   qj.conjugate().toRotationMatrix();
      ji.topLeftCorner<3, 3>() = -base;
      jj.topLeftCorner<3, 3>() = base;
      ji.bottomLeftCorner<3, 3>() =
          ri_t * skew(Eigen::Vector3d(state.poses[e.j].translation -
                                      state.poses[e.i].translation));
      ji.bottomRightCorner<3, 3>() = -ri_t;
      jj.bottomRightCorner<3, 3>() = ri_t;

      Eigen::Matrix<double, 6, 6> w = sqrt_info<6>(e.info);
      w *= std::sqrt(loss_weight(g.rel_loss, r.dot(e.info * r)));
      eq.add({{offset[e.i], Eigen::MatrixXd(w * ji)}, {offset[e.j], Eigen::MatrixXd(w * jj)}},
             w * r);
    }
    for (const auto& e : g.abs_pose_edges) {
      const Rot3& qi = state.poses[e.i].rotation;
      Eigen::Matrix<double, 6, 1> r;
      r.head<3>() = so3_log(e.t_i.rotation.conjugate() * qi);
      r.tail<3>() = state.poses[e.i].translation - e.t_i.translation;
      Eigen::Matrix<double, 6, 6> j = Eigen::Matrix<double, 6, 6>::Zero();
      j.topLeftCorner<3, 3>() =
          so3_right_jacobian_inverse(r.head<3>()) * qi.conjugate().toRotationMatrix();
      j.bottomRightCorner<3, 3>() = Eigen::Matrix3d::Identity();
      const Eigen::Matrix<double, 6, 6> w = sqrt_info<6>(e.info);
      eq.add({{offset[e.i], Eigen::MatrixXd(w * j)}}, w * r);
    }
    for (const auto& e : g.abs_pos_edges) {
      const Eigen::Vector3d mapped = state.frame * e.p_i;
      const Eigen::Vector3d r = mapped - state.poses[e.i].translation;
      Eigen::Matrix3d w = sqrt_info<3>(e.info);
      w *= std::sqrt(loss_weight(g.abs_pos_loss, r.dot(e.info * r)));
      Eigen::Matrix<double, 3, 6> jp = Eigen::Matrix<double, 3, 6>::Zero();
      jp.rightCols<3>() = -Eigen::Matrix3d::Identity();
      std::vector<std::pair<int, Eigen::MatrixXd>> blocks{{offset[e.i], Eigen::MatrixXd(w * jp)}};
      if (frame_offset >= 0) {
        Eigen::Matrix<double, 3, 6> jf;
        jf.leftCols<3>() = -skew(Eigen::Vector3d(state.frame.rotation * e.p_i));
        jf.rightCols<3>() = Eigen::Matrix3d::Identity();
        blocks.emplace_back(frame_offset, Eigen::MatrixXd(w * jf));
      }
      eq.add(blocks, w * r);
    }

    Eigen::VectorXd delta;
    try {
      delta = eq.solve(lambda);
    } catch (const std::runtime_error&) {
      lambda *= 10.0;
      if (lambda > 1e12) {
        rep.converged = false;
        rep.message = "failed to converge";
        break;
      }
      continue;
    }
    const FullState trial = apply(state, delta);
    const double trial_cost = full_cost(g, trial);
    if (trial_cost <= cost && delta.allFinite()) {
      const double drop = cost - trial_cost;
      state = trial;
      cost = trial_cost;
      rep.accepted_costs.push_back(cost);
      ++rep.iterations;
      lambda = std::max(lambda / 10.0, 1e-12);
      if (drop <= tol * std::max(1.0, cost) || delta.norm() < 1e-10) break;
    } else {
      lambda *= 10.0;
      if (lambda > 1e12) {
        rep.converged = false;
        rep.message = "failed to converge";
        break;
      }
    }
  }

  rep.final_cost = cost;
  if (report) *report = rep;
  PoseGraph out = g;
  for (size_t i = 0; i < out.nodes.size(); ++i) out.nodes[i].pose = state.poses[i];
  out.frame_transform = state.frame;
  return {out, cost};
}

std::pair<PoseGraph, CascadeReport> cascaded_pgo(const PoseGraph& g, const CascadeConfig& cfg) {
  CascadeReport report;
  PoseGraph current = g;
  if (cfg.run_rotation)
    current = optimize_rotations(current, cfg.max_iters, cfg.tol, &report.rotation);
  if (cfg.run_translation)
    current = optimize_translations(current, cfg.max_iters, cfg.tol, &report.translation);
  if (cfg.run_full)
    current = optimize_full(current, cfg.max_iters, cfg.tol, &report.full).first;
  return {current, report};
}

}  // namespace trajsync
