#include "psfm/reconstruction/bundle_adjustment.h"

#include <algorithm>
#include <cmath>
#include <map>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "psfm/geometry/so3.h"
#include "psfm/kernels/ba_linearization.h"

namespace psfm {
namespace {

using Matrix6d = Eigen::Matrix<double, 6, 6>;
using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix63d = Eigen::Matrix<double, 6, 3>;

struct Problem {
  std::vector<view_t> camera_views;
  std::vector<CameraPose> cameras;
  // Variable index per camera, -1 when fixed.
  std::vector<int> camera_variable;
  int num_variable_cameras = 0;
  // Camera whose center coordinate `fixed_coordinate` is held constant.
  int partial_camera = -1;
  int fixed_coordinate = 0;
  std::vector<std::size_t> point_tracks;
  std::vector<Eigen::Vector3d> points;
  std::vector<BAObservation> observations;
};

Problem BuildProblem(const ViewGraph& graph, const BundleScope& scope,
                     const LocalReconstruction& recon) {
  Problem problem;
  std::map<view_t, int> camera_index;
  const auto camera_of = [&](view_t view) {
    const auto [it, inserted] =
        camera_index.emplace(view, static_cast<int>(problem.cameras.size()));
    if (inserted) {
      problem.camera_views.push_back(view);
      problem.cameras.push_back(recon.poses.at(view));
    }
    return it->second;
  };

  for (std::size_t t = 0; t < recon.tracks.size(); ++t) {
    const Track& track = recon.tracks[t];
    if (!track.IsTriangulated()) continue;
    int registered_obs = 0;
    bool touches_variable = scope.full;
    for (const auto& [view, element] : track.observations) {
      if (!recon.registered.count(view)) continue;
      ++registered_obs;
      if (scope.variable_views.count(view)) touches_variable = true;
    }
    if (registered_obs < 2 || !touches_variable) continue;
    const int point = static_cast<int>(problem.points.size());
    problem.points.push_back(*track.point);
    problem.point_tracks.push_back(t);
    for (const auto& [view, element] : track.observations) {
      if (!recon.registered.count(view)) continue;
      problem.observations.push_back(
          {camera_of(view), point, element.pixel, &graph.ViewIntrinsics(view)});
    }
  }

  problem.camera_variable.assign(problem.cameras.size(), -1);
  if (scope.full) {
    view_t first = kInvalidViewId;
    view_t second = kInvalidViewId;
    if (recon.seed_pair && recon.registered.count(recon.seed_pair->first) &&
        recon.registered.count(recon.seed_pair->second)) {
      first = recon.seed_pair->first;
      second = recon.seed_pair->second;
    } else if (recon.registered.size() >= 2) {
      first = *recon.registered.begin();
      second = *std::next(recon.registered.begin());
    }
    for (std::size_t c = 0; c < problem.cameras.size(); ++c) {
      if (problem.camera_views[c] != first) {
        problem.camera_variable[c] = problem.num_variable_cameras++;
      }
      if (problem.camera_views[c] == second) {
        problem.partial_camera = static_cast<int>(c);
      }
    }
    if (problem.partial_camera >= 0 && camera_index.count(first)) {
      const Eigen::Vector3d baseline =
          recon.poses.at(second).center - recon.poses.at(first).center;
      baseline.cwiseAbs().maxCoeff(&problem.fixed_coordinate);
    } else {
      problem.partial_camera = -1;
    }
  } else {
    for (std::size_t c = 0; c < problem.cameras.size(); ++c) {
      if (scope.variable_views.count(problem.camera_views[c])) {
        problem.camera_variable[c] = problem.num_variable_cameras++;
      }
    }
  }
  return problem;
}

struct Step {
  Eigen::VectorXd cameras;
  std::vector<Eigen::Vector3d> points;
};

// Damped normal equations reduced onto the cameras.
bool SolveStep(const Problem& problem, const BALinearization& lin,
               double lambda, Step* step) {
  const int nc = problem.num_variable_cameras;
  const std::size_t np = problem.points.size();
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(6 * nc, 6 * nc);
  Eigen::VectorXd gc = Eigen::VectorXd::Zero(6 * nc);
  std::vector<Eigen::Matrix3d> v(np, Eigen::Matrix3d::Zero());
  std::vector<Eigen::Vector3d> gp(np, Eigen::Vector3d::Zero());
  std::vector<std::vector<std::pair<int, Matrix63d>>> w(np);

  for (std::size_t k = 0; k < problem.observations.size(); ++k) {
    if (!lin.valid[k]) continue;
    const BAObservation& obs = problem.observations[k];
    const Eigen::Vector2d& r = lin.residuals[k];
    const PointJacobian& jp = lin.point_jacobians[k];
    v[obs.point] += jp.transpose() * jp;
    gp[obs.point] -= jp.transpose() * r;
    const int c = problem.camera_variable[obs.camera];
    if (c < 0) continue;
    CameraJacobian jc = lin.camera_jacobians[k];
    if (obs.camera == problem.partial_camera) {
      jc.col(3 + problem.fixed_coordinate).setZero();
    }
    u.block<6, 6>(6 * c, 6 * c) += jc.transpose() * jc;
    gc.segment<6>(6 * c) -= jc.transpose() * r;
    w[obs.point].emplace_back(c, jc.transpose() * jp);
  }

  for (int i = 0; i < 6 * nc; ++i) {
    u(i, i) += lambda * std::max(u(i, i), 1e-9);
  }
  if (problem.partial_camera >= 0) {
    const int c = problem.camera_variable[problem.partial_camera];
    if (c >= 0) {
      const int i = 6 * c + 3 + problem.fixed_coordinate;
      u(i, i) += 1.0;
    }
  }

  std::vector<Eigen::Matrix3d> v_inv(np);
  for (std::size_t p = 0; p < np; ++p) {
    Eigen::Matrix3d damped = v[p];
    for (int i = 0; i < 3; ++i) {
      damped(i, i) += lambda * std::max(damped(i, i), 1e-9);
    }
    bool invertible = false;
    damped.computeInverseWithCheck(v_inv[p], invertible);
    if (!invertible) return false;
  }

  Eigen::MatrixXd s = u;
  Eigen::VectorXd rhs = gc;
  for (std::size_t p = 0; p < np; ++p) {
    for (const auto& [a, wa] : w[p]) {
      const Matrix63d wa_vinv = wa * v_inv[p];
      rhs.segment<6>(6 * a) -= wa_vinv * gp[p];
      for (const auto& [b, wb] : w[p]) {
        s.block<6, 6>(6 * a, 6 * b) -= wa_vinv * wb.transpose();
      }
    }
  }

  step->cameras = Eigen::VectorXd::Zero(6 * nc);
  if (nc > 0) {
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(s);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return false;
    step->cameras = ldlt.solve(rhs);
    if (!step->cameras.allFinite()) return false;
  }
  step->points.resize(np);
  for (std::size_t p = 0; p < np; ++p) {
    Eigen::Vector3d b = gp[p];
    for (const auto& [a, wa] : w[p]) {
      b -= wa.transpose() * step->cameras.segment<6>(6 * a);
    }
    step->points[p] = v_inv[p] * b;
  }
  return true;
}

void ApplyStep(const Problem& problem, const Step& step,
               std::vector<CameraPose>* cameras,
               std::vector<Eigen::Vector3d>* points) {
  for (std::size_t c = 0; c < cameras->size(); ++c) {
    const int var = problem.camera_variable[c];
    if (var < 0) continue;
    const Vector6d d = step.cameras.segment<6>(6 * var);
    CameraPose& pose = (*cameras)[c];
    pose.rotation = ProjectToRotation(SO3Exp(d.head<3>()) * pose.rotation);
    pose.center += d.tail<3>();
  }
  for (std::size_t p = 0; p < points->size(); ++p) {
    (*points)[p] += step.points[p];
  }
}

}  // namespace

BundleAdjustmentReport BundleAdjust(const ViewGraph& graph,
                                    const BundleScope& scope,
                                    const BundleAdjustmentOptions& options,
                                    LocalReconstruction* recon) {
  BundleAdjustmentReport report;
  Problem problem = BuildProblem(graph, scope, *recon);
  double cost = ReprojectionCost(problem.cameras, problem.points,
                                 problem.observations, options.execution);
  report.initial_cost = cost;
  report.final_cost = cost;
  report.cost_history.push_back(cost);
  if (problem.observations.empty() || !std::isfinite(cost)) {
    return report;
  }

  double lambda = options.initial_lambda;
  BALinearization lin;
  Step step;
  std::vector<CameraPose> candidate_cameras;
  std::vector<Eigen::Vector3d> candidate_points;
  for (int iteration = 0; iteration < options.max_iterations; ++iteration) {
    if (cost <= 1e-16) break;
    report.iterations = iteration + 1;
    LinearizeObservations(problem.cameras, problem.points,
                          problem.observations, options.execution, &lin);
    bool accepted = false;
    double decrease = 0.0;
    for (int attempt = 0; attempt < 10 && lambda < 1e12; ++attempt) {
      if (SolveStep(problem, lin, lambda, &step)) {
        candidate_cameras = problem.cameras;
        candidate_points = problem.points;
        ApplyStep(problem, step, &candidate_cameras, &candidate_points);
        const double candidate_cost =
            ReprojectionCost(candidate_cameras, candidate_points,
                             problem.observations, options.execution);
        if (candidate_cost < cost) {
          decrease = (cost - candidate_cost) / cost;
          problem.cameras.swap(candidate_cameras);
          problem.points.swap(candidate_points);
          cost = candidate_cost;
          lambda = std::max(lambda / 3.0, 1e-12);
          accepted = true;
          break;
        }
      }
      lambda *= 5.0;
    }
    if (!accepted) break;
    ++report.accepted_steps;
    report.cost_history.push_back(cost);
    if (decrease < options.min_relative_decrease) break;
  }

  report.final_cost = cost;
  for (std::size_t c = 0; c < problem.cameras.size(); ++c) {
    if (problem.camera_variable[c] >= 0) {
      recon->poses[problem.camera_views[c]] = problem.cameras[c];
    }
  }
  for (std::size_t p = 0; p < problem.points.size(); ++p) {
    recon->tracks[problem.point_tracks[p]].point = problem.points[p];
  }
  return report;
}

}  // namespace psfm
