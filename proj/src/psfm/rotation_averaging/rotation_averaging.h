#pragma once

#include <map>
#include <set>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"

#include "psfm/util/types.h"
#include "psfm/viewgraph/subgraph.h"

namespace psfm {

struct GlobalRotations {
  // World-to-camera rotation of every view.
  std::map<view_t, Eigen::Matrix3d> rotations;
  view_t gauge = kInvalidViewId;
};

struct AveragingReport {
  std::set<ViewPair> removed_edges;
  std::map<ViewPair, double> per_edge_residual_deg;
  int iterations = 0;
  bool converged = false;
  // Weighted sum of residual angles after each accepted sweep, starting
  // with the initial value.
  std::vector<double> objective_history;

  nlohmann::json ToJson() const;
};

struct RotationAveragingOptions {
  double irls_epsilon = 1e-5;     // radians
  double tolerance = 1e-3;        // radians
  int max_iterations = 100;
  int max_irls_iterations = 100;
  double rho_gmax_deg = 10.0;
};

// Chains relative rotations along a maximum-weight spanning tree (weights
// M_ij) from the lowest view id. Throws DegenerateInput listing the
// components when the subgraph is disconnected.
GlobalRotations MstInitialize(const ClusterSubgraph& subgraph);

// Robust L1 averaging by iteratively reweighted least squares on the Lie
// algebra. Sweeps that would increase the objective are step-halved.
GlobalRotations SolveL1(const ClusterSubgraph& subgraph,
                        const GlobalRotations& init,
                        const RotationAveragingOptions& options = {},
                        AveragingReport* report = nullptr);

// Residual angle of R_ij against R_j R_i^T, in degrees.
double RotationResidualDeg(const Eigen::Matrix3d& relative,
                           const Eigen::Matrix3d& rotation_i,
                           const Eigen::Matrix3d& rotation_j);

// Marks every edge whose residual strictly exceeds rho_gmax_deg.
AveragingReport FilterEdges(const ClusterSubgraph& subgraph,
                            const GlobalRotations& rotations,
                            double rho_gmax_deg);

}  // namespace psfm
