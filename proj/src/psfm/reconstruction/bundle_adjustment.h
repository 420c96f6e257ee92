#pragma once

#include <set>
#include <vector>

#include "psfm/kernels/execution.h"
#include "psfm/reconstruction/local_reconstruction.h"
#include "psfm/viewgraph/view_graph.h"

namespace psfm {

struct BundleAdjustmentOptions {
  int max_iterations = 50;
  double min_relative_decrease = 1e-8;
  double initial_lambda = 1e-3;
  Execution execution = Execution::kParallel;
};

// Full scope optimizes every registered pose (gauge: first camera fixed and
// one center coordinate of the second camera fixed) and every triangulated
// point. Local scope optimizes the listed poses and the points they observe;
// all other cameras stay fixed.
struct BundleScope {
  bool full = true;
  std::set<view_t> variable_views;

  static BundleScope Full() { return {}; }
  static BundleScope Local(std::set<view_t> views) {
    return {false, std::move(views)};
  }
};

struct BundleAdjustmentReport {
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int iterations = 0;
  int accepted_steps = 0;
  // Cost after each accepted step, starting with the initial cost.
  std::vector<double> cost_history;
};

// Levenberg-Marquardt on the sum of squared pixel reprojection errors with a
// Schur complement on the points. Only cost-decreasing steps are accepted.
BundleAdjustmentReport BundleAdjust(const ViewGraph& graph,
                                    const BundleScope& scope,
                                    const BundleAdjustmentOptions& options,
                                    LocalReconstruction* recon);

}  // namespace psfm
