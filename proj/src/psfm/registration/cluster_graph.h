#pragma once

#include <map>
#include <set>
#include <vector>

#include "json.hpp"
#include "psfm/geometry/sim3.h"
#include "psfm/kernels/execution.h"
#include "psfm/reconstruction/local_reconstruction.h"
#include "psfm/util/types.h"
#include "psfm/viewgraph/view_graph.h"

namespace psfm {

// Constraint T_ab mapping coordinates of cluster b into cluster a.
struct ClusterEdge {
  cluster_t a = kInvalidClusterId;
  cluster_t b = kInvalidClusterId;
  Sim3 transform;
  std::size_t support = 0;
};

// Node poses are world-from-cluster similarities.
struct ClusterGraph {
  std::map<cluster_t, Sim3> nodes;
  std::vector<ClusterEdge> edges;

  // Connected components, each sorted, ordered by lowest id.
  std::vector<std::vector<cluster_t>> Components() const;
  nlohmann::json ToJson() const;
};

struct ConstraintOptions {
  double lambda_c = 0.9;
  // Sim(3) inlier distance as a fraction of the destination diameter.
  double relative_threshold = 0.02;
  double ransac_confidence = 0.999;
  int ransac_max_iterations = 1000;
  Execution execution = Execution::kParallel;
};

// Outcome of the first filtering stage for one inter-cluster viewgraph edge.
struct EdgeEvidence {
  ViewPair views;
  cluster_t a = kInvalidClusterId;
  cluster_t b = kInvalidClusterId;
  std::size_t num_pairs = 0;
  std::size_t num_inliers = 0;
  double similarity = 0.0;
  bool accepted = false;
};

// Robust scene diameter: diagonal of the 2nd-98th percentile box of the
// triangulated points joined with the camera centers.
double SceneDiameter(const LocalReconstruction& recon);

// 3D-3D pairs (point in cluster of view j, point in cluster of view i) from
// the edge's matches whose features are triangulated in both reconstructions.
void EdgePointPairs(const ViewGraph& graph, ViewPair edge,
                    const LocalReconstruction& recon_i,
                    const LocalReconstruction& recon_j,
                    std::vector<Eigen::Vector3d>* src,
                    std::vector<Eigen::Vector3d>* dst);

// Two-stage constraint collection: per inter-cluster edge a Sim(3) RANSAC
// scored by neighborhood similarity (rejected below lambda_c), then one
// constraint per cluster pair refit on the pooled inlier pairs of its
// surviving edges. Every reconstruction with two or more registered views
// becomes a node.
ClusterGraph CollectConstraints(
    const ViewGraph& graph,
    const std::map<cluster_t, LocalReconstruction>& reconstructions,
    const ConstraintOptions& options,
    std::vector<EdgeEvidence>* evidence = nullptr);

struct PoseGraphOptions {
  double huber = 0.1;
  int max_iterations = 100;
  double min_relative_decrease = 1e-12;
};

struct PoseGraphReport {
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int iterations = 0;
  // Robust cost after each accepted step, starting with the initial cost.
  std::vector<double> cost_history;
};

// Huber-robust pose graph on the Sim(3) chart residual
// Log(T_ab^-1 * P_a^-1 * P_b), translation part divided by the mean
// constraint baseline. Each component pins its lowest id to the identity
// and is initialized along a maximum-support spanning tree.
std::map<cluster_t, Sim3> OptimizeClusterPoses(const ClusterGraph& graph,
                                               const PoseGraphOptions& options,
                                               PoseGraphReport* report = nullptr);

// Robust cost of the given poses under the graph's constraints.
double PoseGraphCost(const ClusterGraph& graph,
                     const std::map<cluster_t, Sim3>& poses,
                     const PoseGraphOptions& options);

}  // namespace psfm
