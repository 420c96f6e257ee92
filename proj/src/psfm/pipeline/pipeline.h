#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "psfm/clustering/partition.h"
#include "psfm/geometry/sim3.h"
#include "psfm/kernels/execution.h"
#include "psfm/reconstruction/cluster_reconstruction.h"
#include "psfm/reconstruction/local_reconstruction.h"
#include "psfm/reconstruction/options.h"
#include "psfm/registration/cluster_graph.h"
#include "psfm/rotation_averaging/rotation_averaging.h"
#include "psfm/simulator/evaluate.h"
#include "psfm/simulator/scene.h"
#include "psfm/simulator/stream.h"
#include "psfm/viewgraph/view_graph.h"

namespace psfm {

struct PipelineOptions {
  std::uint32_t min_correspondences = ViewGraph::kDefaultMinCorrespondences;
  double eta = 0.2;
  RotationAveragingOptions rotation;
  ReconstructionOptions reconstruction;
  ConstraintOptions constraints;
  PoseGraphOptions pose_graph;
  // Fan-out of the per-cluster jobs of one timestep.
  Execution execution = Execution::kParallel;
};

struct ClusterSummary {
  cluster_t cluster = kInvalidClusterId;
  std::size_t views = 0;
  std::size_t registered = 0;
  std::size_t points = 0;
  double reprojection_rmse_px = 0.0;
  double rho_l_deg = 0.0;
  // Reconstruction path taken this timestep; empty when skipped.
  std::string path;
  bool reset = false;
  // Rotation averaging of this timestep, when it ran.
  bool averaged = false;
  std::vector<ViewPair> removed_edges;
  std::vector<std::size_t> residual_histogram;
};

// Upper bin edges, degrees, of ClusterSummary::residual_histogram; the last
// bin is open.
inline constexpr double kResidualHistogramEdgesDeg[] = {1.0, 2.0, 5.0, 10.0, 20.0, 45.0, 90.0};

struct Snapshot {
  std::uint64_t timestep = 0;
  std::map<cluster_t, std::vector<view_t>> partition;
  std::vector<ClusterSummary> clusters;
  ClusterGraph cluster_graph;
  // Components of the cluster graph.
  std::vector<std::vector<cluster_t>> effective_clusters;
  Metrics metrics;
  bool has_truth = false;
  std::size_t recoveries_this_step = 0;
  // Clusters whose reconstruction ran this timestep.
  std::size_t reconstructed_clusters = 0;

  nlohmann::json ToJson() const;
};

// Progressive reconstruction over a stream of match events. Views must
// arrive with dense ids in order. When a ground-truth scene is given, each
// snapshot carries the evaluation metrics of the current model.
class Pipeline {
 public:
  explicit Pipeline(PipelineOptions options = {}, const Scene* truth = nullptr);

  // Throws InvalidArgument for a malformed event, leaving the state
  // unchanged.
  Snapshot ProcessEvent(const MatchEvent& event);

  const ViewGraph& graph() const { return graph_; }
  const Partition& partition() const { return partition_; }
  const std::map<cluster_t, LocalReconstruction>& reconstructions() const {
    return reconstructions_;
  }
  const ClusterGraph& cluster_graph() const { return cluster_graph_; }
  std::size_t recoveries() const { return recoveries_; }
  // Ground-truth camera index of each view, -1 when unknown.
  const std::vector<int>& cameras() const { return cameras_; }

  // Registered cameras placed in the frame of their effective cluster.
  std::vector<EvaluatedCamera> ModelCameras() const;

 private:
  void Validate(const MatchEvent& event) const;

  PipelineOptions options_;
  const Scene* truth_;
  ViewGraph graph_;
  Partition partition_;
  std::map<cluster_t, LocalReconstruction> reconstructions_;
  ClusterGraph cluster_graph_;
  std::vector<int> cameras_;
  std::size_t recoveries_ = 0;
};

// World position of a cluster-frame point.
inline Eigen::Vector3d ToWorld(const ClusterGraph& graph, cluster_t cluster,
                               const Eigen::Vector3d& point) {
  const auto it = graph.nodes.find(cluster);
  return it == graph.nodes.end() ? point : it->second * point;
}

}  // namespace psfm
