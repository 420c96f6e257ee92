#pragma once

#include <set>
#include <string>
#include <vector>

#include "psfm/reconstruction/local_reconstruction.h"
#include "psfm/reconstruction/options.h"
#include "psfm/rotation_averaging/rotation_averaging.h"
#include "psfm/viewgraph/subgraph.h"
#include "psfm/viewgraph/view_graph.h"

namespace psfm {

// Views of a source reconstruction moving into the cluster being built.
struct TransferSource {
  const LocalReconstruction* source = nullptr;
  std::set<view_t> views;
};

struct ClusterReconstructionInput {
  cluster_t cluster = kInvalidClusterId;
  // Rotation-filtered subgraph of the cluster.
  const ClusterSubgraph* subgraph = nullptr;
  const GlobalRotations* rotations = nullptr;
  // Previous reconstruction of this cluster, if any.
  const LocalReconstruction* prior = nullptr;
  std::vector<TransferSource> transfers;
};

enum class ReconstructionPath { kEmpty, kIncremental, kGlobal, kExtend, kTransfer };

std::string ToString(ReconstructionPath path);

struct ClusterReconstructionReport {
  ReconstructionPath path = ReconstructionPath::kEmpty;
  std::size_t grafted_views = 0;
  std::size_t deferred_transfers = 0;
  // rho_l of the assembled model before any reset.
  double initial_rho_l_deg = 0.0;
  bool reset = false;
  // The rebuild after a reset failed as well; the cluster is left empty.
  bool rebuild_failed = false;
};

// Largest rotation disagreement, in degrees, between the reconstruction and
// the averaged rotations over the subgraph edges whose endpoints are both
// registered and averaged. 0 without such edges.
double DetectBadConfiguration(const LocalReconstruction& recon,
                              const ClusterSubgraph& subgraph,
                              const GlobalRotations& rotations);

// Rotations from averaging; centers from the direction constraints
// d_ij x (c_i - c_j) = 0 with d_ij = R_j^T t_ij, solved as the smallest
// eigenvector with the first center at the origin, oriented so most
// constraints point forward, and scaled to mean baseline 1. Tracks are then
// triangulated and bundle adjusted. Throws DegenerateInput when the center
// system has more than a one-dimensional null space.
LocalReconstruction GlobalInitialize(const ViewGraph& graph,
                                     const ClusterSubgraph& subgraph,
                                     const GlobalRotations& rotations,
                                     std::vector<Track> tracks,
                                     const ReconstructionOptions& options);

// Incremental build from the best seed pair not in `excluded`. Returns an
// empty reconstruction when no seed pair initializes.
LocalReconstruction BuildIncremental(const ViewGraph& graph,
                                     const ClusterSubgraph& subgraph,
                                     const std::vector<Track>& tracks,
                                     const ReconstructionOptions& options,
                                     std::set<ViewPair> excluded = {});

// Grafts the registered `group` views of `source` into `dest`. Into an empty
// destination the poses and points are taken as they are; otherwise a
// Sim(3) estimated on tracks triangulated in both maps the graft into the
// destination frame. Returns false, leaving `dest` unchanged, with fewer
// than min_transfer_common_tracks common tracks or without a consensus.
// `dest` must hold the tracks of the destination cluster; grafted points are
// attached to the tracks sharing a feature with them.
bool TransferSubmodel(const ViewGraph& graph, const LocalReconstruction& source,
                      const std::set<view_t>& group,
                      const ReconstructionOptions& options,
                      LocalReconstruction* dest);

// New / Extend / Transfer dispatch followed by the bad-configuration check
// with one reset-and-rebuild. Tracks are rebuilt from the subgraph and
// warm-started from the prior and transferred points.
LocalReconstruction ReconstructCluster(const ViewGraph& graph,
                                       const ClusterReconstructionInput& input,
                                       const ReconstructionOptions& options,
                                       ClusterReconstructionReport* report = nullptr);

}  // namespace psfm
