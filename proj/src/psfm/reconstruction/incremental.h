#pragma once

#include <optional>
#include <random>
#include <set>
#include <span>
#include <vector>

#include "psfm/geometry/camera.h"
#include "psfm/reconstruction/local_reconstruction.h"
#include "psfm/reconstruction/options.h"
#include "psfm/viewgraph/subgraph.h"
#include "psfm/viewgraph/view_graph.h"

namespace psfm {

struct AbsolutePoseResult {
  bool success = false;
  CameraPose pose;
  std::vector<char> inlier_mask;
  std::size_t num_inliers = 0;
};

// P3P inside RANSAC with adaptive termination. Inliers reproject within
// options.pixel_threshold and lie in front of the camera.
AbsolutePoseResult EstimateAbsolutePoseRansac(
    std::span<const Eigen::Vector2d> pixels,
    std::span<const Eigen::Vector3d> points, const Intrinsics& intrinsics,
    const ReconstructionOptions& options, std::mt19937_64* rng);

enum class RegistrationOutcome { kRegistered, kDeferred, kRejected };

// Registers `view` from its observations of triangulated tracks, refines it
// by local bundle adjustment, splits the tracks whose observation in `view`
// is a RANSAC outlier, triangulates newly observed tracks and runs a full
// adjustment when the model grew by more than eta_grow.
RegistrationOutcome RegisterView(const ViewGraph& graph, view_t view,
                                 const ReconstructionOptions& options,
                                 LocalReconstruction* recon,
                                 bool* ran_full_ba = nullptr);

// Linear triangulation from the registered observations, accepted iff every
// registered observation reprojects within the pixel threshold and the
// triangulation angle exceeds the minimum. On failure with three or more
// observations the largest consistent subset is kept and the remaining
// observations are returned as conflicted split-offs.
bool TriangulateTrack(const ViewGraph& graph,
                      const std::map<view_t, CameraPose>& poses,
                      const ReconstructionOptions& options, Track* track,
                      std::vector<Track>* split_off = nullptr);

// Triangulates every untriangulated track with two or more registered
// observations and re-validates triangulated ones. Returns the number of
// triangulated tracks afterwards.
std::size_t TriangulateAll(const ViewGraph& graph,
                           const ReconstructionOptions& options,
                           LocalReconstruction* recon);

// Median angle between matched viewing rays under the edge geometry.
double MedianTriangulationAngleDeg(const ViewGraph& graph, ViewPair pair,
                                   const ViewGraphEdge& edge);

// Highest-M edge whose median triangulation angle exceeds the threshold,
// falling back to the highest-M edge. Throws DegenerateInput when no edge is
// eligible.
ViewPair SelectSeedPair(const ClusterSubgraph& subgraph, const ViewGraph& graph,
                        const ReconstructionOptions& options,
                        const std::set<ViewPair>& excluded = {});

// Two-view model: first camera at the origin with identity rotation, second
// from the edge geometry at unit baseline; shared tracks triangulated and a
// two-view bundle adjustment applied. Throws DegenerateInput with fewer than
// 8 shared tracks.
LocalReconstruction InitializeTwoView(const ViewGraph& graph, ViewPair pair,
                                      const RelativeGeometry& geometry,
                                      std::vector<Track> tracks,
                                      const ReconstructionOptions& options);

// Repeatedly registers the unregistered views of `views` that observe the
// most triangulated tracks until no further view can be added. Returns the
// views left unregistered.
std::set<view_t> GrowReconstruction(const ViewGraph& graph,
                                    const std::vector<view_t>& views,
                                    const ReconstructionOptions& options,
                                    LocalReconstruction* recon);

}  // namespace psfm
