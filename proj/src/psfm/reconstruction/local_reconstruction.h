#pragma once

#include <map>
#include <optional>
#include <set>
#include <vector>

#include "json.hpp"

#include "psfm/geometry/camera.h"
#include "psfm/reconstruction/track.h"
#include "psfm/util/types.h"
#include "psfm/viewgraph/view_graph.h"

namespace psfm {

struct LocalReconstruction {
  cluster_t cluster = kInvalidClusterId;
  std::map<view_t, CameraPose> poses;
  std::vector<Track> tracks;
  // Views with estimated poses; keys of `poses`.
  std::set<view_t> registered;
  // Registered count at the last full bundle adjustment.
  std::size_t registered_at_full_ba = 0;
  // Seed pair of the incremental build, if any.
  std::optional<ViewPair> seed_pair;
  // Largest rotation disagreement with the averaged rotations, degrees.
  double rho_l_deg = 0.0;

  bool Empty() const { return registered.empty(); }

  // Fraction of registered views added since the last full adjustment.
  double DirtyGrowth() const;

  std::size_t NumTriangulated() const;

  // Root mean squared reprojection error over all observations of
  // triangulated tracks in registered views, pixels. 0 when empty.
  double ReprojectionRmse(const ViewGraph& graph) const;

  // Largest reprojection error of any triangulated observation, pixels.
  double MaxReprojectionError(const ViewGraph& graph) const;

  void AddPose(view_t view, const CameraPose& pose);
  void RemovePose(view_t view);

  nlohmann::json ToJson(const ViewGraph& graph) const;
};

}  // namespace psfm
