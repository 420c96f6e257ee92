#pragma once

#include <map>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "psfm/util/types.h"
#include "psfm/viewgraph/subgraph.h"
#include "psfm/viewgraph/view_graph.h"

namespace psfm {

enum class TrackState { kUntriangulated, kTriangulated, kConflicted };

struct TrackElement {
  point2D_t point2D_idx = 0;
  Eigen::Vector2d pixel = Eigen::Vector2d::Zero();
};

struct Track {
  // At most one observation per view.
  std::map<view_t, TrackElement> observations;
  std::optional<Eigen::Vector3d> point;
  TrackState state = TrackState::kUntriangulated;

  bool IsTriangulated() const { return state == TrackState::kTriangulated; }
  void ClearPoint() {
    point.reset();
    state = TrackState::kUntriangulated;
  }
};

// Key of one 2D feature in one view.
struct FeatureKey {
  view_t view = kInvalidViewId;
  point2D_t point2D_idx = 0;
  auto operator<=>(const FeatureKey&) const = default;
};

// Chains the matches of all subgraph edges into tracks with a union-find
// that refuses any merge putting two keypoints of one view into one track.
// Edges are processed by decreasing match count. Tracks with fewer than two
// observations are dropped.
std::vector<Track> BuildTracks(const ClusterSubgraph& subgraph,
                               const ViewGraph& graph);

// Lookup from feature to track index.
std::map<FeatureKey, std::size_t> IndexTracks(const std::vector<Track>& tracks);

}  // namespace psfm
