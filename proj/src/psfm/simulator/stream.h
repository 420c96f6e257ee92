#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"
#include "psfm/geometry/camera.h"
#include "psfm/geometry/relative_geometry.h"
#include "psfm/simulator/scene.h"
#include "psfm/util/types.h"
#include "psfm/viewgraph/view_graph.h"

namespace psfm {

enum class OrderingKind { kLinear, kShuffled, kPeriodic };

struct Ordering {
  OrderingKind kind = OrderingKind::kLinear;
  std::uint64_t seed = 0;
  // Periodic ordering interleaves camera i with camera i + period inside
  // consecutive blocks of 2 * period cameras.
  int period = 10;
};

std::string ToString(OrderingKind kind);
// Throws InvalidArgument for unknown names.
OrderingKind OrderingKindFromString(const std::string& name);

// Camera index of every arrival. Throws InvalidArgument for a periodic
// period < 1.
std::vector<int> MakeOrdering(int num_cameras, const Ordering& ordering);

enum class EdgeLabel { kGenuine, kSymmetryConfusion };

struct EventEdge {
  view_t other = kInvalidViewId;
  // Geometry from `other` to the arriving view; matches as (keypoint in
  // other, keypoint in the arriving view).
  RelativeGeometry geometry;
  std::vector<FeatureMatch> matches;
  EdgeLabel label = EdgeLabel::kGenuine;
};

struct MatchEvent {
  view_t view = kInvalidViewId;
  // Ground-truth camera index in the scene.
  int camera = -1;
  Intrinsics intrinsics;
  std::vector<Eigen::Vector2d> keypoints;
  std::vector<EventEdge> edges;
};

struct StreamOptions {
  Ordering ordering;
  double confusion_rate = 0.5;
  NoiseModel noise;
  int retrieval_top_k = 20;
  std::uint32_t min_correspondences = ViewGraph::kDefaultMinCorrespondences;
  std::uint64_t seed = 0;
};

// Each arriving view is matched against the prior views with the largest
// overlap (shared visibility, or symmetric overlap scaled by the confusion
// rate). A pair becomes a genuine edge with noisy ground-truth geometry when
// the shared visibility is at least the scaled symmetric overlap, and a
// confusion edge consistent with the symmetric copy of the structure
// otherwise. Edges below min_correspondences are dropped.
std::vector<MatchEvent> GenerateStream(const Scene& scene,
                                       const StreamOptions& options);

nlohmann::json StreamToJson(const std::vector<MatchEvent>& events);
std::vector<MatchEvent> StreamFromJson(const nlohmann::json& json);

// Keypoint pixels of every camera: projections plus Gaussian noise, one per
// visible point in visibility order.
std::vector<std::vector<Eigen::Vector2d>> MakeKeypoints(const Scene& scene,
                                                        double pixel_sigma,
                                                        std::uint64_t seed);

}  // namespace psfm
