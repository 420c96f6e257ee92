#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "json.hpp"

#include "psfm/geometry/camera.h"
#include "psfm/geometry/relative_geometry.h"
#include "psfm/util/types.h"

namespace psfm {

// Keypoint correspondence of an edge, oriented as (first view, second view)
// of the edge's ViewPair.
struct FeatureMatch {
  point2D_t point2D_idx1 = 0;
  point2D_t point2D_idx2 = 0;
  bool operator==(const FeatureMatch&) const = default;
};

struct ViewGraphEdge {
  // Oriented from pair.first to pair.second.
  RelativeGeometry geometry;
  std::vector<FeatureMatch> matches;
};

enum class EdgeAdmission { kAdmitted, kRejectedBelowThreshold };

// Dynamic undirected viewgraph with the symmetric matching matrix M and the
// two-view geometry of every admitted edge. Single writer; const queries are
// safe to share between mutations.
class ViewGraph {
 public:
  static constexpr std::uint32_t kDefaultMinCorrespondences = 16;

  explicit ViewGraph(
      std::uint32_t min_correspondences = kDefaultMinCorrespondences);

  // Returns the new dense id (== previous view count). Keypoints are pixel
  // positions referenced by edge matches.
  view_t AddView(const Intrinsics& intrinsics,
                 std::vector<Eigen::Vector2d> keypoints = {});

  // Geometry is given for the direction i -> j and matches as (kp in i,
  // kp in j); both are re-oriented when i > j. A duplicate admitted edge
  // replaces the stored geometry and M entry. Throws InvalidArgument for
  // unknown views, i == j, or match indices outside the keypoint lists.
  EdgeAdmission AddEdge(view_t i, view_t j, const RelativeGeometry& geometry,
                        std::vector<FeatureMatch> matches = {});

  // Weighted Jaccard distance of the adjacent edges:
  //   d_ij = 1 - sum_{n in N} (M_in + M_nj) / sum_n (M_in + M_nj),
  //   N = { k | M_ik * M_kj > 0 }.
  // Exactly 1 when the denominator vanishes.
  double JaccardDistance(view_t i, view_t j) const;

  // Edges whose distance may have changed by inserting the edges of
  // new_view: edges incident to new_view or to one of its neighbors.
  std::vector<ViewPair> EdgesWithChangedDistance(view_t new_view) const;

  std::size_t NumViews() const { return intrinsics_.size(); }
  std::size_t NumEdges() const { return edges_.size(); }
  bool HasView(view_t view) const { return view < intrinsics_.size(); }
  bool HasEdge(view_t i, view_t j) const;
  std::uint32_t min_correspondences() const { return min_correspondences_; }

  const Intrinsics& ViewIntrinsics(view_t view) const;
  const std::vector<Eigen::Vector2d>& Keypoints(view_t view) const;

  // Entry M_ij (0 when no edge).
  std::uint32_t MatchCount(view_t i, view_t j) const;

  // Sum over the row of M.
  std::uint64_t RowSum(view_t view) const;

  // Neighbor -> M entry, ordered by neighbor id.
  const std::map<view_t, std::uint32_t>& Neighbors(view_t view) const;

  const std::map<ViewPair, ViewGraphEdge>& Edges() const { return edges_; }
  const ViewGraphEdge* FindEdge(view_t i, view_t j) const;

  // Relative geometry oriented i -> j.
  RelativeGeometry OrientedGeometry(view_t i, view_t j) const;

  nlohmann::json ToJson() const;
  static ViewGraph FromJson(const nlohmann::json& json);

 private:
  void CheckView(view_t view, const char* what) const;

  std::uint32_t min_correspondences_;
  std::vector<Intrinsics> intrinsics_;
  std::vector<std::vector<Eigen::Vector2d>> keypoints_;
  std::vector<std::map<view_t, std::uint32_t>> adjacency_;
  std::vector<std::uint64_t> row_sums_;
  std::map<ViewPair, ViewGraphEdge> edges_;
};

}  // namespace psfm
