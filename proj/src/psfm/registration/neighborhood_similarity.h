#pragma once

#include <map>

#include <Eigen/Core>

#include "psfm/geometry/sim3.h"
#include "psfm/util/types.h"

namespace psfm {

struct SimilarityScore {
  double s = 0.0;
  // 1 when the camera keeps its nearest neighbor in the merged set.
  std::map<view_t, int> per_camera;
};

// Merges T * Pa into Pb and scores the fraction of cameras whose nearest
// neighbor in the merged set is the one they had within their own cluster.
// Equidistant neighbors resolve to the lowest view id. Views of Pa and Pb
// must be disjoint. Throws InvalidArgument when either set has fewer than
// two cameras.
SimilarityScore NeighborhoodSimilarity(const std::map<view_t, Eigen::Vector3d>& pa,
                                       const std::map<view_t, Eigen::Vector3d>& pb,
                                       const Sim3& transform);

}  // namespace psfm
