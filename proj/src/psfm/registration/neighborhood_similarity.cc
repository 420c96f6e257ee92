#include "psfm/registration/neighborhood_similarity.h"

#include <limits>
#include <vector>

#include "psfm/util/error.h"

namespace psfm {
namespace {

struct Camera {
  view_t view;
  Eigen::Vector3d position;
};

// Index into `set` of the nearest camera to set[k], other than k.
std::size_t Nearest(const std::vector<Camera>& set, std::size_t k) {
  std::size_t best = k;
  double best_distance = std::numeric_limits<double>::infinity();
  view_t best_view = kInvalidViewId;
  for (std::size_t m = 0; m < set.size(); ++m) {
    if (m == k) continue;
    const double d = (set[m].position - set[k].position).squaredNorm();
    if (d < best_distance || (d == best_distance && set[m].view < best_view)) {
      best = m;
      best_distance = d;
      best_view = set[m].view;
    }
  }
  return best;
}

}  // namespace

SimilarityScore NeighborhoodSimilarity(const std::map<view_t, Eigen::Vector3d>& pa,
                                       const std::map<view_t, Eigen::Vector3d>& pb,
                                       const Sim3& transform) {
  if (pa.size() < 2 || pb.size() < 2) {
    throw InvalidArgument("NeighborhoodSimilarity: each set needs two cameras");
  }
  std::vector<Camera> a, b, c;
  for (const auto& [view, p] : pa) {
    a.push_back({view, p});
    c.push_back({view, transform * p});
  }
  for (const auto& [view, p] : pb) {
    if (pa.count(view)) {
      throw InvalidArgument("NeighborhoodSimilarity: sets share a view");
    }
    b.push_back({view, p});
    c.push_back({view, p});
  }
  SimilarityScore score;
  int kept = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const int same = a[Nearest(a, k)].view == c[Nearest(c, k)].view;
    score.per_camera[a[k].view] = same;
    kept += same;
  }
  for (std::size_t k = 0; k < b.size(); ++k) {
    const int same = b[Nearest(b, k)].view == c[Nearest(c, a.size() + k)].view;
    score.per_camera[b[k].view] = same;
    kept += same;
  }
  score.s = static_cast<double>(kept) / static_cast<double>(c.size());
  return score;
}

}  // namespace psfm
