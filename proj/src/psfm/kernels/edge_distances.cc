#include "psfm/kernels/edge_distances.h"

#include <cstdint>

namespace psfm {

std::vector<double> ComputeEdgeDistances(const ViewGraph& graph,
                                         std::span<const ViewPair> pairs,
                                         Execution execution) {
  std::vector<double> distances(pairs.size());
  const auto n = static_cast<std::int64_t>(pairs.size());
  if (execution == Execution::kParallel) {
#pragma omp parallel for schedule(dynamic, 64)
    for (std::int64_t k = 0; k < n; ++k) {
      distances[k] = graph.JaccardDistance(pairs[k].first, pairs[k].second);
    }
  } else {
    for (std::int64_t k = 0; k < n; ++k) {
      distances[k] = graph.JaccardDistance(pairs[k].first, pairs[k].second);
    }
  }
  return distances;
}

}  // namespace psfm
