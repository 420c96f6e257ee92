#pragma once

#include <span>
#include <vector>

#include "psfm/kernels/execution.h"
#include "psfm/util/types.h"
#include "psfm/viewgraph/view_graph.h"

namespace psfm {

// Jaccard distance of every listed pair, in input order.
std::vector<double> ComputeEdgeDistances(const ViewGraph& graph,
                                         std::span<const ViewPair> pairs,
                                         Execution execution);

}  // namespace psfm
