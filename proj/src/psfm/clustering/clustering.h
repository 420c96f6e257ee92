#pragma once

#include <utility>

#include "psfm/clustering/partition.h"
#include "psfm/kernels/execution.h"
#include "psfm/viewgraph/view_graph.h"

namespace psfm {

inline constexpr double kDefaultEta = 0.2;

// Single-linkage clustering: connected components of the graph keeping the
// edges with Jaccard distance below eta. Each cluster is labeled with its
// lowest member id.
Partition ClusterFull(const ViewGraph& graph, double eta = kDefaultEta,
                      Execution execution = Execution::kParallel);

// Updates prev after the insertion of new_view and its edges. Only clusters
// touched by edges whose distance may have changed are re-clustered. Cluster
// ids persist by maximal overlap; new clusters receive fresh ids.
std::pair<Partition, TopologyDelta> ClusterIncremental(
    const Partition& prev, const ViewGraph& graph, view_t new_view,
    double eta = kDefaultEta);

// Cluster identity is matched by maximal member overlap (ties to the group
// with the lowest view id). Moved views are grouped per (source,
// destination) into connected sets over the admitted edges among them.
TopologyDelta DiffPartitions(const Partition& before, const Partition& after,
                             const ViewGraph& graph);

}  // namespace psfm
