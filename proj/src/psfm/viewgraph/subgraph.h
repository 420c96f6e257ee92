#pragma once

#include <map>
#include <set>
#include <vector>

#include "psfm/util/types.h"
#include "psfm/viewgraph/view_graph.h"

namespace psfm {

// Cluster-local copy of the viewgraph restricted to a view set. Edge
// filtering removes edges here only; the global graph keeps them.
struct ClusterSubgraph {
  std::vector<view_t> views;  // sorted
  std::map<ViewPair, ViewGraphEdge> edges;

  bool Contains(view_t view) const;
  RelativeGeometry OrientedGeometry(view_t i, view_t j) const;
  std::map<view_t, std::vector<view_t>> Adjacency() const;
  // Connected components over the remaining edges, ordered by lowest view.
  std::vector<std::vector<view_t>> Components() const;
  void RemoveEdges(const std::set<ViewPair>& pairs);
};

ClusterSubgraph ExtractSubgraph(const ViewGraph& graph,
                                const std::set<view_t>& views);

}  // namespace psfm
