#include "psfm/viewgraph/subgraph.h"

#include <algorithm>
#include <string>

#include "psfm/util/error.h"
#include "psfm/util/union_find.h"

namespace psfm {

bool ClusterSubgraph::Contains(view_t view) const {
  return std::binary_search(views.begin(), views.end(), view);
}

RelativeGeometry ClusterSubgraph::OrientedGeometry(view_t i, view_t j) const {
  const auto it = edges.find(ViewPair(i, j));
  if (it == edges.end()) {
    throw InvalidArgument("ClusterSubgraph: no edge (" + std::to_string(i) +
                          ", " + std::to_string(j) + ")");
  }
  return i < j ? it->second.geometry : it->second.geometry.Inverse();
}

std::map<view_t, std::vector<view_t>> ClusterSubgraph::Adjacency() const {
  std::map<view_t, std::vector<view_t>> adjacency;
  for (const view_t v : views) {
    adjacency[v];
  }
  for (const auto& [pair, edge] : edges) {
    adjacency[pair.first].push_back(pair.second);
    adjacency[pair.second].push_back(pair.first);
  }
  return adjacency;
}

std::vector<std::vector<view_t>> ClusterSubgraph::Components() const {
  UnionFind uf(views.size());
  const auto index = [&](view_t v) {
    return static_cast<std::size_t>(
        std::lower_bound(views.begin(), views.end(), v) - views.begin());
  };
  for (const auto& [pair, edge] : edges) {
    uf.Union(index(pair.first), index(pair.second));
  }
  std::map<std::size_t, std::vector<view_t>> by_root;
  for (std::size_t k = 0; k < views.size(); ++k) {
    by_root[uf.Find(k)].push_back(views[k]);
  }
  std::vector<std::vector<view_t>> components;
  for (auto& [root, members] : by_root) {
    components.push_back(std::move(members));
  }
  return components;
}

void ClusterSubgraph::RemoveEdges(const std::set<ViewPair>& pairs) {
  for (const ViewPair& pair : pairs) {
    edges.erase(pair);
  }
}

ClusterSubgraph ExtractSubgraph(const ViewGraph& graph,
                                const std::set<view_t>& views) {
  ClusterSubgraph subgraph;
  subgraph.views.assign(views.begin(), views.end());
  for (const view_t v : subgraph.views) {
    for (const auto& [n, count] : graph.Neighbors(v)) {
      if (v < n && views.count(n)) {
        subgraph.edges.emplace(ViewPair(v, n), *graph.FindEdge(v, n));
      }
    }
  }
  return subgraph;
}

}  // namespace psfm
