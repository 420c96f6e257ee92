#include "psfm/clustering/clustering.h"

#include <algorithm>
#include <numeric>
#include <tuple>

#include "psfm/kernels/edge_distances.h"
#include "psfm/util/union_find.h"

namespace psfm {
namespace {

// Components of `views` (sorted) joined by edges with distance below eta.
// Both endpoints of every edge must be in `views`.
std::vector<std::set<view_t>> Components(
    const std::vector<view_t>& views, const std::vector<ViewPair>& edges,
    const std::vector<double>& distances, double eta) {
  const auto index = [&](view_t v) {
    return static_cast<std::size_t>(
        std::lower_bound(views.begin(), views.end(), v) - views.begin());
  };
  UnionFind uf(views.size());
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (distances[e] < eta) {
      uf.Union(index(edges[e].first), index(edges[e].second));
    }
  }
  std::map<std::size_t, std::set<view_t>> by_root;
  for (std::size_t k = 0; k < views.size(); ++k) {
    by_root[uf.Find(k)].insert(views[k]);
  }
  std::vector<std::set<view_t>> components;
  for (auto& [root, members] : by_root) {
    components.push_back(std::move(members));
  }
  // Roots are the smallest index, so components are ordered by lowest view.
  return components;
}

// For each group, the id of the old cluster it continues, or
// kInvalidClusterId. Greedy on decreasing overlap; ties go to the group with
// the lowest view id, then to the lowest old cluster id.
std::vector<cluster_t> MatchByOverlap(
    const std::map<cluster_t, std::set<view_t>>& old_clusters,
    const std::map<view_t, cluster_t>& old_assignment,
    const std::vector<std::set<view_t>>& groups) {
  std::vector<std::tuple<std::size_t, view_t, cluster_t, std::size_t>>
      candidates;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    std::map<cluster_t, std::size_t> overlap;
    for (const view_t v : groups[g]) {
      const auto it = old_assignment.find(v);
      if (it != old_assignment.end()) {
        ++overlap[it->second];
      }
    }
    for (const auto& [id, count] : overlap) {
      if (old_clusters.count(id)) {
        candidates.emplace_back(count, *groups[g].begin(), id, g);
      }
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const auto& a,
                                                     const auto& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
    if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) < std::get<1>(b);
    return std::get<2>(a) < std::get<2>(b);
  });
  std::vector<cluster_t> match(groups.size(), kInvalidClusterId);
  std::set<cluster_t> used;
  for (const auto& [count, lowest, id, g] : candidates) {
    if (match[g] == kInvalidClusterId && !used.count(id)) {
      match[g] = id;
      used.insert(id);
    }
  }
  return match;
}

}  // namespace

Partition ClusterFull(const ViewGraph& graph, double eta,
                      Execution execution) {
  std::vector<view_t> views(graph.NumViews());
  for (view_t v = 0; v < views.size(); ++v) {
    views[v] = v;
  }
  std::vector<ViewPair> edges;
  edges.reserve(graph.NumEdges());
  for (const auto& [pair, edge] : graph.Edges()) {
    edges.push_back(pair);
  }
  const std::vector<double> distances =
      ComputeEdgeDistances(graph, edges, execution);

  Partition partition;
  partition.generation = graph.NumViews();
  for (auto& members : Components(views, edges, distances, eta)) {
    const cluster_t id = *members.begin();
    for (const view_t v : members) {
      partition.assignment[v] = id;
    }
    partition.clusters[id] = std::move(members);
    partition.next_cluster_id = std::max(partition.next_cluster_id, id + 1);
  }
  return partition;
}

std::pair<Partition, TopologyDelta> ClusterIncremental(
    const Partition& prev, const ViewGraph& graph, view_t new_view,
    double eta) {
  const std::vector<ViewPair> changed =
      graph.EdgesWithChangedDistance(new_view);

  std::set<cluster_t> touched;
  for (const ViewPair& pair : changed) {
    for (const view_t v : {pair.first, pair.second}) {
      const auto it = prev.assignment.find(v);
      if (it != prev.assignment.end()) {
        touched.insert(it->second);
      }
    }
  }

  std::set<view_t> local_set = {new_view};
  for (const cluster_t id : touched) {
    const auto& members = prev.clusters.at(id);
    local_set.insert(members.begin(), members.end());
  }
  const std::vector<view_t> local(local_set.begin(), local_set.end());

  std::vector<ViewPair> edges;
  for (const view_t v : local) {
    for (const auto& [n, count] : graph.Neighbors(v)) {
      if (v < n && local_set.count(n)) {
        edges.emplace_back(v, n);
      }
    }
  }
  const std::vector<double> distances =
      ComputeEdgeDistances(graph, edges, Execution::kSerial);
  const std::vector<std::set<view_t>> groups =
      Components(local, edges, distances, eta);

  std::map<cluster_t, std::set<view_t>> touched_clusters;
  for (const cluster_t id : touched) {
    touched_clusters[id] = prev.clusters.at(id);
  }
  const std::vector<cluster_t> match =
      MatchByOverlap(touched_clusters, prev.assignment, groups);

  Partition next = prev;
  next.generation = graph.NumViews();
  for (const cluster_t id : touched) {
    next.clusters.erase(id);
  }
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const cluster_t id =
        match[g] != kInvalidClusterId ? match[g] : next.next_cluster_id++;
    for (const view_t v : groups[g]) {
      next.assignment[v] = id;
    }
    next.clusters[id] = groups[g];
  }

  TopologyDelta delta = DiffPartitions(prev, next, graph);
  return {std::move(next), std::move(delta)};
}

TopologyDelta DiffPartitions(const Partition& before, const Partition& after,
                             const ViewGraph& graph) {
  std::vector<cluster_t> after_ids;
  std::vector<std::set<view_t>> groups;
  for (const auto& [id, members] : after.clusters) {
    after_ids.push_back(id);
    groups.push_back(members);
  }
  // Process groups ordered by lowest member so overlap ties resolve by view.
  std::vector<std::size_t> order(groups.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return *groups[a].begin() < *groups[b].begin();
  });
  std::vector<std::set<view_t>> ordered_groups;
  for (const std::size_t k : order) {
    ordered_groups.push_back(groups[k]);
  }
  const std::vector<cluster_t> ordered_match =
      MatchByOverlap(before.clusters, before.assignment, ordered_groups);

  TopologyDelta delta;
  std::map<cluster_t, cluster_t> continues;  // after id -> before id
  std::set<cluster_t> matched_before;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (ordered_match[k] != kInvalidClusterId) {
      continues[after_ids[order[k]]] = ordered_match[k];
      matched_before.insert(ordered_match[k]);
    }
  }
  for (const auto& [id, members] : before.clusters) {
    if (!matched_before.count(id)) {
      delta.deleted_clusters.insert(id);
    }
  }

  // (source, destination) -> moved views.
  std::map<std::pair<cluster_t, cluster_t>, std::vector<view_t>> moved;
  for (const auto& [after_id, members] : after.clusters) {
    const auto cont = continues.find(after_id);
    const std::set<view_t>* previous =
        cont == continues.end() ? nullptr : &before.clusters.at(cont->second);
    if (previous != nullptr && *previous == members) {
      delta.unchanged_clusters.insert(after_id);
      continue;
    }
    for (const view_t v : members) {
      if (previous == nullptr || !previous->count(v)) {
        delta.added[after_id].insert(v);
        const auto old = before.assignment.find(v);
        if (old != before.assignment.end()) {
          moved[{old->second, after_id}].push_back(v);
        }
      }
    }
    if (previous != nullptr) {
      for (const view_t v : *previous) {
        if (!members.count(v)) {
          delta.removed[cont->second].insert(v);
        }
      }
    }
  }
  for (const cluster_t id : delta.deleted_clusters) {
    delta.removed[id] = before.clusters.at(id);
  }

  for (const auto& [route, views] : moved) {
    // views is sorted because members are iterated in order.
    UnionFind uf(views.size());
    for (std::size_t a = 0; a < views.size(); ++a) {
      for (std::size_t b = a + 1; b < views.size(); ++b) {
        if (graph.HasEdge(views[a], views[b])) {
          uf.Union(a, b);
        }
      }
    }
    std::map<std::size_t, std::set<view_t>> by_root;
    for (std::size_t a = 0; a < views.size(); ++a) {
      by_root[uf.Find(a)].insert(views[a]);
    }
    for (auto& [root, group] : by_root) {
      delta.transfers.push_back({route.first, route.second, std::move(group)});
    }
  }
  return delta;
}

}  // namespace psfm
