#include "psfm/reconstruction/track.h"

#include <algorithm>
#include <tuple>

namespace psfm {
namespace {

class ConflictAwareUnionFind {
 public:
  std::size_t Node(const FeatureKey& key) {
    const auto [it, inserted] = index_.emplace(key, keys_.size());
    if (inserted) {
      keys_.push_back(key);
      parent_.push_back(it->second);
      members_.push_back({{key.view, key.point2D_idx}});
    }
    return it->second;
  }

  std::size_t Find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void Union(std::size_t a, std::size_t b) {
    a = Find(a);
    b = Find(b);
    if (a == b) {
      return;
    }
    if (members_[a].size() < members_[b].size()) {
      std::swap(a, b);
    }
    for (const auto& [view, idx] : members_[b]) {
      if (members_[a].count(view)) {
        return;  // would put two features of one view in one track
      }
    }
    members_[a].insert(members_[b].begin(), members_[b].end());
    members_[b].clear();
    parent_[b] = a;
  }

  std::size_t size() const { return keys_.size(); }
  const std::map<view_t, point2D_t>& Members(std::size_t root) const {
    return members_[root];
  }

 private:
  std::map<FeatureKey, std::size_t> index_;
  std::vector<FeatureKey> keys_;
  std::vector<std::size_t> parent_;
  std::vector<std::map<view_t, point2D_t>> members_;
};

}  // namespace

std::vector<Track> BuildTracks(const ClusterSubgraph& subgraph,
                               const ViewGraph& graph) {
  std::vector<std::pair<ViewPair, const ViewGraphEdge*>> edges;
  for (const auto& [pair, edge] : subgraph.edges) {
    edges.emplace_back(pair, &edge);
  }
  std::stable_sort(edges.begin(), edges.end(), [](const auto& a,
                                                  const auto& b) {
    return a.second->geometry.inlier_count > b.second->geometry.inlier_count;
  });

  ConflictAwareUnionFind uf;
  for (const auto& [pair, edge] : edges) {
    for (const FeatureMatch& m : edge->matches) {
      uf.Union(uf.Node({pair.first, m.point2D_idx1}),
               uf.Node({pair.second, m.point2D_idx2}));
    }
  }

  std::vector<Track> tracks;
  for (std::size_t node = 0; node < uf.size(); ++node) {
    if (uf.Find(node) != node || uf.Members(node).size() < 2) {
      continue;
    }
    Track track;
    for (const auto& [view, idx] : uf.Members(node)) {
      track.observations[view] = {idx, graph.Keypoints(view)[idx]};
    }
    tracks.push_back(std::move(track));
  }
  // Deterministic order independent of union-find internals.
  std::sort(tracks.begin(), tracks.end(), [](const Track& a, const Track& b) {
    const auto& [va, ea] = *a.observations.begin();
    const auto& [vb, eb] = *b.observations.begin();
    return std::tie(va, ea.point2D_idx) < std::tie(vb, eb.point2D_idx);
  });
  return tracks;
}

std::map<FeatureKey, std::size_t> IndexTracks(
    const std::vector<Track>& tracks) {
  std::map<FeatureKey, std::size_t> index;
  for (std::size_t t = 0; t < tracks.size(); ++t) {
    for (const auto& [view, element] : tracks[t].observations) {
      index[{view, element.point2D_idx}] = t;
    }
  }
  return index;
}

}  // namespace psfm
