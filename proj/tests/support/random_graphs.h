#pragma once

#include <random>
#include <vector>

#include "psfm/geometry/relative_geometry.h"
#include "psfm/geometry/so3.h"
#include "psfm/viewgraph/view_graph.h"

namespace psfm::testing {

inline RelativeGeometry UnitGeometry(std::uint32_t inliers) {
  RelativeGeometry geom;
  geom.inlier_count = inliers;
  return geom;
}

// One insertion step: the new view and its edges to earlier views.
struct InsertionStep {
  std::vector<std::pair<view_t, std::uint32_t>> edges;
};

// Views belong to a few latent groups; same-group pairs connect densely and
// cross-group pairs sparsely, so the threshold graph has nontrivial
// components that merge and split as views arrive.
inline std::vector<InsertionStep> RandomInsertionSequence(std::mt19937_64* rng,
                                                          int num_views) {
  std::uniform_int_distribution<int> group_of(0, 2);
  std::bernoulli_distribution same_group(0.7);
  std::bernoulli_distribution cross_group(0.08);
  std::uniform_int_distribution<std::uint32_t> strong(40, 400);
  std::uniform_int_distribution<std::uint32_t> weak(16, 60);
  std::vector<int> groups;
  std::vector<InsertionStep> steps;
  for (int v = 0; v < num_views; ++v) {
    groups.push_back(group_of(*rng));
    InsertionStep step;
    for (int u = 0; u < v; ++u) {
      if (groups[u] == groups[v] ? same_group(*rng) : cross_group(*rng)) {
        step.edges.emplace_back(u, groups[u] == groups[v] ? strong(*rng)
                                                          : weak(*rng));
      }
    }
    steps.push_back(std::move(step));
  }
  return steps;
}

inline view_t ApplyStep(const InsertionStep& step, ViewGraph* graph) {
  const view_t v = graph->AddView(Intrinsics{});
  for (const auto& [u, count] : step.edges) {
    graph->AddEdge(v, u, UnitGeometry(count));
  }
  return v;
}

}  // namespace psfm::testing
