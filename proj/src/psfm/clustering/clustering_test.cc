#include "psfm/clustering/clustering.h"

#include <random>

#include <gtest/gtest.h>

#include "psfm/util/union_find.h"
#include "support/random_graphs.h"

namespace psfm {
namespace {

using testing::ApplyStep;
using testing::RandomInsertionSequence;
using testing::UnitGeometry;

ViewGraph GraphWithViews(int n, std::uint32_t min_correspondences = 1) {
  ViewGraph graph(min_correspondences);
  for (int i = 0; i < n; ++i) graph.AddView(Intrinsics{});
  return graph;
}

// Thresholds every pairwise distance and joins with union-find.
std::set<std::set<view_t>> BruteForceGroups(const ViewGraph& graph,
                                            double eta) {
  const std::size_t n = graph.NumViews();
  UnionFind uf(n);
  for (view_t i = 0; i < n; ++i) {
    for (view_t j = i + 1; j < n; ++j) {
      if (graph.HasEdge(i, j) && graph.JaccardDistance(i, j) < eta) {
        uf.Union(i, j);
      }
    }
  }
  std::map<std::size_t, std::set<view_t>> groups;
  for (view_t v = 0; v < n; ++v) groups[uf.Find(v)].insert(v);
  std::set<std::set<view_t>> result;
  for (auto& [root, g] : groups) result.insert(g);
  return result;
}

void ExpectNoCrossingShortEdge(const Partition& p, const ViewGraph& graph,
                               double eta) {
  for (const auto& [pair, edge] : graph.Edges()) {
    if (p.ClusterOf(pair.first) != p.ClusterOf(pair.second)) {
      EXPECT_GE(graph.JaccardDistance(pair.first, pair.second), eta);
    }
  }
}

// Applies the delta to `before` and checks it reproduces `after`.
void ExpectDeltaExplains(const Partition& before, const Partition& after,
                         const TopologyDelta& delta, view_t new_view) {
  std::map<cluster_t, std::set<view_t>> rebuilt = before.clusters;
  for (const auto& [id, views] : delta.removed) {
    for (const view_t v : views) rebuilt[id].erase(v);
  }
  for (const auto& [id, views] : delta.added) {
    rebuilt[id].insert(views.begin(), views.end());
  }
  std::erase_if(rebuilt, [](const auto& kv) { return kv.second.empty(); });
  EXPECT_EQ(rebuilt, after.clusters);
  for (const cluster_t id : delta.unchanged_clusters) {
    EXPECT_EQ(before.clusters.at(id), after.clusters.at(id));
  }
  std::set<view_t> moved;
  for (const TransferGroup& t : delta.transfers) {
    for (const view_t v : t.views) {
      EXPECT_TRUE(moved.insert(v).second) << "view in two transfers";
      EXPECT_EQ(before.ClusterOf(v), t.source);
      EXPECT_EQ(after.ClusterOf(v), t.destination);
    }
  }
  for (const auto& [id, views] : delta.added) {
    for (const view_t v : views) {
      EXPECT_TRUE(v == new_view || moved.count(v));
    }
  }
}

TEST(ClusterFull, NoEdgesGivesSingletons) {
  const ViewGraph graph = GraphWithViews(4);
  const Partition p = ClusterFull(graph);
  EXPECT_EQ(p.clusters.size(), 4u);
  EXPECT_TRUE(p.IsConsistent());
  for (view_t v = 0; v < 4; ++v) EXPECT_EQ(p.ClusterOf(v), v);
}

TEST(ClusterFull, EmptyGraph) {
  const Partition p = ClusterFull(ViewGraph());
  EXPECT_TRUE(p.clusters.empty());
  EXPECT_TRUE(p.IsConsistent());
}

TEST(ClusterFull, ChainIsSingleLinkage) {
  // a-b-c each with a private neighbor set such that d_ab and d_bc are small
  // but a and c never share an edge.
  ViewGraph graph = GraphWithViews(9);
  const view_t a = 0, b = 1, c = 2;
  // Shared neighbors of (a, b): 3, 4. Shared neighbors of (b, c): 5, 6.
  for (view_t n : {3u, 4u}) {
    graph.AddEdge(a, n, UnitGeometry(100));
    graph.AddEdge(b, n, UnitGeometry(100));
  }
  for (view_t n : {5u, 6u}) {
    graph.AddEdge(b, n, UnitGeometry(100));
    graph.AddEdge(c, n, UnitGeometry(100));
  }
  graph.AddEdge(a, b, UnitGeometry(10));
  graph.AddEdge(b, c, UnitGeometry(10));
  graph.AddEdge(3, 4, UnitGeometry(100));
  graph.AddEdge(5, 6, UnitGeometry(100));
  const double eta = 0.6;
  ASSERT_LT(graph.JaccardDistance(a, b), eta);
  ASSERT_LT(graph.JaccardDistance(b, c), eta);
  ASSERT_GT(graph.JaccardDistance(a, c), eta);
  const Partition p = ClusterFull(graph, eta);
  EXPECT_EQ(p.ClusterOf(a), p.ClusterOf(c));
}

TEST(ClusterFull, MatchesBruteForceOracle) {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 30; ++trial) {
    ViewGraph graph(16);
    for (const auto& step : RandomInsertionSequence(&rng, 12)) {
      ApplyStep(step, &graph);
    }
    const Partition p = ClusterFull(graph);
    EXPECT_TRUE(p.IsConsistent());
    EXPECT_EQ(p.Groups(), BruteForceGroups(graph, kDefaultEta));
    for (const auto& [id, members] : p.clusters) {
      EXPECT_EQ(id, *members.begin());
    }
  }
}

TEST(ClusterFull, SerialAndParallelAgree) {
  std::mt19937_64 rng(103);
  ViewGraph graph(16);
  for (const auto& step : RandomInsertionSequence(&rng, 40)) {
    ApplyStep(step, &graph);
  }
  const Partition serial = ClusterFull(graph, kDefaultEta, Execution::kSerial);
  const Partition parallel =
      ClusterFull(graph, kDefaultEta, Execution::kParallel);
  EXPECT_EQ(serial.clusters, parallel.clusters);
}

TEST(ClusterIncremental, IsolatedViewAddsSingleton) {
  ViewGraph graph = GraphWithViews(3);
  graph.AddEdge(0, 1, UnitGeometry(50));
  const Partition prev = ClusterFull(graph);
  const view_t v = graph.AddView(Intrinsics{});
  const auto [next, delta] = ClusterIncremental(prev, graph, v);
  EXPECT_EQ(next.clusters.size(), prev.clusters.size() + 1);
  EXPECT_EQ(next.clusters.at(next.ClusterOf(v)), std::set<view_t>{v});
  EXPECT_EQ(delta.unchanged_clusters.size(), prev.clusters.size());
  EXPECT_TRUE(delta.transfers.empty());
  EXPECT_EQ(delta.added.at(next.ClusterOf(v)), std::set<view_t>{v});
}

TEST(ClusterIncremental, BridgingViewMergesClusters) {
  // Two 4-cliques joined by one weak edge; a new view linked to all of them
  // pulls the bridge distance below the threshold.
  const double eta = 0.4;
  ViewGraph graph = GraphWithViews(8);
  for (view_t a = 0; a < 4; ++a)
    for (view_t b = a + 1; b < 4; ++b) graph.AddEdge(a, b, UnitGeometry(100));
  for (view_t a = 4; a < 8; ++a)
    for (view_t b = a + 1; b < 8; ++b) graph.AddEdge(a, b, UnitGeometry(100));
  graph.AddEdge(3, 4, UnitGeometry(16));
  const Partition prev = ClusterFull(graph, eta);
  ASSERT_EQ(prev.clusters.size(), 2u);
  const view_t v = graph.AddView(Intrinsics{});
  for (view_t u = 0; u < 8; ++u) graph.AddEdge(v, u, UnitGeometry(50));
  const auto [next, delta] = ClusterIncremental(prev, graph, v, eta);
  EXPECT_EQ(next.Groups(), ClusterFull(graph, eta).Groups());
  EXPECT_EQ(next.clusters.size(), 1u);
  ASSERT_EQ(delta.transfers.size(), 1u);
  EXPECT_EQ(delta.transfers[0].views, (std::set<view_t>{4, 5, 6, 7}));
  EXPECT_EQ(delta.transfers[0].source, prev.ClusterOf(4));
  EXPECT_EQ(delta.transfers[0].destination, prev.ClusterOf(0));
  EXPECT_EQ(delta.deleted_clusters, std::set<cluster_t>{prev.ClusterOf(4)});
  ExpectDeltaExplains(prev, next, delta, v);
}

TEST(ClusterIncremental, MatchesFullOnRandomSequences) {
  std::mt19937_64 rng(107);
  int splits = 0;
  int merges = 0;
  for (int trial = 0; trial < 100; ++trial) {
    ViewGraph graph(16);
    Partition partition = ClusterFull(graph);
    for (const auto& step : RandomInsertionSequence(&rng, 30)) {
      const view_t v = ApplyStep(step, &graph);
      auto [next, delta] = ClusterIncremental(partition, graph, v);
      ASSERT_TRUE(next.IsConsistent());
      ASSERT_EQ(next.Groups(), ClusterFull(graph).Groups());
      ExpectNoCrossingShortEdge(next, graph, kDefaultEta);
      ExpectDeltaExplains(partition, next, delta, v);
      for (const auto& [id, views] : delta.removed) {
        if (next.clusters.count(id)) ++splits;
      }
      merges += static_cast<int>(delta.deleted_clusters.size());
      partition = std::move(next);
    }
  }
  // The generator should exercise both topology changes.
  EXPECT_GT(splits, 0);
  EXPECT_GT(merges, 0);
}

TEST(ClusterIncremental, Deterministic) {
  for (int run = 0; run < 2; ++run) {
    std::mt19937_64 rng(109);
    ViewGraph graph(16);
    Partition partition;
    std::vector<std::map<cluster_t, std::set<view_t>>> history;
    for (const auto& step : RandomInsertionSequence(&rng, 30)) {
      const view_t v = ApplyStep(step, &graph);
      partition = ClusterIncremental(partition, graph, v).first;
      history.push_back(partition.clusters);
    }
    static std::vector<std::map<cluster_t, std::set<view_t>>> first;
    if (run == 0) {
      first = history;
    } else {
      EXPECT_EQ(first, history);
    }
  }
}

TEST(DiffPartitions, IdenticalPartitionsGiveEmptyDelta) {
  ViewGraph graph = GraphWithViews(4);
  graph.AddEdge(0, 1, UnitGeometry(50));
  const Partition p = ClusterFull(graph);
  const TopologyDelta delta = DiffPartitions(p, p, graph);
  EXPECT_TRUE(delta.Empty());
  EXPECT_EQ(delta.unchanged_clusters.size(), p.clusters.size());
}

Partition MakePartition(const std::vector<std::set<view_t>>& groups,
                        const std::vector<cluster_t>& ids) {
  Partition p;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    p.clusters[ids[g]] = groups[g];
    for (const view_t v : groups[g]) p.assignment[v] = ids[g];
    p.next_cluster_id = std::max(p.next_cluster_id, ids[g] + 1);
  }
  return p;
}

TEST(DiffPartitions, ConnectedMovedViewsFormOneGroup) {
  ViewGraph graph = GraphWithViews(8);
  graph.AddEdge(5, 6, UnitGeometry(50));
  graph.AddEdge(6, 7, UnitGeometry(50));
  const Partition before = MakePartition({{0, 1, 2, 3, 4, 5, 6, 7}}, {0});
  const Partition after = MakePartition({{0, 1, 2, 3, 4}, {5, 6, 7}}, {0, 1});
  const TopologyDelta delta = DiffPartitions(before, after, graph);
  ASSERT_EQ(delta.transfers.size(), 1u);
  EXPECT_EQ(delta.transfers[0].views, (std::set<view_t>{5, 6, 7}));
  EXPECT_EQ(delta.transfers[0].source, 0u);
  EXPECT_EQ(delta.transfers[0].destination, 1u);
}

TEST(DiffPartitions, IndependentMovesAreSeparateGroups) {
  ViewGraph graph = GraphWithViews(6);
  const Partition before = MakePartition({{0, 1, 2, 3}, {4}, {5}}, {0, 4, 5});
  const Partition after = MakePartition({{0, 1}, {2, 4}, {3, 5}}, {0, 4, 5});
  const TopologyDelta delta = DiffPartitions(before, after, graph);
  ASSERT_EQ(delta.transfers.size(), 2u);
  EXPECT_EQ(delta.transfers[0].views.size(), 1u);
  EXPECT_EQ(delta.transfers[1].views.size(), 1u);
}

TEST(DiffPartitions, OverlapTieGoesToLowestView) {
  ViewGraph graph = GraphWithViews(4);
  const Partition before = MakePartition({{0, 1, 2, 3}}, {0});
  const Partition after = MakePartition({{0, 1}, {2, 3}}, {7, 8});
  const TopologyDelta delta = DiffPartitions(before, after, graph);
  ASSERT_EQ(delta.transfers.size(), 2u);
  // {0, 1} continues the old cluster, so only 2 and 3 move.
  std::set<view_t> moved;
  for (const auto& t : delta.transfers) moved.insert(t.views.begin(), t.views.end());
  EXPECT_EQ(moved, (std::set<view_t>{2, 3}));
}

}  // namespace
}  // namespace psfm
