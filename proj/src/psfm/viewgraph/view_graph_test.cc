#include "psfm/viewgraph/view_graph.h"

#include <random>
#include <set>

#include <gtest/gtest.h>

#include "psfm/geometry/so3.h"
#include "psfm/util/error.h"

namespace psfm {
namespace {

RelativeGeometry Geometry(std::uint32_t inliers) {
  RelativeGeometry geom;
  geom.rotation = SO3Exp(Eigen::Vector3d(0.0, 0.0, DegToRad(10.0)));
  geom.translation_direction = Eigen::Vector3d(1, 2, 3).normalized();
  geom.inlier_count = inliers;
  return geom;
}

ViewGraph GraphWithViews(int n) {
  ViewGraph graph;
  for (int i = 0; i < n; ++i) {
    graph.AddView(Intrinsics{});
  }
  return graph;
}

// Direct evaluation of the distance, summing over every view n.
double BruteForceJaccard(const ViewGraph& graph, view_t i, view_t j) {
  double numerator = 0.0;
  double denominator = 0.0;
  for (view_t n = 0; n < graph.NumViews(); ++n) {
    const double m_in = n == i ? 0.0 : graph.MatchCount(i, n);
    const double m_nj = n == j ? 0.0 : graph.MatchCount(n, j);
    denominator += m_in + m_nj;
    if (m_in * m_nj > 0.0) {
      numerator += m_in + m_nj;
    }
  }
  return denominator == 0.0 ? 1.0 : 1.0 - numerator / denominator;
}

ViewGraph RandomGraph(std::mt19937_64* rng, int n, double density) {
  ViewGraph graph = GraphWithViews(n);
  std::bernoulli_distribution keep(density);
  std::uniform_int_distribution<std::uint32_t> count(16, 300);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (keep(*rng)) {
        graph.AddEdge(i, j, Geometry(count(*rng)));
      }
    }
  }
  return graph;
}

TEST(ViewGraph, DenseIncreasingIds) {
  ViewGraph graph;
  EXPECT_EQ(graph.AddView(Intrinsics{}), 0u);
  for (int i = 1; i < 5; ++i) {
    graph.AddView(Intrinsics{});
  }
  EXPECT_EQ(graph.AddView(Intrinsics{}), 5u);
  EXPECT_EQ(graph.AddView(Intrinsics{}), 6u);
  EXPECT_EQ(graph.AddView(Intrinsics{}), 7u);
  EXPECT_TRUE(graph.Neighbors(7).empty());
}

TEST(ViewGraph, EdgeAdmission) {
  ViewGraph graph = GraphWithViews(3);
  EXPECT_EQ(graph.AddEdge(0, 1, Geometry(100)), EdgeAdmission::kAdmitted);
  EXPECT_EQ(graph.MatchCount(0, 1), 100u);
  EXPECT_EQ(graph.MatchCount(1, 0), 100u);
  EXPECT_EQ(graph.AddEdge(0, 2, Geometry(3)),
            EdgeAdmission::kRejectedBelowThreshold);
  EXPECT_FALSE(graph.HasEdge(0, 2));
  EXPECT_EQ(graph.MatchCount(0, 2), 0u);
}

TEST(ViewGraph, DuplicateEdgeReplaces) {
  ViewGraph graph = GraphWithViews(2);
  graph.AddEdge(0, 1, Geometry(40));
  RelativeGeometry better = Geometry(120);
  better.rotation = Eigen::Matrix3d::Identity();
  graph.AddEdge(1, 0, better);
  EXPECT_EQ(graph.MatchCount(0, 1), 120u);
  EXPECT_EQ(graph.RowSum(0), 120u);
  EXPECT_EQ(graph.NumEdges(), 1u);
  EXPECT_TRUE(graph.FindEdge(0, 1)->geometry.rotation.isApprox(
      Eigen::Matrix3d::Identity()));
}

TEST(ViewGraph, ReversedEdgeStoredCanonically) {
  ViewGraph graph;
  graph.AddView(Intrinsics{}, std::vector<Eigen::Vector2d>(5));
  graph.AddView(Intrinsics{}, std::vector<Eigen::Vector2d>(8));
  const RelativeGeometry geom = Geometry(50);
  EXPECT_THROW(graph.AddEdge(1, 0, geom, {{8, 3}}), InvalidArgument);
  graph.AddEdge(1, 0, geom, {{7, 3}});
  const RelativeGeometry forward = graph.OrientedGeometry(1, 0);
  EXPECT_TRUE(forward.rotation.isApprox(geom.rotation, 1e-12));
  EXPECT_TRUE(forward.translation_direction.isApprox(
      geom.translation_direction, 1e-12));
  EXPECT_EQ(graph.FindEdge(0, 1)->matches.front(), (FeatureMatch{3, 7}));
}

TEST(ViewGraph, RejectsBadIds) {
  ViewGraph graph = GraphWithViews(2);
  EXPECT_THROW(graph.AddEdge(0, 0, Geometry(50)), InvalidArgument);
  EXPECT_THROW(graph.AddEdge(0, 5, Geometry(50)), InvalidArgument);
  EXPECT_THROW(graph.JaccardDistance(0, 9), InvalidArgument);
}

TEST(JaccardDistance, IdenticalNeighborhoodsGiveZero) {
  ViewGraph graph = GraphWithViews(4);
  for (view_t n : {2u, 3u}) {
    graph.AddEdge(0, n, Geometry(50));
    graph.AddEdge(1, n, Geometry(50));
  }
  EXPECT_DOUBLE_EQ(graph.JaccardDistance(0, 1), 0.0);
}

TEST(JaccardDistance, NoCommonNeighborGivesOne) {
  ViewGraph graph = GraphWithViews(4);
  graph.AddEdge(0, 2, Geometry(50));
  graph.AddEdge(1, 3, Geometry(50));
  EXPECT_EQ(graph.JaccardDistance(0, 1), 1.0);
  EXPECT_EQ(graph.JaccardDistance(2, 3), 1.0);
}

TEST(JaccardDistance, WorkedExample) {
  ViewGraph graph(1);
  for (int k = 0; k < 4; ++k) graph.AddView(Intrinsics{});
  const view_t i = 0, j = 1, a = 2, b = 3;
  graph.AddEdge(i, a, Geometry(10));
  graph.AddEdge(a, j, Geometry(10));
  graph.AddEdge(i, b, Geometry(10));
  EXPECT_NEAR(graph.JaccardDistance(i, j), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(BruteForceJaccard(graph, i, j), 1.0 / 3.0, 1e-15);
}

TEST(JaccardDistance, MatchesBruteForceSymmetricAndBounded) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const ViewGraph graph = RandomGraph(&rng, 15, 0.3);
    for (view_t i = 0; i < 15; ++i) {
      for (view_t j = 0; j < 15; ++j) {
        if (i == j) continue;
        const double d = graph.JaccardDistance(i, j);
        EXPECT_NEAR(d, BruteForceJaccard(graph, i, j), 1e-12);
        EXPECT_EQ(d, graph.JaccardDistance(j, i));
        EXPECT_GE(d, 0.0);
        EXPECT_LE(d, 1.0);
      }
    }
  }
}

TEST(JaccardDistance, StrongSharedEdgeNeverIncreasesDistance) {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<view_t> pick(0, 11);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    ViewGraph graph = RandomGraph(&rng, 12, 0.35);
    const view_t i = pick(rng);
    const view_t j = pick(rng);
    if (i == j) continue;
    // Pick a common neighbor if any.
    view_t shared = kInvalidViewId;
    for (const auto& [n, m] : graph.Neighbors(i)) {
      if (n != j && graph.MatchCount(n, j) > 0) {
        shared = n;
        break;
      }
    }
    if (shared == kInvalidViewId) continue;
    const double before = graph.JaccardDistance(i, shared);
    graph.AddEdge(i, j, Geometry(5000));
    const double after = graph.JaccardDistance(i, shared);
    EXPECT_LE(after, before + 1e-12);
    ++checked;
  }
  EXPECT_GT(checked, 20);
}

TEST(ViewGraph, MatchMatrixRebuildsFromEdges) {
  std::mt19937_64 rng(29);
  ViewGraph graph = GraphWithViews(20);
  std::uniform_int_distribution<view_t> pick(0, 19);
  std::uniform_int_distribution<std::uint32_t> count(1, 200);
  for (int k = 0; k < 300; ++k) {
    const view_t i = pick(rng);
    const view_t j = pick(rng);
    if (i != j) graph.AddEdge(i, j, Geometry(count(rng)));
  }
  std::vector<std::uint64_t> row_sums(20, 0);
  for (const auto& [pair, edge] : graph.Edges()) {
    EXPECT_EQ(graph.MatchCount(pair.first, pair.second),
              edge.geometry.inlier_count);
    EXPECT_GE(edge.geometry.inlier_count, graph.min_correspondences());
    row_sums[pair.first] += edge.geometry.inlier_count;
    row_sums[pair.second] += edge.geometry.inlier_count;
  }
  for (view_t v = 0; v < 20; ++v) {
    EXPECT_EQ(graph.RowSum(v), row_sums[v]);
    EXPECT_EQ(graph.MatchCount(v, v), 0u);
    for (const auto& [n, m] : graph.Neighbors(v)) {
      EXPECT_TRUE(graph.HasEdge(v, n));
    }
  }
}

TEST(EdgesWithChangedDistance, IsolatedViewGivesEmptySet) {
  ViewGraph graph = GraphWithViews(3);
  graph.AddEdge(0, 1, Geometry(50));
  EXPECT_TRUE(graph.EdgesWithChangedDistance(2).empty());
}

TEST(EdgesWithChangedDistance, CoversEveryActualChange) {
  std::mt19937_64 rng(31);
  std::bernoulli_distribution connect(0.3);
  std::uniform_int_distribution<std::uint32_t> count(16, 200);
  for (int trial = 0; trial < 50; ++trial) {
    ViewGraph graph = RandomGraph(&rng, 12, 0.3);
    std::map<ViewPair, double> before;
    for (const auto& [pair, edge] : graph.Edges()) {
      before[pair] = graph.JaccardDistance(pair.first, pair.second);
    }
    const view_t added = graph.AddView(Intrinsics{});
    for (view_t v = 0; v < added; ++v) {
      if (connect(rng)) graph.AddEdge(added, v, Geometry(count(rng)));
    }
    const auto reported = graph.EdgesWithChangedDistance(added);
    const std::set<ViewPair> reported_set(reported.begin(), reported.end());
    for (const auto& [pair, edge] : graph.Edges()) {
      const auto it = before.find(pair);
      const bool changed =
          it == before.end() ||
          it->second != graph.JaccardDistance(pair.first, pair.second);
      if (changed) {
        EXPECT_TRUE(reported_set.count(pair)) << pair.first << "," << pair.second;
      }
    }
    for (const ViewPair& pair : reported) {
      EXPECT_TRUE(graph.HasEdge(pair.first, pair.second));
    }
  }
}

TEST(EdgesWithChangedDistance, IncludesEdgesAmongNeighbors) {
  ViewGraph graph = GraphWithViews(5);
  graph.AddEdge(0, 1, Geometry(50));
  graph.AddEdge(1, 2, Geometry(50));
  graph.AddEdge(3, 4, Geometry(50));
  const view_t added = graph.AddView(Intrinsics{});
  graph.AddEdge(added, 0, Geometry(50));
  graph.AddEdge(added, 1, Geometry(50));
  const auto changed = graph.EdgesWithChangedDistance(added);
  const std::set<ViewPair> set(changed.begin(), changed.end());
  EXPECT_TRUE(set.count(ViewPair(0, 1)));
  EXPECT_TRUE(set.count(ViewPair(1, 2)));
  EXPECT_TRUE(set.count(ViewPair(added, 0)));
  EXPECT_FALSE(set.count(ViewPair(3, 4)));
}

TEST(ViewGraph, JsonRoundTrip) {
  std::mt19937_64 rng(37);
  const ViewGraph graph = RandomGraph(&rng, 10, 0.4);
  const ViewGraph back = ViewGraph::FromJson(graph.ToJson());
  ASSERT_EQ(back.NumViews(), graph.NumViews());
  ASSERT_EQ(back.NumEdges(), graph.NumEdges());
  for (const auto& [pair, edge] : graph.Edges()) {
    const ViewGraphEdge* other = back.FindEdge(pair.first, pair.second);
    ASSERT_NE(other, nullptr);
    EXPECT_EQ(other->geometry.inlier_count, edge.geometry.inlier_count);
    EXPECT_TRUE(other->geometry.rotation.isApprox(edge.geometry.rotation, 1e-12));
  }
  EXPECT_EQ(back.ToJson().dump(), graph.ToJson().dump());
}

}  // namespace
}  // namespace psfm
