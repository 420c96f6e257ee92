// Serial reference versus OpenMP kernels on temple-sized inputs.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "psfm/clustering/clustering.h"
#include "psfm/kernels/ba_linearization.h"
#include "psfm/kernels/edge_distances.h"
#include "psfm/pipeline/pipeline.h"
#include "psfm/simulator/scene.h"
#include "psfm/simulator/stream.h"

namespace psfm {
namespace {

Execution ExecutionArg(const benchmark::State& state) {
  return state.range(0) == 0 ? Execution::kSerial : Execution::kParallel;
}

struct BAProblem {
  std::vector<CameraPose> cameras;
  std::vector<Eigen::Vector3d> points;
  std::vector<BAObservation> observations;
  Intrinsics intrinsics{800.0, 800.0, 500.0, 400.0, 1000, 800};
};

const BAProblem& Problem() {
  static const BAProblem problem = [] {
    BAProblem p;
    const Scene scene = GenerateTemple(TempleOptions{});
    p.cameras = scene.cameras;
    p.points = scene.points;
    std::mt19937_64 rng(5);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (std::size_t i = 0; i < scene.cameras.size(); ++i) {
      for (const int q : scene.visibility[i]) {
        const auto px = ProjectPoint(scene.cameras[i], p.intrinsics, scene.points[q]);
        p.observations.push_back({static_cast<int>(i), q,
                                  *px + Eigen::Vector2d(noise(rng), noise(rng)),
                                  &p.intrinsics});
      }
    }
    return p;
  }();
  return problem;
}

void BM_LinearizeObservations(benchmark::State& state) {
  const BAProblem& p = Problem();
  BALinearization out;
  for (auto _ : state) {
    LinearizeObservations(p.cameras, p.points, p.observations, ExecutionArg(state), &out);
    benchmark::DoNotOptimize(out);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(p.observations.size()));
}
BENCHMARK(BM_LinearizeObservations)->Arg(0)->Arg(1)->ArgName("parallel");

void BM_ReprojectionCost(benchmark::State& state) {
  const BAProblem& p = Problem();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        ReprojectionCost(p.cameras, p.points, p.observations, ExecutionArg(state)));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(p.observations.size()));
}
BENCHMARK(BM_ReprojectionCost)->Arg(0)->Arg(1)->ArgName("parallel");

const ViewGraph& TempleGraph() {
  static const ViewGraph graph = [] {
    const Scene scene = GenerateTemple(TempleOptions{});
    StreamOptions options;
    options.ordering.kind = OrderingKind::kShuffled;
    ViewGraph g;
    for (const MatchEvent& event : GenerateStream(scene, options)) {
      const view_t view = g.AddView(event.intrinsics, event.keypoints);
      for (const EventEdge& edge : event.edges) {
        g.AddEdge(edge.other, view, edge.geometry, edge.matches);
      }
    }
    return g;
  }();
  return graph;
}

void BM_EdgeDistances(benchmark::State& state) {
  const ViewGraph& graph = TempleGraph();
  std::vector<ViewPair> pairs;
  for (const auto& [pair, edge] : graph.Edges()) pairs.push_back(pair);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ComputeEdgeDistances(graph, pairs, ExecutionArg(state)));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(pairs.size()));
}
BENCHMARK(BM_EdgeDistances)->Arg(0)->Arg(1)->ArgName("parallel");

void BM_ClusterFull(benchmark::State& state) {
  const ViewGraph& graph = TempleGraph();
  for (auto _ : state) {
    benchmark::DoNotOptimize(ClusterFull(graph, kDefaultEta, ExecutionArg(state)));
  }
}
BENCHMARK(BM_ClusterFull)->Arg(0)->Arg(1)->ArgName("parallel");

// Whole shuffled temple stream with every kernel and the per-cluster fan-out
// in one execution mode.
void BM_PipelineStream(benchmark::State& state) {
  const Scene scene = GenerateTemple(TempleOptions{});
  StreamOptions stream;
  stream.ordering.kind = OrderingKind::kShuffled;
  stream.ordering.seed = 1;
  const std::vector<MatchEvent> events = GenerateStream(scene, stream);
  PipelineOptions options;
  const Execution execution = ExecutionArg(state);
  options.execution = execution;
  options.constraints.execution = execution;
  options.reconstruction.bundle.execution = execution;
  for (auto _ : state) {
    Pipeline pipeline(options, &scene);
    for (const MatchEvent& event : events) pipeline.ProcessEvent(event);
    benchmark::DoNotOptimize(pipeline.cluster_graph());
  }
}
BENCHMARK(BM_PipelineStream)->Arg(0)->Arg(1)->ArgName("parallel")->Iterations(1)
    ->Unit(benchmark::kSecond);

}  // namespace
}  // namespace psfm

BENCHMARK_MAIN();
