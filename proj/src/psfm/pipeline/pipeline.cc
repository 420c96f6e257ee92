#include "psfm/pipeline/pipeline.h"

#include <algorithm>
#include <exception>
#include <iterator>
#include <optional>
#include <set>

#include <glog/logging.h>

#include "psfm/clustering/clustering.h"
#include "psfm/util/error.h"
#include "psfm/viewgraph/subgraph.h"

namespace psfm {
namespace {

struct ClusterJob {
  cluster_t cluster = kInvalidClusterId;
  std::set<view_t> views;
  const LocalReconstruction* prior = nullptr;
  std::vector<TransferSource> transfers;
};

struct JobResult {
  LocalReconstruction recon;
  ClusterReconstructionReport report;
  std::optional<AveragingReport> averaging;
};

std::vector<std::size_t> ResidualHistogram(const AveragingReport& report) {
  constexpr std::size_t kBins = std::size(kResidualHistogramEdgesDeg) + 1;
  std::vector<std::size_t> counts(kBins, 0);
  for (const auto& [pair, residual] : report.per_edge_residual_deg) {
    std::size_t bin = 0;
    while (bin + 1 < kBins && residual > kResidualHistogramEdgesDeg[bin]) ++bin;
    ++counts[bin];
  }
  return counts;
}

std::vector<view_t> LargestComponent(const ClusterSubgraph& subgraph) {
  std::vector<view_t> best;
  for (auto& component : subgraph.Components()) {
    if (component.size() > best.size()) best = std::move(component);
  }
  return best;
}

ClusterSubgraph Restrict(const ClusterSubgraph& subgraph,
                         const std::vector<view_t>& views) {
  const std::set<view_t> keep(views.begin(), views.end());
  ClusterSubgraph out;
  out.views = views;
  for (const auto& [pair, edge] : subgraph.edges) {
    if (keep.count(pair.first) && keep.count(pair.second)) {
      out.edges.emplace(pair, edge);
    }
  }
  return out;
}

JobResult RunJob(const ViewGraph& graph, const ClusterJob& job,
                 const PipelineOptions& options) {
  JobResult result;
  result.recon.cluster = job.cluster;
  ClusterSubgraph subgraph = ExtractSubgraph(graph, job.views);
  std::vector<view_t> component = LargestComponent(subgraph);
  if (component.size() < std::max<std::size_t>(2, options.reconstruction.mu_min)) {
    return result;
  }
  subgraph = Restrict(subgraph, component);
  const GlobalRotations init = MstInitialize(subgraph);
  GlobalRotations rotations = SolveL1(subgraph, init, options.rotation);
  result.averaging = FilterEdges(subgraph, rotations, options.rotation.rho_gmax_deg);
  subgraph.RemoveEdges(result.averaging->removed_edges);
  component = LargestComponent(subgraph);
  if (component.size() != subgraph.views.size()) {
    subgraph = Restrict(subgraph, component);
  }

  ClusterReconstructionInput input;
  input.cluster = job.cluster;
  input.subgraph = &subgraph;
  input.rotations = &rotations;
  input.prior = job.prior;
  input.transfers = job.transfers;
  try {
    result.recon = ReconstructCluster(graph, input, options.reconstruction, &result.report);
  } catch (const DegenerateInput& e) {
    LOG(WARNING) << "cluster " << job.cluster << " left unreconstructed: " << e.what();
    result.recon = LocalReconstruction{};
    result.recon.cluster = job.cluster;
    result.report = ClusterReconstructionReport{};
  }
  return result;
}

}  // namespace

nlohmann::json Snapshot::ToJson() const {
  nlohmann::json j;
  j["timestep"] = timestep;
  auto& part = j["partition"] = nlohmann::json::array();
  for (const auto& [id, views] : partition) {
    part.push_back({{"cluster_id", id}, {"member_view_ids", views}});
  }
  auto& cl = j["clusters"] = nlohmann::json::array();
  for (const ClusterSummary& c : clusters) {
    cl.push_back({{"cluster_id", c.cluster},
                  {"views", c.views},
                  {"registered", c.registered},
                  {"points", c.points},
                  {"reprojection_rmse_px", c.reprojection_rmse_px},
                  {"rho_l_deg", c.rho_l_deg},
                  {"path", c.path},
                  {"reset", c.reset}});
    auto& averaging = cl.back()["rotation_averaging"];
    if (c.averaged) {
      nlohmann::json removed = nlohmann::json::array();
      for (const ViewPair& p : c.removed_edges) removed.push_back({p.first, p.second});
      averaging = {{"removed_edges", removed},
                   {"residual_histogram",
                    {{"upper_edges_deg", kResidualHistogramEdgesDeg},
                     {"counts", c.residual_histogram}}}};
    }
  }
  j["cluster_graph"] = cluster_graph.ToJson();
  j["effective_clusters"] = effective_clusters;
  j["metrics"] = metrics.ToJson();
  j["has_truth"] = has_truth;
  j["recoveries_this_step"] = recoveries_this_step;
  j["reconstructed_clusters"] = reconstructed_clusters;
  return j;
}

Pipeline::Pipeline(PipelineOptions options, const Scene* truth)
    : options_(std::move(options)),
      truth_(truth),
      graph_(options_.min_correspondences) {}

void Pipeline::Validate(const MatchEvent& event) const {
  if (event.view != graph_.NumViews()) {
    throw InvalidArgument("event view " + std::to_string(event.view) +
                          " does not match the next id " +
                          std::to_string(graph_.NumViews()));
  }
  if (truth_ != nullptr && (event.camera < 0 || event.camera >= truth_->NumCameras())) {
    throw InvalidArgument("event camera index outside the ground-truth scene");
  }
  std::set<view_t> others;
  for (const EventEdge& edge : event.edges) {
    if (edge.other >= event.view) {
      throw InvalidArgument("edge to view " + std::to_string(edge.other) +
                            " which has not arrived");
    }
    if (!others.insert(edge.other).second) {
      throw InvalidArgument("duplicate edge to view " + std::to_string(edge.other));
    }
    if (!edge.geometry.IsValid(1e-6)) {
      throw InvalidArgument("invalid relative geometry on edge to view " +
                            std::to_string(edge.other));
    }
    const std::size_t other_size = graph_.Keypoints(edge.other).size();
    for (const FeatureMatch& m : edge.matches) {
      if (m.point2D_idx1 >= other_size || m.point2D_idx2 >= event.keypoints.size()) {
        throw InvalidArgument("match index outside the keypoint list on edge to view " +
                              std::to_string(edge.other));
      }
    }
  }
}

Snapshot Pipeline::ProcessEvent(const MatchEvent& event) {
  Validate(event);
  const view_t view = graph_.AddView(event.intrinsics, event.keypoints);
  cameras_.push_back(event.camera);
  for (const EventEdge& edge : event.edges) {
    graph_.AddEdge(edge.other, view, edge.geometry, edge.matches);
  }

  auto [partition, delta] = ClusterIncremental(partition_, graph_, view, options_.eta);

  std::vector<ClusterJob> jobs;
  for (const auto& [id, views] : partition.clusters) {
    if (delta.unchanged_clusters.count(id)) continue;
    ClusterJob job;
    job.cluster = id;
    job.views = views;
    const auto prior = reconstructions_.find(id);
    if (prior != reconstructions_.end() && !prior->second.Empty()) {
      job.prior = &prior->second;
    }
    for (const TransferGroup& group : delta.transfers) {
      if (group.destination != id) continue;
      const auto source = reconstructions_.find(group.source);
      if (source == reconstructions_.end() || source->second.Empty()) continue;
      job.transfers.push_back({&source->second, group.views});
    }
    jobs.push_back(std::move(job));
  }

  std::vector<JobResult> results(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  const int n = static_cast<int>(jobs.size());
#pragma omp parallel for schedule(dynamic) if (options_.execution == Execution::kParallel)
  for (int k = 0; k < n; ++k) {
    try {
      results[k] = RunJob(graph_, jobs[k], options_);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (const auto& error : errors) {
    if (error) std::rethrow_exception(error);
  }

  Snapshot snapshot;
  snapshot.timestep = view;
  std::map<cluster_t, LocalReconstruction> next;
  std::map<cluster_t, const JobResult*> ran;
  for (std::size_t k = 0; k < jobs.size(); ++k) ran[jobs[k].cluster] = &results[k];
  for (const auto& [id, views] : partition.clusters) {
    snapshot.partition[id] = std::vector<view_t>(views.begin(), views.end());
    ClusterSummary summary;
    summary.cluster = id;
    summary.views = views.size();
    const auto it = ran.find(id);
    if (it != ran.end()) {
      next[id] = std::move(results[it->second - results.data()].recon);
      const ClusterReconstructionReport& report = it->second->report;
      summary.path = ToString(report.path);
      summary.reset = report.reset;
      if (const auto& averaging = it->second->averaging) {
        summary.averaged = true;
        summary.removed_edges.assign(averaging->removed_edges.begin(),
                                     averaging->removed_edges.end());
        summary.residual_histogram = ResidualHistogram(*averaging);
      }
      snapshot.recoveries_this_step += report.reset;
      ++snapshot.reconstructed_clusters;
    } else if (const auto old = reconstructions_.find(id); old != reconstructions_.end()) {
      next[id] = std::move(old->second);
    } else {
      next[id].cluster = id;
    }
    const LocalReconstruction& recon = next[id];
    summary.registered = recon.registered.size();
    summary.points = recon.NumTriangulated();
    summary.reprojection_rmse_px = recon.ReprojectionRmse(graph_);
    summary.rho_l_deg = recon.rho_l_deg;
    snapshot.clusters.push_back(summary);
  }
  reconstructions_ = std::move(next);
  partition_ = std::move(partition);
  recoveries_ += snapshot.recoveries_this_step;

  cluster_graph_ = CollectConstraints(graph_, reconstructions_, options_.constraints);
  cluster_graph_.nodes = OptimizeClusterPoses(cluster_graph_, options_.pose_graph);

  snapshot.cluster_graph = cluster_graph_;
  snapshot.effective_clusters = cluster_graph_.Components();
  const std::vector<EvaluatedCamera> model = ModelCameras();
  if (truth_ != nullptr) {
    snapshot.metrics = Evaluate(model, *truth_);
    snapshot.has_truth = true;
  } else {
    snapshot.metrics.registered_cameras = model.size();
  }
  snapshot.metrics.clusters_raw = cluster_graph_.nodes.size();
  snapshot.metrics.clusters_effective = snapshot.effective_clusters.size();
  snapshot.metrics.recoveries = recoveries_;
  return snapshot;
}

std::vector<EvaluatedCamera> Pipeline::ModelCameras() const {
  std::vector<EvaluatedCamera> model;
  const auto components = cluster_graph_.Components();
  for (std::size_t k = 0; k < components.size(); ++k) {
    for (const cluster_t c : components[k]) {
      const LocalReconstruction& recon = reconstructions_.at(c);
      for (const auto& [v, pose] : recon.poses) {
        model.push_back({cameras_[v], static_cast<int>(k),
                         ToWorld(cluster_graph_, c, pose.center)});
      }
    }
  }
  return model;
}

}  // namespace psfm
