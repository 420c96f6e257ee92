#include "psfm/reconstruction/cluster_reconstruction.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include <Eigen/Eigenvalues>
#include <glog/logging.h>

#include "psfm/geometry/so3.h"
#include "psfm/reconstruction/bundle_adjustment.h"
#include "psfm/reconstruction/incremental.h"
#include "psfm/registration/cluster_graph.h"
#include "psfm/registration/sim3_ransac.h"
#include "psfm/util/error.h"

namespace psfm {
namespace {

using PointIndex = std::map<FeatureKey, Eigen::Vector3d>;

PointIndex IndexPoints(const LocalReconstruction& recon,
                       const std::set<view_t>* restrict_to) {
  PointIndex index;
  for (const Track& track : recon.tracks) {
    if (!track.IsTriangulated()) continue;
    for (const auto& [view, element] : track.observations) {
      if (restrict_to != nullptr && !restrict_to->count(view)) continue;
      index.emplace(FeatureKey{view, element.point2D_idx}, *track.point);
    }
  }
  return index;
}

// Attaches a point to every untriangulated track with a feature in `index`.
// TriangulateAll validates the guesses afterwards.
void WarmStart(const PointIndex& index, const Sim3& transform,
               LocalReconstruction* recon) {
  for (Track& track : recon->tracks) {
    if (track.IsTriangulated() || track.state == TrackState::kConflicted) {
      continue;
    }
    for (const auto& [view, element] : track.observations) {
      const auto it = index.find({view, element.point2D_idx});
      if (it == index.end()) continue;
      track.point = transform * it->second;
      track.state = TrackState::kTriangulated;
      break;
    }
  }
}

CameraPose TransformPose(const CameraPose& pose, const Sim3& t) {
  return {pose.rotation * t.rotation.transpose(), t * pose.center};
}

template <typename Views>
std::size_t CountRegistered(const LocalReconstruction& recon,
                            const Views& views) {
  std::size_t n = 0;
  for (const view_t v : views) n += recon.registered.count(v);
  return n;
}

void FullAdjust(const ViewGraph& graph, const ReconstructionOptions& options,
                LocalReconstruction* recon) {
  BundleAdjust(graph, BundleScope::Full(), options.bundle, recon);
  recon->registered_at_full_ba = recon->registered.size();
  TriangulateAll(graph, options, recon);
}

}  // namespace

std::string ToString(ReconstructionPath path) {
  switch (path) {
    case ReconstructionPath::kEmpty:
      return "empty";
    case ReconstructionPath::kIncremental:
      return "incremental";
    case ReconstructionPath::kGlobal:
      return "global";
    case ReconstructionPath::kExtend:
      return "extend";
    case ReconstructionPath::kTransfer:
      return "transfer";
  }
  return "unknown";
}

double DetectBadConfiguration(const LocalReconstruction& recon,
                              const ClusterSubgraph& subgraph,
                              const GlobalRotations& rotations) {
  double rho = 0.0;
  for (const auto& [pair, edge] : subgraph.edges) {
    const auto pi = recon.poses.find(pair.first);
    const auto pj = recon.poses.find(pair.second);
    const auto ri = rotations.rotations.find(pair.first);
    const auto rj = rotations.rotations.find(pair.second);
    if (pi == recon.poses.end() || pj == recon.poses.end() ||
        ri == rotations.rotations.end() || rj == rotations.rotations.end()) {
      continue;
    }
    const Eigen::Matrix3d averaged = rj->second * ri->second.transpose();
    const Eigen::Matrix3d local =
        pj->second.rotation * pi->second.rotation.transpose();
    rho = std::max(rho, RotationAngleDeg(averaged * local.transpose()));
  }
  return rho;
}

LocalReconstruction GlobalInitialize(const ViewGraph& graph,
                                     const ClusterSubgraph& subgraph,
                                     const GlobalRotations& rotations,
                                     std::vector<Track> tracks,
                                     const ReconstructionOptions& options) {
  std::vector<view_t> views;
  std::map<view_t, int> slot;
  for (const view_t v : subgraph.views) {
    if (!rotations.rotations.count(v)) continue;
    slot[v] = static_cast<int>(views.size());
    views.push_back(v);
  }
  if (views.size() < 2) {
    throw DegenerateInput("GlobalInitialize: fewer than two rotated views");
  }
  struct Constraint {
    int i;
    int j;
    Eigen::Vector3d direction;
  };
  std::vector<Constraint> constraints;
  for (const auto& [pair, edge] : subgraph.edges) {
    const auto si = slot.find(pair.first);
    const auto sj = slot.find(pair.second);
    if (si == slot.end() || sj == slot.end()) continue;
    const Eigen::Vector3d d = rotations.rotations.at(pair.second).transpose() *
                              edge.geometry.translation_direction;
    constraints.push_back({si->second, sj->second, d.normalized()});
  }

  // Unknowns: centers of views[1..], views[0] at the origin.
  const int n = 3 * (static_cast<int>(views.size()) - 1);
  Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(n, n);
  for (const Constraint& c : constraints) {
    const Eigen::Matrix3d cross = CrossProductMatrix(c.direction);
    const Eigen::Matrix3d block = cross.transpose() * cross;
    // Row block: cross * (c_i - c_j).
    const int a = c.i == 0 ? -1 : 3 * (c.i - 1);
    const int b = c.j == 0 ? -1 : 3 * (c.j - 1);
    if (a >= 0) normal.block<3, 3>(a, a) += block;
    if (b >= 0) normal.block<3, 3>(b, b) += block;
    if (a >= 0 && b >= 0) {
      normal.block<3, 3>(a, b) -= block;
      normal.block<3, 3>(b, a) -= block;
    }
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigen(normal);
  const Eigen::VectorXd& values = eigen.eigenvalues();
  const double largest = std::max(values(n - 1), 1e-300);
  if (n >= 2 && values(1) < 1e-10 * largest) {
    std::string list;
    for (const view_t v : views) list += " " + std::to_string(v);
    throw DegenerateInput(
        "GlobalInitialize: center system is rank deficient over views" + list);
  }
  Eigen::VectorXd x = eigen.eigenvectors().col(0);

  std::vector<Eigen::Vector3d> centers(views.size(), Eigen::Vector3d::Zero());
  for (std::size_t k = 1; k < views.size(); ++k) {
    centers[k] = x.segment<3>(3 * static_cast<int>(k - 1));
  }
  int forward = 0;
  for (const Constraint& c : constraints) {
    forward += c.direction.dot(centers[c.i] - centers[c.j]) > 0.0 ? 1 : -1;
  }
  double baseline = 0.0;
  for (const Constraint& c : constraints) {
    baseline += (centers[c.i] - centers[c.j]).norm();
  }
  baseline /= static_cast<double>(std::max<std::size_t>(constraints.size(), 1));
  const double scale = (forward < 0 ? -1.0 : 1.0) / std::max(baseline, 1e-300);

  LocalReconstruction recon;
  recon.tracks = std::move(tracks);
  for (std::size_t k = 0; k < views.size(); ++k) {
    recon.AddPose(views[k], {rotations.rotations.at(views[k]), scale * centers[k]});
  }
  TriangulateAll(graph, options, &recon);
  FullAdjust(graph, options, &recon);
  return recon;
}

LocalReconstruction BuildIncremental(const ViewGraph& graph,
                                     const ClusterSubgraph& subgraph,
                                     const std::vector<Track>& tracks,
                                     const ReconstructionOptions& options,
                                     std::set<ViewPair> excluded) {
  for (int attempt = 0; attempt < 5; ++attempt) {
    ViewPair seed;
    try {
      seed = SelectSeedPair(subgraph, graph, options, excluded);
    } catch (const DegenerateInput&) {
      return {};
    }
    LocalReconstruction recon;
    try {
      recon = InitializeTwoView(graph, seed, subgraph.edges.at(seed).geometry,
                                tracks, options);
    } catch (const DegenerateInput&) {
      excluded.insert(seed);
      continue;
    }
    if (recon.NumTriangulated() < 8) {
      excluded.insert(seed);
      continue;
    }
    GrowReconstruction(graph, subgraph.views, options, &recon);
    return recon;
  }
  return {};
}

bool TransferSubmodel(const ViewGraph& graph, const LocalReconstruction& source,
                      const std::set<view_t>& group,
                      const ReconstructionOptions& options,
                      LocalReconstruction* dest) {
  std::set<view_t> graft;
  for (const view_t v : group) {
    if (source.registered.count(v)) graft.insert(v);
  }
  if (graft.size() < 2) {
    return false;
  }
  const PointIndex points = IndexPoints(source, &graft);
  if (dest->registered.size() < 2) {
    for (const view_t v : std::set<view_t>(dest->registered)) dest->RemovePose(v);
    for (const view_t v : graft) dest->AddPose(v, source.poses.at(v));
    dest->seed_pair.reset();
    for (Track& track : dest->tracks) track.ClearPoint();
    WarmStart(points, Sim3::Identity(), dest);
    TriangulateAll(graph, options, dest);
    return true;
  }

  std::vector<Eigen::Vector3d> src, dst;
  for (const Track& track : dest->tracks) {
    if (!track.IsTriangulated()) continue;
    for (const auto& [view, element] : track.observations) {
      const auto it = points.find({view, element.point2D_idx});
      if (it == points.end()) continue;
      src.push_back(it->second);
      dst.push_back(*track.point);
      break;
    }
  }
  if (src.size() < std::max<std::size_t>(options.min_transfer_common_tracks, 3)) {
    return false;
  }
  Sim3RansacOptions ro;
  ro.inlier_threshold = 0.02 * SceneDiameter(*dest);
  ro.confidence = options.ransac_confidence;
  ro.max_iterations = options.ransac_max_iterations;
  std::mt19937_64 rng(RansacSeed(dest->cluster, *graft.begin()) ^ 0x7f4a7c15ULL);
  const Sim3RansacResult result = RansacSim3(src, dst, ro, &rng);
  if (!result.success ||
      result.num_inliers < options.min_transfer_common_tracks) {
    return false;
  }
  for (const view_t v : graft) {
    if (!dest->registered.count(v)) {
      dest->AddPose(v, TransformPose(source.poses.at(v), result.transform));
    }
  }
  WarmStart(points, result.transform, dest);
  TriangulateAll(graph, options, dest);
  return true;
}

LocalReconstruction ReconstructCluster(const ViewGraph& graph,
                                       const ClusterReconstructionInput& input,
                                       const ReconstructionOptions& options,
                                       ClusterReconstructionReport* report) {
  ClusterReconstructionReport local;
  const ClusterSubgraph& subgraph = *input.subgraph;
  const std::vector<Track> tracks = BuildTracks(subgraph, graph);

  const auto build_fresh = [&](const std::set<ViewPair>& excluded,
                               bool allow_global, ReconstructionPath* path) {
    LocalReconstruction fresh;
    *path = ReconstructionPath::kEmpty;
    if (subgraph.views.size() < options.mu_min) {
      return fresh;
    }
    if (subgraph.views.size() >= options.mu_max && allow_global) {
      try {
        fresh = GlobalInitialize(graph, subgraph, *input.rotations, tracks,
                                 options);
        fresh.cluster = input.cluster;
        GrowReconstruction(graph, subgraph.views, options, &fresh);
        *path = ReconstructionPath::kGlobal;
        return fresh;
      } catch (const DegenerateInput& e) {
        LOG(WARNING) << "cluster " << input.cluster << ": " << e.what();
      }
    }
    fresh = BuildIncremental(graph, subgraph, tracks, options, excluded);
    if (!fresh.Empty()) *path = ReconstructionPath::kIncremental;
    return fresh;
  };

  LocalReconstruction recon;
  recon.cluster = input.cluster;
  recon.tracks = tracks;
  if (input.prior != nullptr &&
      CountRegistered(*input.prior, subgraph.views) >= 2) {
    for (const auto& [view, pose] : input.prior->poses) {
      if (subgraph.Contains(view)) recon.AddPose(view, pose);
    }
    if (input.prior->seed_pair && recon.registered.count(input.prior->seed_pair->first) &&
        recon.registered.count(input.prior->seed_pair->second)) {
      recon.seed_pair = input.prior->seed_pair;
    }
    recon.registered_at_full_ba =
        std::min(input.prior->registered_at_full_ba, recon.registered.size());
    WarmStart(IndexPoints(*input.prior, &recon.registered), Sim3::Identity(),
              &recon);
    TriangulateAll(graph, options, &recon);
  }

  bool grafted = false;
  for (const TransferSource& transfer : input.transfers) {
    std::set<view_t> group;
    for (const view_t v : transfer.views) {
      if (subgraph.Contains(v)) group.insert(v);
    }
    if (CountRegistered(*transfer.source, group) < options.mu_min) continue;
    if (TransferSubmodel(graph, *transfer.source, group, options, &recon)) {
      grafted = true;
      local.grafted_views += CountRegistered(*transfer.source, group);
    } else {
      ++local.deferred_transfers;
    }
  }

  if (recon.registered.size() >= 2) {
    local.path = grafted ? ReconstructionPath::kTransfer : ReconstructionPath::kExtend;
    if (grafted) FullAdjust(graph, options, &recon);
    GrowReconstruction(graph, subgraph.views, options, &recon);
  } else {
    recon = build_fresh({}, true, &local.path);
    recon.cluster = input.cluster;
  }

  recon.rho_l_deg = DetectBadConfiguration(recon, subgraph, *input.rotations);
  local.initial_rho_l_deg = recon.rho_l_deg;
  if (!recon.Empty() && recon.rho_l_deg > options.rho_lmax_deg) {
    local.reset = true;
    std::set<ViewPair> excluded;
    if (recon.seed_pair) excluded.insert(*recon.seed_pair);
    ReconstructionPath path;
    LocalReconstruction rebuilt = build_fresh(excluded, false, &path);
    rebuilt.cluster = input.cluster;
    rebuilt.rho_l_deg = DetectBadConfiguration(rebuilt, subgraph, *input.rotations);
    if (rebuilt.Empty() || rebuilt.rho_l_deg > options.rho_lmax_deg) {
      local.rebuild_failed = true;
      recon = LocalReconstruction();
      recon.cluster = input.cluster;
      recon.tracks = tracks;
    } else {
      recon = std::move(rebuilt);
      local.path = path;
    }
  }
  if (report != nullptr) *report = local;
  return recon;
}

}  // namespace psfm
