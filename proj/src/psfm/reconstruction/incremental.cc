#include "psfm/reconstruction/incremental.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Geometry>
#include <glog/logging.h>

#include "psfm/geometry/p3p.h"
#include "psfm/geometry/so3.h"
#include "psfm/geometry/triangulation.h"
#include "psfm/util/error.h"

namespace psfm {
namespace {

struct RegisteredObservation {
  view_t view;
  const CameraPose* pose;
  const Intrinsics* intrinsics;
  Eigen::Vector2d pixel;
};

std::optional<Eigen::Vector3d> TriangulateSubset(
    const std::vector<RegisteredObservation>& obs,
    const std::vector<std::size_t>& subset) {
  std::vector<TriangulationView> views;
  for (const std::size_t k : subset) {
    views.push_back({obs[k].pose, obs[k].intrinsics, obs[k].pixel});
  }
  return TriangulateLinear(views);
}

bool Consistent(const RegisteredObservation& o, const Eigen::Vector3d& point,
                double threshold) {
  return ReprojectionError(*o.pose, *o.intrinsics, point, o.pixel) < threshold;
}

double AngleOf(const std::vector<RegisteredObservation>& obs,
               const std::vector<std::size_t>& subset,
               const Eigen::Vector3d& point) {
  std::vector<Eigen::Vector3d> centers;
  for (const std::size_t k : subset) {
    centers.push_back(obs[k].pose->center);
  }
  return MaxTriangulationAngleDeg(centers, point);
}

std::vector<std::size_t> ConsistentSubset(
    const std::vector<RegisteredObservation>& obs, const Eigen::Vector3d& point,
    double threshold) {
  std::vector<std::size_t> subset;
  for (std::size_t k = 0; k < obs.size(); ++k) {
    if (Consistent(obs[k], point, threshold)) subset.push_back(k);
  }
  return subset;
}

}  // namespace

AbsolutePoseResult EstimateAbsolutePoseRansac(
    std::span<const Eigen::Vector2d> pixels,
    std::span<const Eigen::Vector3d> points, const Intrinsics& intrinsics,
    const ReconstructionOptions& options, std::mt19937_64* rng) {
  AbsolutePoseResult best;
  const std::size_t n = pixels.size();
  if (n < 3) {
    return best;
  }
  std::vector<Eigen::Vector3d> bearings(n);
  for (std::size_t k = 0; k < n; ++k) {
    bearings[k] = intrinsics.Bearing(pixels[k]);
  }
  const auto score = [&](const CameraPose& pose, std::vector<char>* mask) {
    std::size_t count = 0;
    mask->assign(n, 0);
    for (std::size_t k = 0; k < n; ++k) {
      if (ReprojectionError(pose, intrinsics, points[k], pixels[k]) <
          options.pixel_threshold) {
        (*mask)[k] = 1;
        ++count;
      }
    }
    return count;
  };

  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<char> mask;
  double max_iterations = options.ransac_max_iterations;
  for (int iteration = 0; iteration < max_iterations; ++iteration) {
    std::size_t a = pick(*rng);
    std::size_t b = pick(*rng);
    std::size_t c = pick(*rng);
    if (a == b || b == c || a == c) continue;
    for (const CameraPose& pose :
         SolveP3P({bearings[a], bearings[b], bearings[c]},
                  {points[a], points[b], points[c]})) {
      const std::size_t count = score(pose, &mask);
      if (count > best.num_inliers) {
        best.success = true;
        best.pose = pose;
        best.num_inliers = count;
        best.inlier_mask = mask;
        const double w = static_cast<double>(count) / static_cast<double>(n);
        const double fail = 1.0 - w * w * w;
        if (fail <= 0.0) {
          max_iterations = 0;
        } else {
          max_iterations = std::min<double>(
              options.ransac_max_iterations,
              std::ceil(std::log(1.0 - options.ransac_confidence) /
                        std::log(fail)));
        }
      }
    }
  }
  best.success = best.num_inliers >= 3;
  return best;
}

bool TriangulateTrack(const ViewGraph& graph,
                      const std::map<view_t, CameraPose>& poses,
                      const ReconstructionOptions& options, Track* track,
                      std::vector<Track>* split_off) {
  std::vector<RegisteredObservation> obs;
  for (const auto& [view, element] : track->observations) {
    const auto it = poses.find(view);
    if (it != poses.end()) {
      obs.push_back(
          {view, &it->second, &graph.ViewIntrinsics(view), element.pixel});
    }
  }
  track->ClearPoint();
  if (obs.size() < 2) {
    return false;
  }
  const double threshold = options.pixel_threshold;
  std::vector<std::size_t> all(obs.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto accept = [&](const std::vector<std::size_t>& subset,
                          const Eigen::Vector3d& point) {
    if (AngleOf(obs, subset, point) <= options.min_triangulation_angle_deg) {
      return false;
    }
    return std::all_of(subset.begin(), subset.end(), [&](std::size_t k) {
      return Consistent(obs[k], point, threshold);
    });
  };

  if (const auto point = TriangulateSubset(obs, all);
      point && accept(all, *point)) {
    track->point = *point;
    track->state = TrackState::kTriangulated;
    return true;
  }
  if (obs.size() < 3) {
    return false;
  }

  // Largest consistent subset seeded from observation pairs.
  const std::size_t limit = std::min<std::size_t>(obs.size(), 12);
  std::vector<std::size_t> best_subset;
  for (std::size_t a = 0; a < limit; ++a) {
    for (std::size_t b = a + 1; b < limit; ++b) {
      const auto point = TriangulateSubset(obs, {a, b});
      if (!point || !accept({a, b}, *point)) continue;
      std::vector<std::size_t> subset = ConsistentSubset(obs, *point, threshold);
      if (subset.size() > best_subset.size()) {
        best_subset = std::move(subset);
      }
    }
  }
  if (best_subset.size() < 2) {
    return false;
  }
  const auto point = TriangulateSubset(obs, best_subset);
  if (!point || !accept(best_subset, *point)) {
    return false;
  }
  std::vector<char> keep(obs.size(), 0);
  for (const std::size_t k : best_subset) keep[k] = 1;
  for (std::size_t k = 0; k < obs.size(); ++k) {
    if (keep[k]) continue;
    Track conflicted;
    conflicted.observations[obs[k].view] = track->observations.at(obs[k].view);
    conflicted.state = TrackState::kConflicted;
    track->observations.erase(obs[k].view);
    if (split_off != nullptr) split_off->push_back(std::move(conflicted));
  }
  track->point = *point;
  track->state = TrackState::kTriangulated;
  return true;
}

std::size_t TriangulateAll(const ViewGraph& graph,
                           const ReconstructionOptions& options,
                           LocalReconstruction* recon) {
  std::vector<Track> split_off;
  std::size_t triangulated = 0;
  for (Track& track : recon->tracks) {
    if (track.state == TrackState::kConflicted) continue;
    std::size_t registered_obs = 0;
    bool valid = track.IsTriangulated();
    for (const auto& [view, element] : track.observations) {
      const auto it = recon->poses.find(view);
      if (it == recon->poses.end()) continue;
      ++registered_obs;
      if (valid && ReprojectionError(it->second, graph.ViewIntrinsics(view),
                                     *track.point, element.pixel) >=
                       options.pixel_threshold) {
        valid = false;
      }
    }
    if (valid && registered_obs >= 2) {
      ++triangulated;
      continue;
    }
    if (registered_obs < 2) {
      track.ClearPoint();
      continue;
    }
    if (TriangulateTrack(graph, recon->poses, options, &track, &split_off)) {
      ++triangulated;
    }
  }
  for (Track& t : split_off) {
    recon->tracks.push_back(std::move(t));
  }
  return triangulated;
}

RegistrationOutcome RegisterView(const ViewGraph& graph, view_t view,
                                 const ReconstructionOptions& options,
                                 LocalReconstruction* recon,
                                 bool* ran_full_ba) {
  if (ran_full_ba != nullptr) *ran_full_ba = false;
  std::vector<std::size_t> track_ids;
  std::vector<Eigen::Vector2d> pixels;
  std::vector<Eigen::Vector3d> points;
  for (std::size_t t = 0; t < recon->tracks.size(); ++t) {
    const Track& track = recon->tracks[t];
    if (!track.IsTriangulated()) continue;
    const auto it = track.observations.find(view);
    if (it == track.observations.end()) continue;
    track_ids.push_back(t);
    pixels.push_back(it->second.pixel);
    points.push_back(*track.point);
  }
  if (pixels.size() < 4) {
    return RegistrationOutcome::kDeferred;
  }
  std::mt19937_64 rng(RansacSeed(recon->cluster, view));
  const AbsolutePoseResult result = EstimateAbsolutePoseRansac(
      pixels, points, graph.ViewIntrinsics(view), options, &rng);
  if (!result.success ||
      static_cast<double>(result.num_inliers) <
          options.min_inlier_ratio * static_cast<double>(pixels.size())) {
    return RegistrationOutcome::kRejected;
  }

  recon->AddPose(view, result.pose);
  for (std::size_t k = 0; k < track_ids.size(); ++k) {
    if (result.inlier_mask[k]) continue;
    Track& track = recon->tracks[track_ids[k]];
    Track conflicted;
    conflicted.observations[view] = track.observations.at(view);
    conflicted.state = TrackState::kConflicted;
    track.observations.erase(view);
    recon->tracks.push_back(std::move(conflicted));
  }

  BundleAdjust(graph, BundleScope::Local({view}), options.bundle, recon);
  TriangulateAll(graph, options, recon);
  if (recon->DirtyGrowth() > options.eta_grow) {
    BundleAdjust(graph, BundleScope::Full(), options.bundle, recon);
    recon->registered_at_full_ba = recon->registered.size();
    TriangulateAll(graph, options, recon);
    if (ran_full_ba != nullptr) *ran_full_ba = true;
  }
  return RegistrationOutcome::kRegistered;
}

double MedianTriangulationAngleDeg(const ViewGraph& graph, ViewPair pair,
                                   const ViewGraphEdge& edge) {
  if (edge.matches.empty()) {
    return 0.0;
  }
  const Intrinsics& k1 = graph.ViewIntrinsics(pair.first);
  const Intrinsics& k2 = graph.ViewIntrinsics(pair.second);
  const auto& kp1 = graph.Keypoints(pair.first);
  const auto& kp2 = graph.Keypoints(pair.second);
  const Eigen::Matrix3d rt = edge.geometry.rotation.transpose();
  std::vector<double> angles;
  angles.reserve(edge.matches.size());
  for (const FeatureMatch& m : edge.matches) {
    const Eigen::Vector3d d1 = k1.Bearing(kp1[m.point2D_idx1]);
    const Eigen::Vector3d d2 = rt * k2.Bearing(kp2[m.point2D_idx2]);
    angles.push_back(std::atan2(d1.cross(d2).norm(), d1.dot(d2)));
  }
  const auto mid = angles.begin() + static_cast<std::ptrdiff_t>(angles.size() / 2);
  std::nth_element(angles.begin(), mid, angles.end());
  return RadToDeg(*mid);
}

ViewPair SelectSeedPair(const ClusterSubgraph& subgraph, const ViewGraph& graph,
                        const ReconstructionOptions& options,
                        const std::set<ViewPair>& excluded) {
  std::vector<std::pair<ViewPair, const ViewGraphEdge*>> edges;
  for (const auto& [pair, edge] : subgraph.edges) {
    if (!excluded.count(pair)) edges.emplace_back(pair, &edge);
  }
  if (edges.empty()) {
    throw DegenerateInput("SelectSeedPair: no eligible edge");
  }
  std::stable_sort(edges.begin(), edges.end(), [](const auto& a,
                                                  const auto& b) {
    return a.second->geometry.inlier_count > b.second->geometry.inlier_count;
  });
  for (const auto& [pair, edge] : edges) {
    if (MedianTriangulationAngleDeg(graph, pair, *edge) >
        options.seed_min_median_angle_deg) {
      return pair;
    }
  }
  return edges.front().first;
}

LocalReconstruction InitializeTwoView(const ViewGraph& graph, ViewPair pair,
                                      const RelativeGeometry& geometry,
                                      std::vector<Track> tracks,
                                      const ReconstructionOptions& options) {
  LocalReconstruction recon;
  recon.tracks = std::move(tracks);
  std::size_t shared = 0;
  for (const Track& track : recon.tracks) {
    if (track.observations.count(pair.first) &&
        track.observations.count(pair.second)) {
      ++shared;
    }
  }
  if (shared < 8) {
    throw DegenerateInput("InitializeTwoView: fewer than 8 correspondences");
  }
  CameraPose first;
  const CameraPose second = CameraPose::FromRotationTranslation(
      geometry.rotation, geometry.translation_direction.normalized());
  recon.AddPose(pair.first, first);
  recon.AddPose(pair.second, second);
  recon.seed_pair = pair;

  const std::map<view_t, CameraPose> two = {{pair.first, first},
                                            {pair.second, second}};
  for (Track& track : recon.tracks) {
    track.ClearPoint();
    const auto a = track.observations.find(pair.first);
    const auto b = track.observations.find(pair.second);
    if (a == track.observations.end() || b == track.observations.end()) {
      continue;
    }
    Track probe;
    probe.observations = {*a, *b};
    if (TriangulateTrack(graph, two, options, &probe)) {
      track.point = probe.point;
      track.state = TrackState::kTriangulated;
    }
  }
  BundleAdjust(graph, BundleScope::Full(), options.bundle, &recon);
  recon.registered_at_full_ba = 2;
  TriangulateAll(graph, options, &recon);
  return recon;
}

std::set<view_t> GrowReconstruction(const ViewGraph& graph,
                                    const std::vector<view_t>& views,
                                    const ReconstructionOptions& options,
                                    LocalReconstruction* recon) {
  std::set<view_t> pending;
  for (const view_t v : views) {
    if (!recon->registered.count(v)) pending.insert(v);
  }
  bool progress = true;
  while (progress && !pending.empty()) {
    progress = false;
    std::map<view_t, std::size_t> support;
    for (const Track& track : recon->tracks) {
      if (!track.IsTriangulated()) continue;
      for (const auto& [view, element] : track.observations) {
        if (pending.count(view)) ++support[view];
      }
    }
    std::vector<std::pair<std::size_t, view_t>> order;
    for (const auto& [view, count] : support) {
      if (count >= 4) order.emplace_back(count, view);
    }
    std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    for (const auto& [count, view] : order) {
      if (RegisterView(graph, view, options, recon) ==
          RegistrationOutcome::kRegistered) {
        pending.erase(view);
        progress = true;
        break;
      }
    }
  }
  return pending;
}

}  // namespace psfm
