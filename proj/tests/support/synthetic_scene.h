#pragma once

#include <cmath>
#include <map>
#include <random>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "psfm/geometry/camera.h"
#include "psfm/geometry/relative_geometry.h"
#include "psfm/reconstruction/local_reconstruction.h"
#include "psfm/viewgraph/view_graph.h"

namespace psfm::testing {

inline CameraPose LookAt(const Eigen::Vector3d& center,
                         const Eigen::Vector3d& target) {
  const Eigen::Vector3d z = (target - center).normalized();
  Eigen::Vector3d x = Eigen::Vector3d::UnitZ().cross(z);
  if (x.norm() < 1e-9) x = Eigen::Vector3d::UnitX();
  x.normalize();
  const Eigen::Vector3d y = z.cross(x);
  CameraPose pose;
  pose.rotation.row(0) = x.transpose();
  pose.rotation.row(1) = y.transpose();
  pose.rotation.row(2) = z.transpose();
  pose.center = center;
  return pose;
}

inline Intrinsics DefaultIntrinsics() {
  return {800.0, 800.0, 500.0, 400.0, 1000, 800};
}

struct SyntheticScene {
  ViewGraph graph{16};
  std::vector<CameraPose> poses;
  std::vector<Eigen::Vector3d> points;
  // keypoint index of each point per view, -1 when not visible.
  std::vector<std::vector<int>> keypoint_of;
};

struct SceneOptions {
  int num_views = 12;
  int num_points = 300;
  double arc_deg = 120.0;
  double radius = 10.0;
  double point_extent = 2.5;
  double pixel_noise = 0.0;
};

// Cameras on an arc looking at the origin, points uniform in a cube. Edges
// carry exact geometry and every shared visible point as a match.
inline SyntheticScene MakeSyntheticScene(std::mt19937_64& rng,
                                         const SceneOptions& options) {
  SyntheticScene scene;
  const Intrinsics intrinsics = DefaultIntrinsics();
  std::uniform_real_distribution<double> cube(-options.point_extent,
                                              options.point_extent);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int p = 0; p < options.num_points; ++p) {
    scene.points.emplace_back(cube(rng), cube(rng), cube(rng));
  }
  for (int v = 0; v < options.num_views; ++v) {
    const double a = (options.num_views == 1 ? 0.0
                                             : options.arc_deg * v /
                                                   (options.num_views - 1)) *
                     M_PI / 180.0;
    const Eigen::Vector3d c(options.radius * std::cos(a),
                            options.radius * std::sin(a),
                            0.5 * std::sin(3.0 * a));
    scene.poses.push_back(LookAt(c, Eigen::Vector3d::Zero()));
    std::vector<Eigen::Vector2d> keypoints;
    std::vector<int> index(options.num_points, -1);
    for (int p = 0; p < options.num_points; ++p) {
      const auto px = ProjectPoint(scene.poses.back(), intrinsics,
                                   scene.points[p]);
      if (!px || !intrinsics.InImage(*px)) continue;
      index[p] = static_cast<int>(keypoints.size());
      keypoints.push_back(*px + options.pixel_noise *
                                    Eigen::Vector2d(noise(rng), noise(rng)));
    }
    scene.keypoint_of.push_back(std::move(index));
    scene.graph.AddView(intrinsics, std::move(keypoints));
  }
  for (int i = 0; i < options.num_views; ++i) {
    for (int j = i + 1; j < options.num_views; ++j) {
      std::vector<FeatureMatch> matches;
      for (int p = 0; p < options.num_points; ++p) {
        const int a = scene.keypoint_of[i][p];
        const int b = scene.keypoint_of[j][p];
        if (a >= 0 && b >= 0) {
          matches.push_back({static_cast<point2D_t>(a),
                             static_cast<point2D_t>(b)});
        }
      }
      RelativeGeometry geometry =
          RelativeGeometryFromPoses(scene.poses[i], scene.poses[j]);
      geometry.inlier_count = static_cast<std::uint32_t>(matches.size());
      scene.graph.AddEdge(i, j, geometry, std::move(matches));
    }
  }
  return scene;
}

// Ground-truth reconstruction of the scene: every view registered and one
// triangulated track per point seen at least twice.
inline LocalReconstruction TruthReconstruction(const SyntheticScene& scene) {
  LocalReconstruction recon;
  for (std::size_t v = 0; v < scene.poses.size(); ++v) {
    recon.AddPose(static_cast<view_t>(v), scene.poses[v]);
  }
  for (std::size_t p = 0; p < scene.points.size(); ++p) {
    Track track;
    for (std::size_t v = 0; v < scene.poses.size(); ++v) {
      const int kp = scene.keypoint_of[v][p];
      if (kp < 0) continue;
      track.observations[static_cast<view_t>(v)] = {
          static_cast<point2D_t>(kp),
          scene.graph.Keypoints(static_cast<view_t>(v))[kp]};
    }
    if (track.observations.size() < 2) continue;
    track.point = scene.points[p];
    track.state = TrackState::kTriangulated;
    recon.tracks.push_back(std::move(track));
  }
  recon.seed_pair = ViewPair{0, 1};
  recon.registered_at_full_ba = recon.registered.size();
  return recon;
}

}  // namespace psfm::testing
