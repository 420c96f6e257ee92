#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"
#include "psfm/geometry/camera.h"

namespace psfm {

struct NoiseModel {
  double rotation_deg = 0.3;
  double direction_deg = 0.5;
  double pixel = 1.0;
};

// Temple of k congruent sectors on a cylinder plus symmetry-breaking points
// on an outer ring. Structure sizes are fractions of the camera radius so
// that scaling the radius scales the whole scene.
struct TempleOptions {
  int num_cameras = 60;
  int fold = 6;
  double radius = 10.0;
  double temple_radius_ratio = 0.3;
  double ring_radius_ratio = 0.5;
  double height_ratio = 0.2;
  int points_per_sector = 250;
  int breaking_points = 500;
  // Largest angle between a point's outward normal and the ray to a camera
  // for the point to be visible.
  double temple_visibility_deg = 26.0;
  double ring_visibility_deg = 45.0;
  // Camera angle jitter as a fraction of the angular spacing.
  double camera_jitter = 0.15;
  double camera_height_sigma_ratio = 0.02;
  double focal = 800.0;
  int width = 1000;
  int height = 800;
  std::uint64_t seed = 0;
};

struct SceneSymmetry {
  int fold = 1;
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();
};

struct Scene {
  std::vector<CameraPose> cameras;
  std::vector<Intrinsics> intrinsics;
  std::vector<Eigen::Vector3d> points;
  // Sorted visible point ids per camera.
  std::vector<std::vector<int>> visibility;
  std::optional<SceneSymmetry> symmetry;
  // Index of the point one symmetry step ahead (partner[0][p]) or behind
  // (partner[1][p]); -1 for non-symmetric points.
  std::array<std::vector<int>, 2> partner;

  int NumCameras() const { return static_cast<int>(cameras.size()); }
  // Rotation about the symmetry axis by `steps` sectors.
  Eigen::Matrix3d SymmetryRotation(int steps) const;
  // Smallest distance between two camera centers.
  double MinCameraDistance() const;

  nlohmann::json ToJson() const;
  static Scene FromJson(const nlohmann::json& json);
};

// Throws InvalidArgument for fold < 1, num_cameras < 2 * fold or
// non-positive sizes.
Scene GenerateTemple(const TempleOptions& options);

CameraPose LookAt(const Eigen::Vector3d& center, const Eigen::Vector3d& target);

}  // namespace psfm
