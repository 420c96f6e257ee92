#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "psfm/geometry/camera.h"

namespace psfm {

// Two-view geometry of an edge (i, j): x_j = R_ij x_i + s * t_ij for camera
// frame coordinates, with the translation known only up to positive scale.
struct RelativeGeometry {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation_direction = Eigen::Vector3d::UnitX();
  std::uint32_t inlier_count = 0;

  // Geometry of the reversed edge (j, i).
  RelativeGeometry Inverse() const {
    return {rotation.transpose(),
            (-rotation.transpose() * translation_direction).normalized(),
            inlier_count};
  }

  bool IsValid(double tolerance = 1e-9) const;
};

// Exact relative geometry of two posed cameras.
RelativeGeometry RelativeGeometryFromPoses(const CameraPose& pose_i,
                                           const CameraPose& pose_j);

}  // namespace psfm
