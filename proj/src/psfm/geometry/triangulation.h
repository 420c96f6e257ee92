#pragma once

#include <optional>
#include <span>

#include <Eigen/Core>

#include "psfm/geometry/camera.h"

namespace psfm {

struct TriangulationView {
  const CameraPose* pose = nullptr;
  const Intrinsics* intrinsics = nullptr;
  Eigen::Vector2d pixel;
};

// Homogeneous least-squares (DLT) triangulation from two or more views.
std::optional<Eigen::Vector3d> TriangulateLinear(
    std::span<const TriangulationView> views);

// Largest angle in degrees between any two viewing rays of the point.
double MaxTriangulationAngleDeg(std::span<const Eigen::Vector3d> centers,
                                const Eigen::Vector3d& point);

}  // namespace psfm
