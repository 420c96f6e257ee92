#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "psfm/geometry/camera.h"
#include "psfm/kernels/execution.h"

namespace psfm {

struct BAObservation {
  int camera = 0;
  int point = 0;
  Eigen::Vector2d pixel = Eigen::Vector2d::Zero();
  const Intrinsics* intrinsics = nullptr;
};

using CameraJacobian = Eigen::Matrix<double, 2, 6>;
using PointJacobian = Eigen::Matrix<double, 2, 3>;

// Residual projection(pose, point) - pixel and its Jacobians with respect to
// the camera update (d_theta, d_center), applied as R <- exp(d_theta) R and
// c <- c + d_center, and to the point. Returns false when the point is not
// in front of the camera.
bool LinearizeObservation(const CameraPose& pose, const Intrinsics& intrinsics,
                          const Eigen::Vector3d& point,
                          const Eigen::Vector2d& pixel,
                          Eigen::Vector2d* residual,
                          CameraJacobian* camera_jacobian,
                          PointJacobian* point_jacobian);

struct BALinearization {
  std::vector<Eigen::Vector2d> residuals;
  std::vector<CameraJacobian> camera_jacobians;
  std::vector<PointJacobian> point_jacobians;
  // 0 for observations behind their camera, which are left out.
  std::vector<char> valid;
};

void LinearizeObservations(std::span<const CameraPose> cameras,
                           std::span<const Eigen::Vector3d> points,
                           std::span<const BAObservation> observations,
                           Execution execution, BALinearization* out);

// Sum of squared residuals; infinity if any point is behind its camera.
double ReprojectionCost(std::span<const CameraPose> cameras,
                        std::span<const Eigen::Vector3d> points,
                        std::span<const BAObservation> observations,
                        Execution execution);

}  // namespace psfm
