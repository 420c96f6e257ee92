#include "psfm/kernels/ba_linearization.h"

#include <cstdint>
#include <limits>

#include "psfm/geometry/so3.h"

namespace psfm {
namespace {

constexpr double kMinDepth = 1e-8;

void LinearizeRange(std::span<const CameraPose> cameras,
                    std::span<const Eigen::Vector3d> points,
                    std::span<const BAObservation> observations,
                    std::int64_t k, BALinearization* out) {
  const BAObservation& obs = observations[k];
  out->valid[k] = LinearizeObservation(
      cameras[obs.camera], *obs.intrinsics, points[obs.point], obs.pixel,
      &out->residuals[k], &out->camera_jacobians[k], &out->point_jacobians[k]);
  if (!out->valid[k]) {
    out->residuals[k].setZero();
    out->camera_jacobians[k].setZero();
    out->point_jacobians[k].setZero();
  }
}

double SquaredResidual(std::span<const CameraPose> cameras,
                       std::span<const Eigen::Vector3d> points,
                       const BAObservation& obs) {
  const Eigen::Vector3d x = cameras[obs.camera].ToCamera(points[obs.point]);
  if (x.z() <= kMinDepth) {
    return std::numeric_limits<double>::infinity();
  }
  return (obs.intrinsics->Project(x) - obs.pixel).squaredNorm();
}

}  // namespace

bool LinearizeObservation(const CameraPose& pose, const Intrinsics& intrinsics,
                          const Eigen::Vector3d& point,
                          const Eigen::Vector2d& pixel,
                          Eigen::Vector2d* residual,
                          CameraJacobian* camera_jacobian,
                          PointJacobian* point_jacobian) {
  const Eigen::Vector3d x = pose.ToCamera(point);
  if (x.z() <= kMinDepth) {
    return false;
  }
  *residual = intrinsics.Project(x) - pixel;
  const double inv_z = 1.0 / x.z();
  Eigen::Matrix<double, 2, 3> d_proj;
  d_proj << intrinsics.fx * inv_z, 0.0, -intrinsics.fx * x.x() * inv_z * inv_z,
      0.0, intrinsics.fy * inv_z, -intrinsics.fy * x.y() * inv_z * inv_z;
  camera_jacobian->leftCols<3>() = -d_proj * CrossProductMatrix(x);
  camera_jacobian->rightCols<3>() = -d_proj * pose.rotation;
  *point_jacobian = d_proj * pose.rotation;
  return true;
}

void LinearizeObservations(std::span<const CameraPose> cameras,
                           std::span<const Eigen::Vector3d> points,
                           std::span<const BAObservation> observations,
                           Execution execution, BALinearization* out) {
  const auto n = static_cast<std::int64_t>(observations.size());
  out->residuals.resize(n);
  out->camera_jacobians.resize(n);
  out->point_jacobians.resize(n);
  out->valid.resize(n);
  if (execution == Execution::kParallel) {
#pragma omp parallel for schedule(static)
    for (std::int64_t k = 0; k < n; ++k) {
      LinearizeRange(cameras, points, observations, k, out);
    }
  } else {
    for (std::int64_t k = 0; k < n; ++k) {
      LinearizeRange(cameras, points, observations, k, out);
    }
  }
}

double ReprojectionCost(std::span<const CameraPose> cameras,
                        std::span<const Eigen::Vector3d> points,
                        std::span<const BAObservation> observations,
                        Execution execution) {
  const auto n = static_cast<std::int64_t>(observations.size());
  // Per-observation terms are summed serially so both paths round equally.
  std::vector<double> terms(n);
  if (execution == Execution::kParallel) {
#pragma omp parallel for schedule(static)
    for (std::int64_t k = 0; k < n; ++k) {
      terms[k] = SquaredResidual(cameras, points, observations[k]);
    }
  } else {
    for (std::int64_t k = 0; k < n; ++k) {
      terms[k] = SquaredResidual(cameras, points, observations[k]);
    }
  }
  double sum = 0.0;
  for (const double t : terms) {
    sum += t;
  }
  return sum;
}

}  // namespace psfm
