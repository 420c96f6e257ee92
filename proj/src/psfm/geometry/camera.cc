#include "psfm/geometry/camera.h"

#include <limits>

namespace psfm {

std::optional<Eigen::Vector2d> ProjectPoint(const CameraPose& pose,
                                            const Intrinsics& intrinsics,
                                            const Eigen::Vector3d& world) {
  const Eigen::Vector3d x = pose.ToCamera(world);
  if (x.z() <= std::numeric_limits<double>::epsilon()) {
    return std::nullopt;
  }
  return intrinsics.Project(x);
}

double ReprojectionError(const CameraPose& pose, const Intrinsics& intrinsics,
                         const Eigen::Vector3d& world,
                         const Eigen::Vector2d& observed) {
  const auto projected = ProjectPoint(pose, intrinsics, world);
  if (!projected) {
    return std::numeric_limits<double>::infinity();
  }
  return (*projected - observed).norm();
}

}  // namespace psfm
