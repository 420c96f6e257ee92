#include "psfm/geometry/relative_geometry.h"

#include <cmath>

#include "psfm/geometry/so3.h"

namespace psfm {

bool RelativeGeometry::IsValid(double tolerance) const {
  return IsRotationMatrix(rotation, tolerance) &&
         std::abs(translation_direction.norm() - 1.0) <= tolerance;
}

RelativeGeometry RelativeGeometryFromPoses(const CameraPose& pose_i,
                                           const CameraPose& pose_j) {
  RelativeGeometry geometry;
  geometry.rotation = pose_j.rotation * pose_i.rotation.transpose();
  geometry.translation_direction =
      (pose_j.rotation * (pose_i.center - pose_j.center)).normalized();
  return geometry;
}

}  // namespace psfm
