#pragma once

#include <optional>

#include <Eigen/Core>

namespace psfm {

// Pinhole intrinsics in pixels. No distortion.
struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  Eigen::Vector2d Project(const Eigen::Vector3d& camera_point) const {
    return {fx * camera_point.x() / camera_point.z() + cx,
            fy * camera_point.y() / camera_point.z() + cy};
  }

  // Unit-norm viewing ray in the camera frame.
  Eigen::Vector3d Bearing(const Eigen::Vector2d& pixel) const {
    return Eigen::Vector3d((pixel.x() - cx) / fx, (pixel.y() - cy) / fy, 1.0)
        .normalized();
  }

  bool InImage(const Eigen::Vector2d& pixel) const {
    return pixel.x() >= 0.0 && pixel.y() >= 0.0 && pixel.x() < width &&
           pixel.y() < height;
  }

  bool operator==(const Intrinsics&) const = default;
};

// World-to-camera rotation and camera center: x_cam = R (X - c).
struct CameraPose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d center = Eigen::Vector3d::Zero();

  Eigen::Vector3d ToCamera(const Eigen::Vector3d& world) const {
    return rotation * (world - center);
  }
  Eigen::Vector3d Translation() const { return -rotation * center; }

  static CameraPose FromRotationTranslation(const Eigen::Matrix3d& rotation,
                                            const Eigen::Vector3d& translation) {
    return {rotation, -rotation.transpose() * translation};
  }
};

// Pixel projection; nullopt when the point is not in front of the camera.
std::optional<Eigen::Vector2d> ProjectPoint(const CameraPose& pose,
                                            const Intrinsics& intrinsics,
                                            const Eigen::Vector3d& world);

double ReprojectionError(const CameraPose& pose, const Intrinsics& intrinsics,
                         const Eigen::Vector3d& world,
                         const Eigen::Vector2d& observed);

}  // namespace psfm
