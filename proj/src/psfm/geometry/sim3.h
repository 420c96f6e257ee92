#pragma once

#include <span>

#include <Eigen/Core>

namespace psfm {

// 7-DoF similarity transform x -> scale * rotation * x + translation.
struct Sim3 {
  double scale = 1.0;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static Sim3 Identity() { return Sim3(); }

  Eigen::Vector3d operator*(const Eigen::Vector3d& point) const {
    return scale * (rotation * point) + translation;
  }

  // (a * b) * x == a * (b * x).
  Sim3 operator*(const Sim3& other) const;

  Sim3 Inverse() const;

  // Chart used for pose-graph residuals: (log R, t, log s). It is zero iff
  // the transform is the identity.
  Eigen::Matrix<double, 7, 1> Log() const;
  static Sim3 Exp(const Eigen::Matrix<double, 7, 1>& xi);

  bool IsValid(double tolerance = 1e-9) const;
};

// Least-squares similarity minimizing sum ||T * src_i - dst_i||^2 (Umeyama).
// Throws DegenerateInput for fewer than three pairs or when the second
// singular value of the cross-covariance drops below 1e-12 times the first.
Sim3 EstimateSim3ClosedForm(std::span<const Eigen::Vector3d> src,
                            std::span<const Eigen::Vector3d> dst);

}  // namespace psfm
