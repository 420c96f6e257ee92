#include "psfm/geometry/so3.h"

#include <algorithm>
#include <cmath>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "psfm/util/error.h"

namespace psfm {

Eigen::Matrix3d CrossProductMatrix(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

Eigen::Matrix3d SO3Exp(const Eigen::Vector3d& omega) {
  const double theta_sq = omega.squaredNorm();
  const Eigen::Matrix3d k = CrossProductMatrix(omega);
  if (theta_sq < 1e-16) {
    // Second-order series; exact identity for omega == 0.
    return Eigen::Matrix3d::Identity() + k + 0.5 * k * k;
  }
  const double theta = std::sqrt(theta_sq);
  const double a = std::sin(theta) / theta;
  const double b = (1.0 - std::cos(theta)) / theta_sq;
  return Eigen::Matrix3d::Identity() + a * k + b * k * k;
}

Eigen::Vector3d SO3Log(const Eigen::Matrix3d& rotation) {
  if (!IsRotationMatrix(rotation, 1e-6)) {
    throw InvalidArgument("SO3Log: input is not a rotation matrix");
  }
  const Eigen::Matrix3d& r = rotation;
  const double cos_theta =
      std::clamp((r.trace() - 1.0) * 0.5, -1.0, 1.0);
  const Eigen::Vector3d vee(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0),
                            r(1, 0) - r(0, 1));
  const double sin_theta = 0.5 * vee.norm();
  const double theta = std::atan2(sin_theta, cos_theta);

  if (theta < 1e-5) {
    // First-order series of theta / (2 sin theta).
    return 0.5 * (1.0 + theta * theta / 6.0) * vee;
  }
  if (theta < M_PI - 1e-3) {
    return theta / (2.0 * std::sin(theta)) * vee;
  }

  // Near pi the antisymmetric part vanishes. The symmetric part is
  // cos(theta) I + (1 - cos(theta)) n n^T; extract n n^T exactly and read the
  // axis from the column with the largest diagonal entry.
  const Eigen::Matrix3d sym = 0.5 * (r + r.transpose());
  const Eigen::Matrix3d nnt =
      (sym - cos_theta * Eigen::Matrix3d::Identity()) / (1.0 - cos_theta);
  int k = 0;
  nnt.diagonal().maxCoeff(&k);
  Eigen::Vector3d axis = nnt.col(k) / std::sqrt(std::max(nnt(k, k), 1e-300));
  axis.normalize();
  // Fix the sign using the (small) antisymmetric part when available.
  if (axis.dot(vee) < 0.0) {
    axis = -axis;
  }
  return theta * axis;
}

double RotationAngle(const Eigen::Matrix3d& rotation) {
  return SO3Log(rotation).norm();
}

double RotationAngleDeg(const Eigen::Matrix3d& rotation) {
  return RadToDeg(RotationAngle(rotation));
}

double RotationDistanceDeg(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
  return RotationAngleDeg(a * b.transpose());
}

bool IsRotationMatrix(const Eigen::Matrix3d& matrix, double tolerance) {
  if (!matrix.allFinite()) {
    return false;
  }
  const double orth =
      (matrix.transpose() * matrix - Eigen::Matrix3d::Identity())
          .cwiseAbs()
          .maxCoeff();
  return orth <= tolerance && std::abs(matrix.determinant() - 1.0) <= tolerance;
}

Eigen::Matrix3d ProjectToRotation(const Eigen::Matrix3d& matrix) {
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      matrix, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) {
    d(2, 2) = -1.0;
  }
  return svd.matrixU() * d * svd.matrixV().transpose();
}

}  // namespace psfm
