#include "psfm/geometry/sim3.h"

#include <cmath>
#include <string>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "psfm/geometry/so3.h"
#include "psfm/util/error.h"

namespace psfm {

Sim3 Sim3::operator*(const Sim3& other) const {
  Sim3 out;
  out.scale = scale * other.scale;
  out.rotation = rotation * other.rotation;
  out.translation = scale * (rotation * other.translation) + translation;
  return out;
}

Sim3 Sim3::Inverse() const {
  Sim3 out;
  out.scale = 1.0 / scale;
  out.rotation = rotation.transpose();
  out.translation = -out.scale * (out.rotation * translation);
  return out;
}

Eigen::Matrix<double, 7, 1> Sim3::Log() const {
  Eigen::Matrix<double, 7, 1> xi;
  xi.head<3>() = SO3Log(rotation);
  xi.segment<3>(3) = translation;
  xi(6) = std::log(scale);
  return xi;
}

Sim3 Sim3::Exp(const Eigen::Matrix<double, 7, 1>& xi) {
  Sim3 out;
  out.rotation = SO3Exp(xi.head<3>());
  out.translation = xi.segment<3>(3);
  out.scale = std::exp(xi(6));
  return out;
}

bool Sim3::IsValid(double tolerance) const {
  return scale > 0.0 && std::isfinite(scale) &&
         IsRotationMatrix(rotation, tolerance) && translation.allFinite();
}

Sim3 EstimateSim3ClosedForm(std::span<const Eigen::Vector3d> src,
                            std::span<const Eigen::Vector3d> dst) {
  if (src.size() != dst.size()) {
    throw InvalidArgument("EstimateSim3ClosedForm: size mismatch");
  }
  const std::size_t n = src.size();
  if (n < 3) {
    throw DegenerateInput("EstimateSim3ClosedForm: need at least 3 pairs, got " +
                          std::to_string(n));
  }

  Eigen::Vector3d src_mean = Eigen::Vector3d::Zero();
  Eigen::Vector3d dst_mean = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    src_mean += src[i];
    dst_mean += dst[i];
  }
  src_mean /= static_cast<double>(n);
  dst_mean /= static_cast<double>(n);

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  double src_var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d xs = src[i] - src_mean;
    const Eigen::Vector3d xd = dst[i] - dst_mean;
    cov += xd * xs.transpose();
    src_var += xs.squaredNorm();
  }
  cov /= static_cast<double>(n);
  src_var /= static_cast<double>(n);

  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d sv = svd.singularValues();
  if (!(sv(0) > 0.0) || sv(1) < 1e-12 * sv(0) || src_var <= 0.0) {
    throw DegenerateInput(
        "EstimateSim3ClosedForm: collinear or coincident configuration");
  }

  Eigen::Vector3d s = Eigen::Vector3d::Ones();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) {
    s(2) = -1.0;
  }

  Sim3 out;
  out.rotation =
      svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
  out.scale = sv.dot(s) / src_var;
  out.translation = dst_mean - out.scale * (out.rotation * src_mean);
  if (!(out.scale > 0.0)) {
    throw DegenerateInput("EstimateSim3ClosedForm: non-positive scale");
  }
  return out;
}

}  // namespace psfm
