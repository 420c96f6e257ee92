#include "psfm/geometry/p3p.h"

#include <cmath>

#include <Eigen/LU>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace psfm {

std::vector<double> SolveQuartic(double c4, double c3, double c2, double c1,
                                 double c0) {
  std::vector<double> roots;
  const double scale =
      std::max({std::abs(c4), std::abs(c3), std::abs(c2), std::abs(c1),
                std::abs(c0)});
  if (scale == 0.0 || std::abs(c4) < 1e-14 * scale) {
    return roots;
  }
  Eigen::Matrix4d companion = Eigen::Matrix4d::Zero();
  companion(0, 0) = -c3 / c4;
  companion(0, 1) = -c2 / c4;
  companion(0, 2) = -c1 / c4;
  companion(0, 3) = -c0 / c4;
  companion(1, 0) = 1.0;
  companion(2, 1) = 1.0;
  companion(3, 2) = 1.0;
  const Eigen::EigenSolver<Eigen::Matrix4d> solver(companion, false);
  for (int i = 0; i < 4; ++i) {
    const std::complex<double> r = solver.eigenvalues()(i);
    if (std::abs(r.imag()) > 1e-6 * std::max(1.0, std::abs(r.real()))) {
      continue;
    }
    // Newton polish against the original polynomial.
    double x = r.real();
    for (int it = 0; it < 5; ++it) {
      const double f = (((c4 * x + c3) * x + c2) * x + c1) * x + c0;
      const double df = ((4 * c4 * x + 3 * c3) * x + 2 * c2) * x + c1;
      if (std::abs(df) < 1e-300) break;
      x -= f / df;
    }
    roots.push_back(x);
  }
  return roots;
}

bool EstimateRigidTransform(const std::array<Eigen::Vector3d, 3>& src,
                            const std::array<Eigen::Vector3d, 3>& dst,
                            Eigen::Matrix3d* rotation,
                            Eigen::Vector3d* translation) {
  const Eigen::Vector3d src_mean = (src[0] + src[1] + src[2]) / 3.0;
  const Eigen::Vector3d dst_mean = (dst[0] + dst[1] + dst[2]) / 3.0;
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (int i = 0; i < 3; ++i) {
    cov += (dst[i] - dst_mean) * (src[i] - src_mean).transpose();
  }
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.singularValues()(1) < 1e-12 * svd.singularValues()(0)) {
    return false;
  }
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) {
    d(2, 2) = -1.0;
  }
  *rotation = svd.matrixU() * d * svd.matrixV().transpose();
  *translation = dst_mean - *rotation * src_mean;
  return true;
}

std::vector<CameraPose> SolveP3P(const std::array<Eigen::Vector3d, 3>& bearings,
                                 const std::array<Eigen::Vector3d, 3>& points) {
  std::vector<CameraPose> poses;
  const double a2 = (points[1] - points[2]).squaredNorm();
  const double b2 = (points[0] - points[2]).squaredNorm();
  const double c2 = (points[0] - points[1]).squaredNorm();
  if (a2 < 1e-18 || b2 < 1e-18 || c2 < 1e-18) {
    return poses;
  }
  const Eigen::Vector3d j0 = bearings[0].normalized();
  const Eigen::Vector3d j1 = bearings[1].normalized();
  const Eigen::Vector3d j2 = bearings[2].normalized();
  const double cos_alpha = j1.dot(j2);
  const double cos_beta = j0.dot(j2);
  const double cos_gamma = j0.dot(j1);

  const double p = (a2 - c2) / b2;
  const double q = (a2 + c2) / b2;
  const double c4 = (p - 1) * (p - 1) - 4 * c2 / b2 * cos_alpha * cos_alpha;
  const double c3 =
      4 * (p * (1 - p) * cos_beta - (1 - q) * cos_alpha * cos_gamma +
           2 * c2 / b2 * cos_alpha * cos_alpha * cos_beta);
  const double c2c =
      2 * (p * p - 1 + 2 * p * p * cos_beta * cos_beta +
           2 * (b2 - c2) / b2 * cos_alpha * cos_alpha -
           4 * q * cos_alpha * cos_beta * cos_gamma +
           2 * (b2 - a2) / b2 * cos_gamma * cos_gamma);
  const double c1 =
      4 * (-p * (1 + p) * cos_beta +
           2 * a2 / b2 * cos_gamma * cos_gamma * cos_beta -
           (1 - q) * cos_alpha * cos_gamma);
  const double c0 = (1 + p) * (1 + p) - 4 * a2 / b2 * cos_gamma * cos_gamma;

  for (const double v : SolveQuartic(c4, c3, c2c, c1, c0)) {
    if (v <= 0.0) continue;
    const double denom = 2 * (cos_gamma - v * cos_alpha);
    if (std::abs(denom) < 1e-12) continue;
    const double u =
        ((-1 + p) * v * v - 2 * p * cos_beta * v + 1 + p) / denom;
    if (u <= 0.0) continue;
    const double s1_sq = c2 / (1 + u * u - 2 * u * cos_gamma);
    if (!(s1_sq > 0.0)) continue;
    const double s1 = std::sqrt(s1_sq);
    const std::array<Eigen::Vector3d, 3> camera_points = {s1 * j0, u * s1 * j1,
                                                          v * s1 * j2};
    Eigen::Matrix3d rotation;
    Eigen::Vector3d translation;
    if (!EstimateRigidTransform(points, camera_points, &rotation,
                                &translation)) {
      continue;
    }
    poses.push_back(CameraPose::FromRotationTranslation(rotation, translation));
  }
  return poses;
}

}  // namespace psfm
