#include "psfm/geometry/triangulation.h"

#include <algorithm>
#include <cmath>

#include <Eigen/SVD>

#include "psfm/geometry/so3.h"

namespace psfm {

std::optional<Eigen::Vector3d> TriangulateLinear(
    std::span<const TriangulationView> views) {
  if (views.size() < 2) {
    return std::nullopt;
  }
  Eigen::MatrixXd a(2 * views.size(), 4);
  for (std::size_t k = 0; k < views.size(); ++k) {
    const TriangulationView& v = views[k];
    Eigen::Matrix<double, 3, 4> proj;
    proj.leftCols<3>() = v.pose->rotation;
    proj.col(3) = v.pose->Translation();
    // Normalized image coordinates keep the system well conditioned.
    const double x = (v.pixel.x() - v.intrinsics->cx) / v.intrinsics->fx;
    const double y = (v.pixel.y() - v.intrinsics->cy) / v.intrinsics->fy;
    a.row(2 * k) = x * proj.row(2) - proj.row(0);
    a.row(2 * k + 1) = y * proj.row(2) - proj.row(1);
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::Vector4d h = svd.matrixV().col(3);
  if (std::abs(h(3)) < 1e-14 || !h.allFinite()) {
    return std::nullopt;
  }
  return h.head<3>() / h(3);
}

double MaxTriangulationAngleDeg(std::span<const Eigen::Vector3d> centers,
                                const Eigen::Vector3d& point) {
  double best = 0.0;
  for (std::size_t a = 0; a < centers.size(); ++a) {
    const Eigen::Vector3d ra = (point - centers[a]).normalized();
    for (std::size_t b = a + 1; b < centers.size(); ++b) {
      const Eigen::Vector3d rb = (point - centers[b]).normalized();
      const double c = std::clamp(ra.dot(rb), -1.0, 1.0);
      best = std::max(best, RadToDeg(std::acos(c)));
    }
  }
  return best;
}

}  // namespace psfm
