#pragma once

#include <array>
#include <vector>

#include <Eigen/Core>

#include "psfm/geometry/camera.h"

namespace psfm {

// Minimal absolute pose from three bearing / world point pairs (Grunert's
// formulation). Returns up to four candidate poses; empty for degenerate
// input.
std::vector<CameraPose> SolveP3P(const std::array<Eigen::Vector3d, 3>& bearings,
                                 const std::array<Eigen::Vector3d, 3>& points);

// Real roots of c4 x^4 + c3 x^3 + c2 x^2 + c1 x + c0.
std::vector<double> SolveQuartic(double c4, double c3, double c2, double c1,
                                 double c0);

// Rigid transform (R, t) minimizing sum ||R src + t - dst||^2.
bool EstimateRigidTransform(const std::array<Eigen::Vector3d, 3>& src,
                            const std::array<Eigen::Vector3d, 3>& dst,
                            Eigen::Matrix3d* rotation,
                            Eigen::Vector3d* translation);

}  // namespace psfm
