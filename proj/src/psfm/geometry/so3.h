#pragma once

#include <Eigen/Core>

namespace psfm {

Eigen::Matrix3d CrossProductMatrix(const Eigen::Vector3d& v);

// Rodrigues formula. Exact for a zero vector.
Eigen::Matrix3d SO3Exp(const Eigen::Vector3d& omega);

// Principal logarithm with norm in [0, pi]. Throws InvalidArgument if the
// input deviates from SO(3) by more than 1e-6.
Eigen::Vector3d SO3Log(const Eigen::Matrix3d& rotation);

// Angle of the rotation in radians, computed robustly from the log map.
double RotationAngle(const Eigen::Matrix3d& rotation);
double RotationAngleDeg(const Eigen::Matrix3d& rotation);

// Angle between two rotations, in degrees.
double RotationDistanceDeg(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b);

bool IsRotationMatrix(const Eigen::Matrix3d& matrix, double tolerance);

// Closest rotation in the Frobenius sense.
Eigen::Matrix3d ProjectToRotation(const Eigen::Matrix3d& matrix);

inline double DegToRad(double deg) { return deg * 0.017453292519943295; }
inline double RadToDeg(double rad) { return rad * 57.29577951308232; }

}  // namespace psfm
