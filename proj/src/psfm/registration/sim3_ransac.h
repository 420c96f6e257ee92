#pragma once

#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "psfm/geometry/sim3.h"

namespace psfm {

struct Sim3RansacOptions {
  // Absolute distance in destination units.
  double inlier_threshold = 0.01;
  double confidence = 0.999;
  int max_iterations = 1000;
};

struct Sim3RansacResult {
  bool success = false;
  Sim3 transform;
  std::vector<char> inlier_mask;
  std::size_t num_inliers = 0;
};

// Three-pair hypotheses scored by ||T * src - dst|| < threshold; the best
// hypothesis is refit on its inliers with the closed form. Throws
// InvalidArgument for fewer than three pairs. Fails when no model reaches
// three inliers.
Sim3RansacResult RansacSim3(std::span<const Eigen::Vector3d> src,
                            std::span<const Eigen::Vector3d> dst,
                            const Sim3RansacOptions& options,
                            std::mt19937_64* rng);

// Bounding-box diagonal of a point set; 0 when empty.
double BoundingBoxDiagonal(std::span<const Eigen::Vector3d> points);

}  // namespace psfm
