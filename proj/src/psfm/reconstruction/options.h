#pragma once

#include <cstdint>

#include "psfm/reconstruction/bundle_adjustment.h"

namespace psfm {

struct ReconstructionOptions {
  std::size_t mu_min = 5;
  std::size_t mu_max = 50;
  double eta_grow = 0.15;
  double rho_lmax_deg = 10.0;
  // Registration RANSAC and track inlier threshold, pixels.
  double pixel_threshold = 4.0;
  double min_triangulation_angle_deg = 1.0;
  double seed_min_median_angle_deg = 2.0;
  double ransac_confidence = 0.999;
  int ransac_max_iterations = 1000;
  double min_inlier_ratio = 0.5;
  std::size_t min_transfer_common_tracks = 3;
  BundleAdjustmentOptions bundle;
};

// Deterministic RANSAC seed for registering `view` into `cluster`.
inline std::uint64_t RansacSeed(std::uint64_t cluster, std::uint64_t view) {
  return (cluster << 32) ^ view ^ 0x9e3779b97f4a7c15ULL;
}

}  // namespace psfm
