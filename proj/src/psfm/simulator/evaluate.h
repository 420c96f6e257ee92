#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"
#include "psfm/simulator/scene.h"

namespace psfm {

struct Metrics {
  std::size_t clusters_raw = 0;
  // Connected components of the cluster graph with a reconstruction.
  std::size_t clusters_effective = 0;
  std::size_t registered_cameras = 0;
  std::size_t outlier_cameras = 0;
  // Cameras in components with fewer than three cameras: neither inlier nor
  // outlier.
  std::size_t excluded_cameras = 0;
  std::size_t recoveries = 0;
  double rmse_to_truth = 0.0;

  nlohmann::json ToJson() const;
  static Metrics FromJson(const nlohmann::json& json);
  bool operator==(const Metrics&) const = default;
};

// A registered camera of the recovered model, in the frame of its component.
struct EvaluatedCamera {
  int camera = -1;
  int component = 0;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
};

// Aligns every component to the ground truth with a closed-form similarity
// on camera centers and counts cameras whose aligned position error exceeds
// half the smallest ground-truth camera distance. Fills registered,
// outlier and excluded counts and the RMSE over aligned cameras; cluster
// counts and recoveries are left for the caller.
Metrics Evaluate(std::span<const EvaluatedCamera> model, const Scene& scene);

}  // namespace psfm
