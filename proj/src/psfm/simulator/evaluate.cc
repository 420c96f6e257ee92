#include "psfm/simulator/evaluate.h"

#include <cmath>
#include <map>

#include "psfm/geometry/sim3.h"
#include "psfm/util/error.h"

namespace psfm {

nlohmann::json Metrics::ToJson() const {
  return {{"clusters_raw", clusters_raw},
          {"clusters_effective", clusters_effective},
          {"registered_cameras", registered_cameras},
          {"outlier_cameras", outlier_cameras},
          {"excluded_cameras", excluded_cameras},
          {"recoveries", recoveries},
          {"rmse_to_truth", rmse_to_truth}};
}

Metrics Metrics::FromJson(const nlohmann::json& json) {
  Metrics m;
  m.clusters_raw = json.at("clusters_raw").get<std::size_t>();
  m.clusters_effective = json.at("clusters_effective").get<std::size_t>();
  m.registered_cameras = json.at("registered_cameras").get<std::size_t>();
  m.outlier_cameras = json.at("outlier_cameras").get<std::size_t>();
  m.excluded_cameras = json.at("excluded_cameras").get<std::size_t>();
  m.recoveries = json.at("recoveries").get<std::size_t>();
  m.rmse_to_truth = json.at("rmse_to_truth").get<double>();
  return m;
}

Metrics Evaluate(std::span<const EvaluatedCamera> model, const Scene& scene) {
  Metrics metrics;
  metrics.registered_cameras = model.size();
  const double radius = 0.5 * scene.MinCameraDistance();

  std::map<int, std::vector<const EvaluatedCamera*>> components;
  for (const EvaluatedCamera& c : model) {
    if (c.camera < 0 || c.camera >= scene.NumCameras()) {
      throw InvalidArgument("camera index out of range");
    }
    components[c.component].push_back(&c);
  }
  double sum_sq = 0.0;
  std::size_t aligned = 0;
  for (const auto& [id, cameras] : components) {
    std::vector<Eigen::Vector3d> src, dst;
    for (const EvaluatedCamera* c : cameras) {
      src.push_back(c->center);
      dst.push_back(scene.cameras[c->camera].center);
    }
    Sim3 align;
    try {
      if (cameras.size() < 3) throw DegenerateInput("too few cameras");
      align = EstimateSim3ClosedForm(src, dst);
    } catch (const DegenerateInput&) {
      metrics.excluded_cameras += cameras.size();
      continue;
    }
    for (std::size_t k = 0; k < src.size(); ++k) {
      const double error = (align * src[k] - dst[k]).norm();
      sum_sq += error * error;
      ++aligned;
      if (error > radius) ++metrics.outlier_cameras;
    }
  }
  metrics.rmse_to_truth = aligned > 0 ? std::sqrt(sum_sq / aligned) : 0.0;
  return metrics;
}

}  // namespace psfm
