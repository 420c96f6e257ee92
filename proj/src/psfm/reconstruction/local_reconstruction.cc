#include "psfm/reconstruction/local_reconstruction.h"

#include <cmath>

#include <Eigen/Geometry>

namespace psfm {

double LocalReconstruction::DirtyGrowth() const {
  if (registered_at_full_ba == 0) {
    return registered.empty() ? 0.0 : 1.0;
  }
  return static_cast<double>(registered.size()) /
             static_cast<double>(registered_at_full_ba) -
         1.0;
}

std::size_t LocalReconstruction::NumTriangulated() const {
  std::size_t count = 0;
  for (const Track& track : tracks) {
    count += track.IsTriangulated() ? 1 : 0;
  }
  return count;
}

double LocalReconstruction::ReprojectionRmse(const ViewGraph& graph) const {
  double sum = 0.0;
  std::size_t count = 0;
  for (const Track& track : tracks) {
    if (!track.IsTriangulated()) continue;
    for (const auto& [view, element] : track.observations) {
      const auto it = poses.find(view);
      if (it == poses.end()) continue;
      const double e = ReprojectionError(it->second, graph.ViewIntrinsics(view),
                                         *track.point, element.pixel);
      sum += e * e;
      ++count;
    }
  }
  return count == 0 ? 0.0 : std::sqrt(sum / static_cast<double>(count));
}

double LocalReconstruction::MaxReprojectionError(const ViewGraph& graph) const {
  double worst = 0.0;
  for (const Track& track : tracks) {
    if (!track.IsTriangulated()) continue;
    for (const auto& [view, element] : track.observations) {
      const auto it = poses.find(view);
      if (it == poses.end()) continue;
      worst = std::max(worst,
                       ReprojectionError(it->second, graph.ViewIntrinsics(view),
                                         *track.point, element.pixel));
    }
  }
  return worst;
}

void LocalReconstruction::AddPose(view_t view, const CameraPose& pose) {
  poses[view] = pose;
  registered.insert(view);
}

void LocalReconstruction::RemovePose(view_t view) {
  poses.erase(view);
  registered.erase(view);
}

nlohmann::json LocalReconstruction::ToJson(const ViewGraph& graph) const {
  nlohmann::json cameras = nlohmann::json::array();
  for (const auto& [view, pose] : poses) {
    const Eigen::Quaterniond q(pose.rotation);
    cameras.push_back({{"view_id", view},
                       {"quaternion_wxyz", {q.w(), q.x(), q.y(), q.z()}},
                       {"center", {pose.center.x(), pose.center.y(),
                                   pose.center.z()}}});
  }
  std::size_t observations = 0;
  for (const Track& track : tracks) {
    if (track.IsTriangulated()) observations += track.observations.size();
  }
  return {{"cluster_id", cluster},
          {"registered", registered.size()},
          {"cameras", cameras},
          {"tracks_total", tracks.size()},
          {"tracks_triangulated", NumTriangulated()},
          {"triangulated_observations", observations},
          {"reprojection_rmse_px", ReprojectionRmse(graph)},
          {"rho_l_deg", rho_l_deg}};
}

}  // namespace psfm
