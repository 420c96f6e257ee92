#include "psfm/simulator/scene.h"

#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Geometry>

#include "psfm/util/error.h"

namespace psfm {
namespace {

nlohmann::json Vec(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }

Eigen::Vector3d VecFrom(const nlohmann::json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

}  // namespace

CameraPose LookAt(const Eigen::Vector3d& center, const Eigen::Vector3d& target) {
  const Eigen::Vector3d z = (target - center).normalized();
  Eigen::Vector3d x = Eigen::Vector3d::UnitZ().cross(z);
  if (x.norm() < 1e-9) x = Eigen::Vector3d::UnitX();
  x.normalize();
  const Eigen::Vector3d y = z.cross(x);
  CameraPose pose;
  pose.rotation.row(0) = x.transpose();
  pose.rotation.row(1) = y.transpose();
  pose.rotation.row(2) = z.transpose();
  pose.center = center;
  return pose;
}

Eigen::Matrix3d Scene::SymmetryRotation(int steps) const {
  const int fold = symmetry ? symmetry->fold : 1;
  const Eigen::Vector3d axis = symmetry ? symmetry->axis : Eigen::Vector3d::UnitZ();
  return Eigen::AngleAxisd(2.0 * M_PI * steps / fold, axis).toRotationMatrix();
}

double Scene::MinCameraDistance() const {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cameras.size(); ++i) {
    for (std::size_t j = i + 1; j < cameras.size(); ++j) {
      best = std::min(best, (cameras[i].center - cameras[j].center).norm());
    }
  }
  return best;
}

Scene GenerateTemple(const TempleOptions& o) {
  if (o.fold < 1 || o.num_cameras < 2 * o.fold || o.radius <= 0.0 ||
      o.points_per_sector < 0 || o.breaking_points < 0 || o.focal <= 0.0 ||
      o.width <= 0 || o.height <= 0) {
    throw InvalidArgument("GenerateTemple: invalid parameters");
  }
  std::mt19937_64 rng(o.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double spacing = 2.0 * M_PI / o.num_cameras;
  const double half_height = o.height_ratio * o.radius;

  Scene scene;
  scene.symmetry = SceneSymmetry{o.fold, Eigen::Vector3d::UnitZ()};
  const Intrinsics intrinsics{o.focal, o.focal, 0.5 * o.width, 0.5 * o.height,
                              o.width, o.height};
  for (int i = 0; i < o.num_cameras; ++i) {
    const double a = i * spacing + o.camera_jitter * spacing * normal(rng);
    const Eigen::Vector3d c(o.radius * std::cos(a), o.radius * std::sin(a),
                            o.camera_height_sigma_ratio * o.radius * normal(rng));
    scene.cameras.push_back(LookAt(c, Eigen::Vector3d::Zero()));
    scene.intrinsics.push_back(intrinsics);
  }

  struct Candidate {
    Eigen::Vector3d position;
    Eigen::Vector3d normal;
    double cos_visibility;
    int sector;
    int index;
  };
  std::vector<Candidate> candidates;
  const double sector_angle = 2.0 * M_PI / o.fold;
  std::vector<std::pair<double, double>> base(o.points_per_sector);
  for (auto& [a, z] : base) {
    a = sector_angle * unit(rng);
    z = half_height * (2.0 * unit(rng) - 1.0);
  }
  const double temple_radius = o.temple_radius_ratio * o.radius;
  for (int m = 0; m < o.fold; ++m) {
    for (int q = 0; q < o.points_per_sector; ++q) {
      const double a = base[q].first + m * sector_angle;
      const Eigen::Vector3d n(std::cos(a), std::sin(a), 0.0);
      candidates.push_back({temple_radius * n + Eigen::Vector3d(0, 0, base[q].second),
                            n, std::cos(o.temple_visibility_deg * M_PI / 180.0),
                            m, q});
    }
  }
  const double ring_radius = o.ring_radius_ratio * o.radius;
  for (int b = 0; b < o.breaking_points; ++b) {
    const double a = 2.0 * M_PI * unit(rng);
    const double z = half_height * (2.0 * unit(rng) - 1.0);
    const Eigen::Vector3d n(std::cos(a), std::sin(a), 0.0);
    candidates.push_back({ring_radius * n + Eigen::Vector3d(0, 0, z), n,
                          std::cos(o.ring_visibility_deg * M_PI / 180.0), -1, b});
  }

  // Visibility by facing angle and image bounds; keep points seen twice.
  std::vector<std::vector<int>> seen_by(candidates.size());
  for (int i = 0; i < o.num_cameras; ++i) {
    const CameraPose& cam = scene.cameras[i];
    for (std::size_t p = 0; p < candidates.size(); ++p) {
      const Candidate& c = candidates[p];
      const Eigen::Vector3d ray = (cam.center - c.position).normalized();
      if (ray.dot(c.normal) <= c.cos_visibility) continue;
      const auto px = ProjectPoint(cam, intrinsics, c.position);
      if (!px || !intrinsics.InImage(*px)) continue;
      seen_by[p].push_back(i);
    }
  }
  std::vector<int> new_index(candidates.size(), -1);
  for (std::size_t p = 0; p < candidates.size(); ++p) {
    if (seen_by[p].size() < 2) continue;
    new_index[p] = static_cast<int>(scene.points.size());
    scene.points.push_back(candidates[p].position);
  }
  scene.visibility.assign(o.num_cameras, {});
  for (std::size_t p = 0; p < candidates.size(); ++p) {
    if (new_index[p] < 0) continue;
    for (const int i : seen_by[p]) scene.visibility[i].push_back(new_index[p]);
  }
  for (int s = 0; s < 2; ++s) {
    scene.partner[s].assign(scene.points.size(), -1);
  }
  const int symmetric = o.fold * o.points_per_sector;
  for (int p = 0; p < symmetric; ++p) {
    if (new_index[p] < 0) continue;
    const int m = candidates[p].sector;
    const int q = candidates[p].index;
    const int ahead = ((m + 1) % o.fold) * o.points_per_sector + q;
    const int behind = ((m + o.fold - 1) % o.fold) * o.points_per_sector + q;
    if (o.fold > 1) {
      scene.partner[0][new_index[p]] = new_index[ahead];
      scene.partner[1][new_index[p]] = new_index[behind];
    }
  }
  if (o.fold == 1) scene.symmetry.reset();
  return scene;
}

nlohmann::json Scene::ToJson() const {
  nlohmann::json j;
  auto& cams = j["cameras"] = nlohmann::json::array();
  for (std::size_t i = 0; i < cameras.size(); ++i) {
    const Eigen::Quaterniond q(cameras[i].rotation);
    const Intrinsics& k = intrinsics[i];
    cams.push_back({{"id", i},
                    {"quaternion_wxyz", {q.w(), q.x(), q.y(), q.z()}},
                    {"center", Vec(cameras[i].center)},
                    {"fx", k.fx},
                    {"fy", k.fy},
                    {"cx", k.cx},
                    {"cy", k.cy},
                    {"width", k.width},
                    {"height", k.height},
                    {"visible_points", visibility[i]}});
  }
  auto& pts = j["points"] = nlohmann::json::array();
  for (const Eigen::Vector3d& p : points) pts.push_back(Vec(p));
  if (symmetry) {
    j["symmetry"] = {{"fold", symmetry->fold}, {"axis", Vec(symmetry->axis)}};
  } else {
    j["symmetry"] = nullptr;
  }
  j["partner_ahead"] = partner[0];
  j["partner_behind"] = partner[1];
  return j;
}

Scene Scene::FromJson(const nlohmann::json& j) {
  Scene scene;
  for (const auto& c : j.at("cameras")) {
    const auto& qj = c.at("quaternion_wxyz");
    const Eigen::Quaterniond q(qj.at(0).get<double>(), qj.at(1).get<double>(),
                               qj.at(2).get<double>(), qj.at(3).get<double>());
    scene.cameras.push_back({q.normalized().toRotationMatrix(), VecFrom(c.at("center"))});
    scene.intrinsics.push_back({c.at("fx").get<double>(), c.at("fy").get<double>(),
                                c.at("cx").get<double>(), c.at("cy").get<double>(),
                                c.at("width").get<int>(), c.at("height").get<int>()});
    scene.visibility.push_back(c.at("visible_points").get<std::vector<int>>());
  }
  for (const auto& p : j.at("points")) scene.points.push_back(VecFrom(p));
  if (!j.at("symmetry").is_null()) {
    scene.symmetry = SceneSymmetry{j.at("symmetry").at("fold").get<int>(),
                                   VecFrom(j.at("symmetry").at("axis"))};
  }
  scene.partner[0] = j.at("partner_ahead").get<std::vector<int>>();
  scene.partner[1] = j.at("partner_behind").get<std::vector<int>>();
  return scene;
}

}  // namespace psfm
