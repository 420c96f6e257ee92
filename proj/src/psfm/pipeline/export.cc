#include "psfm/pipeline/export.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <Eigen/Geometry>

namespace psfm {
namespace {

void AppendFloat(float value, std::string* out) {
  std::uint32_t bits;
  std::memcpy(&bits, &value, sizeof(bits));
  if constexpr (std::endian::native == std::endian::big) {
    bits = ((bits & 0xff) << 24) | ((bits & 0xff00) << 8) |
           ((bits >> 8) & 0xff00) | (bits >> 24);
  }
  for (int k = 0; k < 4; ++k) out->push_back(static_cast<char>((bits >> (8 * k)) & 0xff));
}

nlohmann::json Vec(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }

}  // namespace

std::string EncodePly(const std::vector<PlyVertex>& vertices) {
  std::ostringstream header;
  header << "ply\n"
         << "format binary_little_endian 1.0\n"
         << "element vertex " << vertices.size() << "\n"
         << "property float x\n"
         << "property float y\n"
         << "property float z\n"
         << "property uchar red\n"
         << "property uchar green\n"
         << "property uchar blue\n"
         << "end_header\n";
  std::string out = header.str();
  for (const PlyVertex& v : vertices) {
    for (int k = 0; k < 3; ++k) AppendFloat(static_cast<float>(v.position[k]), &out);
    out.push_back(static_cast<char>(v.red));
    out.push_back(static_cast<char>(v.green));
    out.push_back(static_cast<char>(v.blue));
  }
  return out;
}

std::vector<PlyVertex> ComponentVertices(const Pipeline& pipeline,
                                         const std::vector<cluster_t>& component) {
  std::vector<PlyVertex> vertices;
  const ClusterGraph& graph = pipeline.cluster_graph();
  for (const cluster_t c : component) {
    const LocalReconstruction& recon = pipeline.reconstructions().at(c);
    for (const Track& track : recon.tracks) {
      if (!track.IsTriangulated()) continue;
      vertices.push_back({ToWorld(graph, c, *track.point), 160, 160, 160});
    }
    for (const auto& [view, pose] : recon.poses) {
      vertices.push_back({ToWorld(graph, c, pose.center), 255, 0, 0});
    }
  }
  return vertices;
}

nlohmann::json ModelToJson(const Pipeline& pipeline) {
  nlohmann::json j;
  j["cluster_graph"] = pipeline.cluster_graph().ToJson();
  j["effective_clusters"] = pipeline.cluster_graph().Components();
  auto& recons = j["reconstructions"] = nlohmann::json::array();
  for (const auto& [id, recon] : pipeline.reconstructions()) {
    if (recon.Empty()) continue;
    recons.push_back(recon.ToJson(pipeline.graph()));
  }
  auto& cameras = j["cameras"] = nlohmann::json::array();
  const auto components = pipeline.cluster_graph().Components();
  for (std::size_t k = 0; k < components.size(); ++k) {
    for (const cluster_t c : components[k]) {
      for (const auto& [view, pose] : pipeline.reconstructions().at(c).poses) {
        cameras.push_back({{"view", view},
                           {"camera", pipeline.cameras()[view]},
                           {"cluster_id", c},
                           {"component", k},
                           {"center", Vec(ToWorld(pipeline.cluster_graph(), c, pose.center))}});
      }
    }
  }
  return j;
}

std::vector<EvaluatedCamera> CamerasFromModelJson(const nlohmann::json& model) {
  std::vector<EvaluatedCamera> cameras;
  for (const auto& c : model.at("cameras")) {
    const auto& p = c.at("center");
    cameras.push_back({c.at("camera").get<int>(), c.at("component").get<int>(),
                       Eigen::Vector3d(p.at(0).get<double>(), p.at(1).get<double>(),
                                       p.at(2).get<double>())});
  }
  return cameras;
}

void WriteFile(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

void WriteFinalModel(const Pipeline& pipeline, const std::filesystem::path& dir) {
  const std::filesystem::path final_dir = dir / "final";
  std::filesystem::create_directories(final_dir);
  for (const auto& component : pipeline.cluster_graph().Components()) {
    char name[32];
    std::snprintf(name, sizeof(name), "cluster_%04u.ply", component.front());
    WriteFile(final_dir / name, EncodePly(ComponentVertices(pipeline, component)));
  }
  WriteFile(final_dir / "model.json", ModelToJson(pipeline).dump(1) + "\n");
}

std::string MetricsCsvHeader() {
  return "t,clusters_raw,clusters_effective,registered,outliers,recoveries\n";
}

std::string MetricsCsvRow(std::uint64_t timestep, const Metrics& m) {
  std::ostringstream row;
  row << timestep << ',' << m.clusters_raw << ',' << m.clusters_effective << ','
      << m.registered_cameras << ',' << m.outlier_cameras << ',' << m.recoveries
      << '\n';
  return row.str();
}

}  // namespace psfm
