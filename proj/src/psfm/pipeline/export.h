#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"
#include "psfm/pipeline/pipeline.h"

namespace psfm {

struct PlyVertex {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  std::uint8_t red = 0;
  std::uint8_t green = 0;
  std::uint8_t blue = 0;
};

// Binary little-endian PLY with one vertex element (float x y z, uchar
// red green blue).
std::string EncodePly(const std::vector<PlyVertex>& vertices);

// Points in gray and camera centers in red of one effective cluster, in the
// common frame of its component.
std::vector<PlyVertex> ComponentVertices(const Pipeline& pipeline,
                                         const std::vector<cluster_t>& component);

// Cluster graph, per-cluster poses and points, and the registered cameras
// with their component and world position.
nlohmann::json ModelToJson(const Pipeline& pipeline);

// Registered cameras listed in a model document, for offline evaluation.
std::vector<EvaluatedCamera> CamerasFromModelJson(const nlohmann::json& model);

// Writes final/cluster_<id>.ply per effective cluster (id of its lowest
// cluster) and final/model.json below `dir`.
void WriteFinalModel(const Pipeline& pipeline, const std::filesystem::path& dir);

std::string MetricsCsvHeader();
std::string MetricsCsvRow(std::uint64_t timestep, const Metrics& metrics);

// Writes text to a file, throwing std::runtime_error naming the path on
// failure.
void WriteFile(const std::filesystem::path& path, const std::string& content);

}  // namespace psfm
