#include "psfm/viewgraph/view_graph.h"

#include <set>
#include <string>

#include <Eigen/Geometry>

#include "psfm/util/error.h"

namespace psfm {

ViewGraph::ViewGraph(std::uint32_t min_correspondences)
    : min_correspondences_(min_correspondences) {}

view_t ViewGraph::AddView(const Intrinsics& intrinsics,
                          std::vector<Eigen::Vector2d> keypoints) {
  const auto id = static_cast<view_t>(intrinsics_.size());
  intrinsics_.push_back(intrinsics);
  keypoints_.push_back(std::move(keypoints));
  adjacency_.emplace_back();
  row_sums_.push_back(0);
  return id;
}

void ViewGraph::CheckView(view_t view, const char* what) const {
  if (!HasView(view)) {
    throw InvalidArgument(std::string(what) + ": unknown view id " +
                          std::to_string(view));
  }
}

EdgeAdmission ViewGraph::AddEdge(view_t i, view_t j,
                                 const RelativeGeometry& geometry,
                                 std::vector<FeatureMatch> matches) {
  CheckView(i, "AddEdge");
  CheckView(j, "AddEdge");
  if (i == j) {
    throw InvalidArgument("AddEdge: self edge on view " + std::to_string(i));
  }
  for (const FeatureMatch& m : matches) {
    if (m.point2D_idx1 >= keypoints_[i].size() ||
        m.point2D_idx2 >= keypoints_[j].size()) {
      throw InvalidArgument("AddEdge: match index out of range on edge (" +
                            std::to_string(i) + ", " + std::to_string(j) +
                            ")");
    }
  }
  if (geometry.inlier_count < min_correspondences_) {
    return EdgeAdmission::kRejectedBelowThreshold;
  }

  ViewGraphEdge edge;
  if (i < j) {
    edge.geometry = geometry;
    edge.matches = std::move(matches);
  } else {
    edge.geometry = geometry.Inverse();
    edge.matches.reserve(matches.size());
    for (const FeatureMatch& m : matches) {
      edge.matches.push_back({m.point2D_idx2, m.point2D_idx1});
    }
  }

  const std::uint32_t count = geometry.inlier_count;
  auto& row_i = adjacency_[i];
  const auto it = row_i.find(j);
  if (it != row_i.end()) {
    row_sums_[i] -= it->second;
    row_sums_[j] -= it->second;
  }
  row_i[j] = count;
  adjacency_[j][i] = count;
  row_sums_[i] += count;
  row_sums_[j] += count;
  edges_[ViewPair(i, j)] = std::move(edge);
  return EdgeAdmission::kAdmitted;
}

bool ViewGraph::HasEdge(view_t i, view_t j) const {
  return edges_.count(ViewPair(i, j)) > 0;
}

const Intrinsics& ViewGraph::ViewIntrinsics(view_t view) const {
  CheckView(view, "ViewIntrinsics");
  return intrinsics_[view];
}

const std::vector<Eigen::Vector2d>& ViewGraph::Keypoints(view_t view) const {
  CheckView(view, "Keypoints");
  return keypoints_[view];
}

std::uint32_t ViewGraph::MatchCount(view_t i, view_t j) const {
  CheckView(i, "MatchCount");
  CheckView(j, "MatchCount");
  const auto& row = adjacency_[i];
  const auto it = row.find(j);
  return it == row.end() ? 0 : it->second;
}

std::uint64_t ViewGraph::RowSum(view_t view) const {
  CheckView(view, "RowSum");
  return row_sums_[view];
}

const std::map<view_t, std::uint32_t>& ViewGraph::Neighbors(
    view_t view) const {
  CheckView(view, "Neighbors");
  return adjacency_[view];
}

const ViewGraphEdge* ViewGraph::FindEdge(view_t i, view_t j) const {
  const auto it = edges_.find(ViewPair(i, j));
  return it == edges_.end() ? nullptr : &it->second;
}

RelativeGeometry ViewGraph::OrientedGeometry(view_t i, view_t j) const {
  const ViewGraphEdge* edge = FindEdge(i, j);
  if (edge == nullptr) {
    throw InvalidArgument("OrientedGeometry: no edge (" + std::to_string(i) +
                          ", " + std::to_string(j) + ")");
  }
  return i < j ? edge->geometry : edge->geometry.Inverse();
}

double ViewGraph::JaccardDistance(view_t i, view_t j) const {
  CheckView(i, "JaccardDistance");
  CheckView(j, "JaccardDistance");
  const std::uint64_t denominator = row_sums_[i] + row_sums_[j];
  if (denominator == 0) {
    return 1.0;
  }
  const auto& row_i = adjacency_[i];
  const auto& row_j = adjacency_[j];
  const bool i_smaller = row_i.size() <= row_j.size();
  const auto& small = i_smaller ? row_i : row_j;
  const auto& large = i_smaller ? row_j : row_i;
  std::uint64_t numerator = 0;
  for (const auto& [n, m_small] : small) {
    const auto it = large.find(n);
    if (it != large.end()) {
      numerator += m_small + it->second;
    }
  }
  return 1.0 - static_cast<double>(numerator) /
                   static_cast<double>(denominator);
}

std::vector<ViewPair> ViewGraph::EdgesWithChangedDistance(
    view_t new_view) const {
  CheckView(new_view, "EdgesWithChangedDistance");
  std::set<ViewPair> changed;
  for (const auto& [n, count] : adjacency_[new_view]) {
    changed.emplace(new_view, n);
    for (const auto& [k, unused] : adjacency_[n]) {
      changed.emplace(n, k);
    }
  }
  return {changed.begin(), changed.end()};
}

namespace {

nlohmann::json QuaternionToJson(const Eigen::Matrix3d& rotation) {
  const Eigen::Quaterniond q(rotation);
  return {q.w(), q.x(), q.y(), q.z()};
}

Eigen::Matrix3d QuaternionFromJson(const nlohmann::json& j) {
  Eigen::Quaterniond q(j.at(0).get<double>(), j.at(1).get<double>(),
                       j.at(2).get<double>(), j.at(3).get<double>());
  return q.normalized().toRotationMatrix();
}

}  // namespace

nlohmann::json ViewGraph::ToJson() const {
  nlohmann::json json;
  json["min_correspondences"] = min_correspondences_;
  auto& views = json["views"] = nlohmann::json::array();
  for (std::size_t id = 0; id < intrinsics_.size(); ++id) {
    const Intrinsics& k = intrinsics_[id];
    views.push_back({{"id", id},
                     {"fx", k.fx},
                     {"fy", k.fy},
                     {"cx", k.cx},
                     {"cy", k.cy},
                     {"width", k.width},
                     {"height", k.height}});
  }
  auto& edges = json["edges"] = nlohmann::json::array();
  for (const auto& [pair, edge] : edges_) {
    const Eigen::Vector3d& t = edge.geometry.translation_direction;
    edges.push_back({{"i", pair.first},
                     {"j", pair.second},
                     {"quaternion_wxyz", QuaternionToJson(edge.geometry.rotation)},
                     {"direction", {t.x(), t.y(), t.z()}},
                     {"inliers", edge.geometry.inlier_count}});
  }
  return json;
}

ViewGraph ViewGraph::FromJson(const nlohmann::json& json) {
  ViewGraph graph(json.value("min_correspondences",
                             kDefaultMinCorrespondences));
  for (const auto& v : json.at("views")) {
    Intrinsics k;
    k.fx = v.at("fx").get<double>();
    k.fy = v.at("fy").get<double>();
    k.cx = v.at("cx").get<double>();
    k.cy = v.at("cy").get<double>();
    k.width = v.value("width", 0);
    k.height = v.value("height", 0);
    const view_t id = graph.AddView(k);
    if (id != v.at("id").get<view_t>()) {
      throw InvalidArgument("ViewGraph::FromJson: view ids must be dense");
    }
  }
  for (const auto& e : json.at("edges")) {
    RelativeGeometry geometry;
    geometry.rotation = QuaternionFromJson(e.at("quaternion_wxyz"));
    const auto& d = e.at("direction");
    geometry.translation_direction =
        Eigen::Vector3d(d.at(0).get<double>(), d.at(1).get<double>(),
                        d.at(2).get<double>())
            .normalized();
    geometry.inlier_count = e.at("inliers").get<std::uint32_t>();
    graph.AddEdge(e.at("i").get<view_t>(), e.at("j").get<view_t>(), geometry);
  }
  return graph;
}

}  // namespace psfm
