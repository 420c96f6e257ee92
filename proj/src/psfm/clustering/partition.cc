#include "psfm/clustering/partition.h"

#include <string>

#include "psfm/util/error.h"

namespace psfm {

cluster_t Partition::ClusterOf(view_t view) const {
  const auto it = assignment.find(view);
  if (it == assignment.end()) {
    throw InvalidArgument("Partition: view " + std::to_string(view) +
                          " is not assigned");
  }
  return it->second;
}

bool Partition::IsConsistent() const {
  std::size_t members = 0;
  for (const auto& [id, views] : clusters) {
    if (views.empty() || id >= next_cluster_id) {
      return false;
    }
    for (const view_t v : views) {
      const auto it = assignment.find(v);
      if (it == assignment.end() || it->second != id) {
        return false;
      }
    }
    members += views.size();
  }
  return members == assignment.size();
}

std::set<std::set<view_t>> Partition::Groups() const {
  std::set<std::set<view_t>> groups;
  for (const auto& [id, views] : clusters) {
    groups.insert(views);
  }
  return groups;
}

nlohmann::json Partition::ToJson() const {
  nlohmann::json json = nlohmann::json::array();
  for (const auto& [id, views] : clusters) {
    json.push_back({{"cluster_id", id},
                    {"member_view_ids", std::vector<view_t>(views.begin(),
                                                            views.end())}});
  }
  return json;
}

bool SameGrouping(const Partition& a, const Partition& b) {
  return a.assignment.size() == b.assignment.size() && a.Groups() == b.Groups();
}

}  // namespace psfm
