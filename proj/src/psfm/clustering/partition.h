#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "json.hpp"

#include "psfm/util/types.h"

namespace psfm {

struct Partition {
  std::map<view_t, cluster_t> assignment;
  std::map<cluster_t, std::set<view_t>> clusters;
  // Timestep (number of views seen) at which the partition was produced.
  std::uint64_t generation = 0;
  // Next unused cluster id. Ids are never reused within a run.
  cluster_t next_cluster_id = 0;

  cluster_t ClusterOf(view_t view) const;
  bool IsConsistent() const;

  // Membership as a set of sets, independent of cluster ids.
  std::set<std::set<view_t>> Groups() const;

  nlohmann::json ToJson() const;
};

// Equal up to cluster ids.
bool SameGrouping(const Partition& a, const Partition& b);

struct TransferGroup {
  cluster_t source = kInvalidClusterId;
  cluster_t destination = kInvalidClusterId;
  std::set<view_t> views;
  bool operator==(const TransferGroup&) const = default;
};

struct TopologyDelta {
  std::map<cluster_t, std::set<view_t>> added;
  std::map<cluster_t, std::set<view_t>> removed;
  std::vector<TransferGroup> transfers;
  std::set<cluster_t> unchanged_clusters;
  // Clusters present before and absent after.
  std::set<cluster_t> deleted_clusters;

  bool Empty() const {
    return added.empty() && removed.empty() && transfers.empty() &&
           deleted_clusters.empty();
  }
};

}  // namespace psfm
