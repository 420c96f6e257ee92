#pragma once

#include <cmath>
#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include "psfm/geometry/so3.h"
#include "psfm/rotation_averaging/rotation_averaging.h"
#include "psfm/viewgraph/subgraph.h"

namespace psfm::testing {

inline Eigen::Vector3d RandomUnitVector(std::mt19937_64* rng) {
  std::normal_distribution<double> normal;
  return Eigen::Vector3d(normal(*rng), normal(*rng), normal(*rng)).normalized();
}

inline Eigen::Matrix3d RandomRotation(std::mt19937_64* rng) {
  std::uniform_real_distribution<double> angle(0.0, M_PI);
  return SO3Exp(RandomUnitVector(rng) * angle(*rng));
}

struct RotationProblem {
  ClusterSubgraph subgraph;
  std::vector<Eigen::Matrix3d> truth;  // indexed by view id
  std::set<ViewPair> outliers;
};

// Random connected graph over `num_views` views with Bernoulli edges, a
// fraction of edges corrupted by at least `outlier_min_deg`, and Gaussian
// angular noise on the rest. Every view keeps more inlier than outlier
// edge weight than outlier edge weight, which is the condition under which
// the weighted L1 optimum separates the outliers.
inline RotationProblem MakeRotationProblem(std::mt19937_64* rng, int num_views,
                                           double edge_probability,
                                           double outlier_fraction,
                                           double noise_deg,
                                           double outlier_min_deg = 60.0) {
  RotationProblem problem;
  for (int v = 0; v < num_views; ++v) {
    problem.truth.push_back(RandomRotation(rng));
    problem.subgraph.views.push_back(v);
  }
  std::bernoulli_distribution keep(edge_probability);
  std::uniform_int_distribution<std::uint32_t> count(50, 300);
  std::vector<ViewPair> pairs;
  std::vector<std::uint32_t> weights;
  std::vector<double> total_weight(num_views, 0.0);
  for (int i = 0; i < num_views; ++i) {
    for (int j = i + 1; j < num_views; ++j) {
      // A ring keeps the graph connected.
      if (j == i + 1 || (i == 0 && j == num_views - 1) || keep(*rng)) {
        pairs.emplace_back(i, j);
        weights.push_back(count(*rng));
        total_weight[i] += weights.back();
        total_weight[j] += weights.back();
      }
    }
  }
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), *rng);
  const auto target =
      static_cast<std::size_t>(std::round(outlier_fraction * pairs.size()));
  std::vector<double> bad_weight(num_views, 0.0);
  for (const std::size_t k : order) {
    if (problem.outliers.size() == target) break;
    const ViewPair& p = pairs[k];
    const double w = weights[k];
    if (2.0 * (bad_weight[p.first] + w) < total_weight[p.first] &&
        2.0 * (bad_weight[p.second] + w) < total_weight[p.second]) {
      problem.outliers.insert(p);
      bad_weight[p.first] += w;
      bad_weight[p.second] += w;
    }
  }

  std::normal_distribution<double> noise(0.0, DegToRad(noise_deg));
  std::uniform_real_distribution<double> gross(DegToRad(outlier_min_deg), M_PI);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const ViewPair& p = pairs[k];
    ViewGraphEdge edge;
    Eigen::Matrix3d relative =
        problem.truth[p.second] * problem.truth[p.first].transpose();
    const double angle =
        problem.outliers.count(p) ? gross(*rng) : noise(*rng);
    edge.geometry.rotation = SO3Exp(RandomUnitVector(rng) * angle) * relative;
    edge.geometry.inlier_count = weights[k];
    problem.subgraph.edges.emplace(p, edge);
  }
  return problem;
}

// Mean angular error in degrees after removing the global gauge R -> R G.
inline double MeanAlignedErrorDeg(const GlobalRotations& estimate,
                                  const std::vector<Eigen::Matrix3d>& truth) {
  Eigen::Matrix3d sum = Eigen::Matrix3d::Zero();
  for (const auto& [v, r] : estimate.rotations) {
    sum += r.transpose() * truth[v];
  }
  const Eigen::Matrix3d g = ProjectToRotation(sum);
  double total = 0.0;
  for (const auto& [v, r] : estimate.rotations) {
    total += RotationDistanceDeg(r * g, truth[v]);
  }
  return total / static_cast<double>(estimate.rotations.size());
}

}  // namespace psfm::testing
