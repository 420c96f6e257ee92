#include "psfm/registration/cluster_graph.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Geometry>

#include "psfm/reconstruction/track.h"
#include "psfm/registration/neighborhood_similarity.h"
#include "psfm/registration/sim3_ransac.h"
#include "psfm/util/error.h"
#include "psfm/util/union_find.h"

namespace psfm {
namespace {

using Vector7d = Eigen::Matrix<double, 7, 1>;
using Matrix7d = Eigen::Matrix<double, 7, 7>;

nlohmann::json Sim3ToJson(const Sim3& t) {
  const Eigen::Quaterniond q(t.rotation);
  return {{"scale", t.scale},
          {"quaternion_wxyz", {q.w(), q.x(), q.y(), q.z()}},
          {"translation", {t.translation.x(), t.translation.y(),
                           t.translation.z()}}};
}

double Percentile(std::vector<double> values, double q) {
  const auto k = static_cast<std::ptrdiff_t>(
      std::floor(q * static_cast<double>(values.size() - 1)));
  std::nth_element(values.begin(), values.begin() + k, values.end());
  return values[static_cast<std::size_t>(k)];
}

std::map<FeatureKey, std::size_t> TriangulatedIndex(
    const LocalReconstruction& recon) {
  std::map<FeatureKey, std::size_t> index;
  for (std::size_t t = 0; t < recon.tracks.size(); ++t) {
    const Track& track = recon.tracks[t];
    if (!track.IsTriangulated()) continue;
    for (const auto& [view, element] : track.observations) {
      index[{view, element.point2D_idx}] = t;
    }
  }
  return index;
}

std::map<view_t, Eigen::Vector3d> Centers(const LocalReconstruction& recon) {
  std::map<view_t, Eigen::Vector3d> centers;
  for (const auto& [view, pose] : recon.poses) centers[view] = pose.center;
  return centers;
}

std::uint64_t EdgeSeed(ViewPair pair) {
  return (static_cast<std::uint64_t>(pair.first) << 32) ^ pair.second ^
         0x51ed270b27a3c1f5ULL;
}

struct EdgeJob {
  ViewPair views;
  cluster_t a;
  cluster_t b;
  std::vector<Eigen::Vector3d> src;
  std::vector<Eigen::Vector3d> dst;
  Sim3RansacResult result;
  double similarity = 0.0;
  bool accepted = false;
};

double Huber(double r, double delta) {
  const double a = std::abs(r);
  return a <= delta ? 0.5 * r * r : delta * (a - 0.5 * delta);
}

struct Residuals {
  const ClusterGraph* graph;
  double baseline;

  Vector7d Of(const ClusterEdge& e, const Sim3& pa, const Sim3& pb) const {
    Vector7d r = (e.transform.Inverse() * pa.Inverse() * pb).Log();
    r.segment<3>(3) /= baseline;
    return r;
  }
};

double MeanBaseline(const ClusterGraph& graph) {
  double sum = 0.0;
  for (const ClusterEdge& e : graph.edges) sum += e.transform.translation.norm();
  const double mean =
      graph.edges.empty() ? 0.0 : sum / static_cast<double>(graph.edges.size());
  return mean > 1e-12 ? mean : 1.0;
}

}  // namespace

std::vector<std::vector<cluster_t>> ClusterGraph::Components() const {
  std::vector<cluster_t> ids;
  for (const auto& [id, pose] : nodes) ids.push_back(id);
  std::map<cluster_t, std::size_t> slot;
  for (std::size_t k = 0; k < ids.size(); ++k) slot[ids[k]] = k;
  UnionFind uf(ids.size());
  for (const ClusterEdge& e : edges) uf.Union(slot.at(e.a), slot.at(e.b));
  std::map<std::size_t, std::vector<cluster_t>> groups;
  for (std::size_t k = 0; k < ids.size(); ++k) groups[uf.Find(k)].push_back(ids[k]);
  std::vector<std::vector<cluster_t>> out;
  for (auto& [root, members] : groups) out.push_back(std::move(members));
  std::sort(out.begin(), out.end());
  return out;
}

nlohmann::json ClusterGraph::ToJson() const {
  nlohmann::json j;
  j["nodes"] = nlohmann::json::array();
  for (const auto& [id, pose] : nodes) {
    nlohmann::json node = Sim3ToJson(pose);
    node["cluster_id"] = id;
    j["nodes"].push_back(node);
  }
  j["edges"] = nlohmann::json::array();
  for (const ClusterEdge& e : edges) {
    nlohmann::json edge = Sim3ToJson(e.transform);
    edge["a"] = e.a;
    edge["b"] = e.b;
    edge["support"] = e.support;
    j["edges"].push_back(edge);
  }
  return j;
}

double SceneDiameter(const LocalReconstruction& recon) {
  std::vector<Eigen::Vector3d> points;
  for (const auto& [view, pose] : recon.poses) points.push_back(pose.center);
  std::array<std::vector<double>, 3> axes;
  for (const Track& track : recon.tracks) {
    if (!track.IsTriangulated()) continue;
    for (int d = 0; d < 3; ++d) axes[d].push_back((*track.point)[d]);
  }
  if (!axes[0].empty()) {
    Eigen::Vector3d lo, hi;
    for (int d = 0; d < 3; ++d) {
      lo[d] = Percentile(axes[d], 0.02);
      hi[d] = Percentile(axes[d], 0.98);
    }
    points.push_back(lo);
    points.push_back(hi);
  }
  return BoundingBoxDiagonal(points);
}

void EdgePointPairs(const ViewGraph& graph, ViewPair edge,
                    const LocalReconstruction& recon_i,
                    const LocalReconstruction& recon_j,
                    std::vector<Eigen::Vector3d>* src,
                    std::vector<Eigen::Vector3d>* dst) {
  const ViewGraphEdge* e = graph.FindEdge(edge.first, edge.second);
  if (e == nullptr) return;
  const auto index_i = TriangulatedIndex(recon_i);
  const auto index_j = TriangulatedIndex(recon_j);
  for (const FeatureMatch& m : e->matches) {
    const auto it = index_i.find({edge.first, m.point2D_idx1});
    const auto jt = index_j.find({edge.second, m.point2D_idx2});
    if (it == index_i.end() || jt == index_j.end()) continue;
    src->push_back(*recon_j.tracks[jt->second].point);
    dst->push_back(*recon_i.tracks[it->second].point);
  }
}

ClusterGraph CollectConstraints(
    const ViewGraph& graph,
    const std::map<cluster_t, LocalReconstruction>& reconstructions,
    const ConstraintOptions& options, std::vector<EdgeEvidence>* evidence) {
  ClusterGraph out;
  std::map<view_t, cluster_t> owner;
  std::map<cluster_t, std::map<FeatureKey, std::size_t>> index;
  std::map<cluster_t, double> diameter;
  for (const auto& [id, recon] : reconstructions) {
    if (recon.registered.size() < 2) continue;
    out.nodes[id] = Sim3::Identity();
    for (const view_t v : recon.registered) owner[v] = id;
    index[id] = TriangulatedIndex(recon);
    diameter[id] = SceneDiameter(recon);
  }

  std::vector<EdgeJob> jobs;
  for (const auto& [pair, edge] : graph.Edges()) {
    const auto oi = owner.find(pair.first);
    const auto oj = owner.find(pair.second);
    if (oi == owner.end() || oj == owner.end() || oi->second == oj->second) {
      continue;
    }
    // Canonical orientation: a < b, constraint maps b into a.
    const bool flip = oi->second > oj->second;
    EdgeJob job;
    job.views = pair;
    job.a = flip ? oj->second : oi->second;
    job.b = flip ? oi->second : oj->second;
    const auto& ia = index.at(job.a);
    const auto& ib = index.at(job.b);
    const auto& ra = reconstructions.at(job.a);
    const auto& rb = reconstructions.at(job.b);
    for (const FeatureMatch& m : edge.matches) {
      const FeatureKey ka = flip ? FeatureKey{pair.second, m.point2D_idx2}
                                 : FeatureKey{pair.first, m.point2D_idx1};
      const FeatureKey kb = flip ? FeatureKey{pair.first, m.point2D_idx1}
                                 : FeatureKey{pair.second, m.point2D_idx2};
      const auto it = ia.find(ka);
      const auto jt = ib.find(kb);
      if (it == ia.end() || jt == ib.end()) continue;
      job.src.push_back(*rb.tracks[jt->second].point);
      job.dst.push_back(*ra.tracks[it->second].point);
    }
    if (job.src.size() >= 3) jobs.push_back(std::move(job));
  }

  const auto run = [&](EdgeJob& job) {
    Sim3RansacOptions ro;
    ro.inlier_threshold = options.relative_threshold * diameter.at(job.a);
    ro.confidence = options.ransac_confidence;
    ro.max_iterations = options.ransac_max_iterations;
    std::mt19937_64 rng(EdgeSeed(job.views));
    job.result = RansacSim3(job.src, job.dst, ro, &rng);
    if (!job.result.success) return;
    job.similarity =
        NeighborhoodSimilarity(Centers(reconstructions.at(job.b)),
                               Centers(reconstructions.at(job.a)),
                               job.result.transform)
            .s;
    job.accepted = job.similarity >= options.lambda_c;
  };
  const int num_jobs = static_cast<int>(jobs.size());
  if (options.execution == Execution::kParallel) {
#pragma omp parallel for schedule(dynamic)
    for (int k = 0; k < num_jobs; ++k) run(jobs[k]);
  } else {
    for (int k = 0; k < num_jobs; ++k) run(jobs[k]);
  }

  std::map<std::pair<cluster_t, cluster_t>, std::vector<const EdgeJob*>>
      surviving;
  for (const EdgeJob& job : jobs) {
    if (evidence != nullptr) {
      evidence->push_back({job.views, job.a, job.b, job.src.size(),
                           job.result.num_inliers, job.similarity,
                           job.accepted});
    }
    if (job.accepted) surviving[{job.a, job.b}].push_back(&job);
  }
  for (const auto& [key, list] : surviving) {
    std::vector<Eigen::Vector3d> src, dst;
    for (const EdgeJob* job : list) {
      for (std::size_t k = 0; k < job->src.size(); ++k) {
        if (!job->result.inlier_mask[k]) continue;
        src.push_back(job->src[k]);
        dst.push_back(job->dst[k]);
      }
    }
    Sim3RansacOptions ro;
    ro.inlier_threshold = options.relative_threshold * diameter.at(key.first);
    ro.confidence = options.ransac_confidence;
    ro.max_iterations = options.ransac_max_iterations;
    std::mt19937_64 rng(EdgeSeed(ViewPair(key.first, key.second)) ^ 0xa5a5);
    const Sim3RansacResult pooled = RansacSim3(src, dst, ro, &rng);
    if (!pooled.success) continue;
    out.edges.push_back({key.first, key.second, pooled.transform,
                         pooled.num_inliers});
  }
  return out;
}

double PoseGraphCost(const ClusterGraph& graph,
                     const std::map<cluster_t, Sim3>& poses,
                     const PoseGraphOptions& options) {
  const Residuals residuals{&graph, MeanBaseline(graph)};
  double cost = 0.0;
  for (const ClusterEdge& e : graph.edges) {
    const Vector7d r = residuals.Of(e, poses.at(e.a), poses.at(e.b));
    for (int c = 0; c < 7; ++c) cost += Huber(r[c], options.huber);
  }
  return cost;
}

std::map<cluster_t, Sim3> OptimizeClusterPoses(const ClusterGraph& graph,
                                               const PoseGraphOptions& options,
                                               PoseGraphReport* report) {
  std::map<cluster_t, Sim3> poses;
  for (const auto& [id, pose] : graph.nodes) poses[id] = Sim3::Identity();
  for (const ClusterEdge& e : graph.edges) {
    if (e.a == e.b || !poses.count(e.a) || !poses.count(e.b)) {
      throw InvalidArgument("OptimizeClusterPoses: invalid edge");
    }
  }

  // Spanning-tree initialization by decreasing support.
  std::vector<std::size_t> order(graph.edges.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return graph.edges[x].support > graph.edges[y].support;
  });
  std::vector<cluster_t> ids;
  std::map<cluster_t, std::size_t> slot;
  for (const auto& [id, pose] : poses) {
    slot[id] = ids.size();
    ids.push_back(id);
  }
  UnionFind tree_uf(ids.size());
  std::map<cluster_t, std::vector<std::size_t>> tree;
  for (const std::size_t k : order) {
    const ClusterEdge& e = graph.edges[k];
    if (tree_uf.Union(slot.at(e.a), slot.at(e.b))) {
      tree[e.a].push_back(k);
      tree[e.b].push_back(k);
    }
  }
  std::set<cluster_t> pinned;
  std::set<cluster_t> placed;
  for (const cluster_t root : ids) {
    if (placed.count(root)) continue;
    pinned.insert(root);
    placed.insert(root);
    std::vector<cluster_t> stack = {root};
    while (!stack.empty()) {
      const cluster_t node = stack.back();
      stack.pop_back();
      for (const std::size_t k : tree[node]) {
        const ClusterEdge& e = graph.edges[k];
        const cluster_t other = e.a == node ? e.b : e.a;
        if (placed.count(other)) continue;
        // P_a^-1 P_b = T_ab.
        poses[other] = e.a == node ? poses[node] * e.transform
                                   : poses[node] * e.transform.Inverse();
        placed.insert(other);
        stack.push_back(other);
      }
    }
  }

  std::map<cluster_t, int> variable;
  int num_variables = 0;
  for (const cluster_t id : ids) {
    if (!pinned.count(id)) variable[id] = num_variables++;
  }
  const Residuals residuals{&graph, MeanBaseline(graph)};
  double cost = PoseGraphCost(graph, poses, options);
  PoseGraphReport local;
  local.initial_cost = cost;
  local.cost_history.push_back(cost);

  const int n = 7 * num_variables;
  double lambda = 1e-4;
  const double h = 1e-7;
  for (int iteration = 0; iteration < options.max_iterations && n > 0;
       ++iteration) {
    local.iterations = iteration + 1;
    Eigen::MatrixXd hessian = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd gradient = Eigen::VectorXd::Zero(n);
    for (const ClusterEdge& e : graph.edges) {
      const Sim3& pa = poses.at(e.a);
      const Sim3& pb = poses.at(e.b);
      const Vector7d r = residuals.Of(e, pa, pb);
      Matrix7d ja = Matrix7d::Zero();
      Matrix7d jb = Matrix7d::Zero();
      for (int d = 0; d < 7; ++d) {
        const Vector7d step = Vector7d::Unit(d) * h;
        ja.col(d) = (residuals.Of(e, pa * Sim3::Exp(step), pb) -
                     residuals.Of(e, pa * Sim3::Exp(-step), pb)) /
                    (2 * h);
        jb.col(d) = (residuals.Of(e, pa, pb * Sim3::Exp(step)) -
                     residuals.Of(e, pa, pb * Sim3::Exp(-step))) /
                    (2 * h);
      }
      Vector7d w;
      for (int c = 0; c < 7; ++c) {
        const double a = std::abs(r[c]);
        w[c] = a <= options.huber ? 1.0 : options.huber / a;
      }
      const auto va = variable.find(e.a);
      const auto vb = variable.find(e.b);
      const Matrix7d jta = ja.transpose() * w.asDiagonal();
      const Matrix7d jtb = jb.transpose() * w.asDiagonal();
      if (va != variable.end()) {
        hessian.block<7, 7>(7 * va->second, 7 * va->second) += jta * ja;
        gradient.segment<7>(7 * va->second) += jta * r;
      }
      if (vb != variable.end()) {
        hessian.block<7, 7>(7 * vb->second, 7 * vb->second) += jtb * jb;
        gradient.segment<7>(7 * vb->second) += jtb * r;
      }
      if (va != variable.end() && vb != variable.end()) {
        hessian.block<7, 7>(7 * va->second, 7 * vb->second) += jta * jb;
        hessian.block<7, 7>(7 * vb->second, 7 * va->second) += jtb * ja;
      }
    }

    bool accepted = false;
    for (int attempt = 0; attempt < 10 && !accepted; ++attempt) {
      Eigen::MatrixXd damped = hessian;
      for (int k = 0; k < n; ++k) {
        damped(k, k) += lambda * std::max(hessian(k, k), 1e-9);
      }
      const Eigen::VectorXd delta = damped.ldlt().solve(-gradient);
      if (!delta.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      std::map<cluster_t, Sim3> candidate = poses;
      for (const auto& [id, v] : variable) {
        candidate[id] = poses[id] * Sim3::Exp(delta.segment<7>(7 * v));
      }
      const double new_cost = PoseGraphCost(graph, candidate, options);
      if (new_cost < cost) {
        const double decrease = (cost - new_cost) / std::max(cost, 1e-300);
        poses = std::move(candidate);
        cost = new_cost;
        local.cost_history.push_back(cost);
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        if (decrease < options.min_relative_decrease) {
          iteration = options.max_iterations;
        }
      } else {
        lambda *= 10.0;
      }
    }
    if (!accepted || cost <= 1e-20) break;
  }
  local.final_cost = cost;
  if (report != nullptr) *report = std::move(local);
  return poses;
}

}  // namespace psfm
