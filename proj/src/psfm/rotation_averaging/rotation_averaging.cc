#include "psfm/rotation_averaging/rotation_averaging.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <string>

#include <Eigen/Cholesky>

#include "psfm/geometry/so3.h"
#include "psfm/util/error.h"
#include "psfm/util/union_find.h"

namespace psfm {
namespace {

struct EdgeTerm {
  std::size_t i = 0;  // index into subgraph.views
  std::size_t j = 0;
  Eigen::Matrix3d relative;  // R_ij for i < j
  double rho = 1.0;
};

std::vector<EdgeTerm> EdgeTerms(const ClusterSubgraph& subgraph) {
  const auto index = [&](view_t v) {
    return static_cast<std::size_t>(
        std::lower_bound(subgraph.views.begin(), subgraph.views.end(), v) -
        subgraph.views.begin());
  };
  std::vector<EdgeTerm> terms;
  double total = 0.0;
  for (const auto& [pair, edge] : subgraph.edges) {
    terms.push_back({index(pair.first), index(pair.second),
                     edge.geometry.rotation,
                     static_cast<double>(edge.geometry.inlier_count)});
    total += terms.back().rho;
  }
  if (total > 0.0) {
    const double mean = total / static_cast<double>(terms.size());
    for (EdgeTerm& t : terms) {
      t.rho /= mean;
    }
  }
  return terms;
}

double Objective(const std::vector<EdgeTerm>& terms,
                 const std::vector<Eigen::Matrix3d>& rotations) {
  double sum = 0.0;
  for (const EdgeTerm& t : terms) {
    sum += t.rho * RotationAngle(rotations[t.j].transpose() * t.relative *
                                 rotations[t.i]);
  }
  return sum;
}

std::string DescribeComponents(const ClusterSubgraph& subgraph) {
  std::string text;
  for (const auto& component : subgraph.Components()) {
    text += " {";
    for (std::size_t k = 0; k < component.size(); ++k) {
      text += (k ? "," : "") + std::to_string(component[k]);
    }
    text += "}";
  }
  return text;
}

// One pass of exact coordinate descent over the views: each view may jump to
// the candidate rotation implied by one of its edges when that lowers the
// weighted sum of its residual angles. Escapes the near-pi configurations
// where the linearized step is ill-defined. Returns true on any change.
bool CandidatePass(const std::vector<EdgeTerm>& terms, std::size_t gauge,
                   std::vector<Eigen::Matrix3d>* rotations) {
  const std::size_t n = rotations->size();
  std::vector<std::vector<std::size_t>> incident(n);
  for (std::size_t e = 0; e < terms.size(); ++e) {
    incident[terms[e].i].push_back(e);
    incident[terms[e].j].push_back(e);
  }
  const auto local_cost = [&](std::size_t k, const Eigen::Matrix3d& r) {
    double cost = 0.0;
    for (const std::size_t e : incident[k]) {
      const EdgeTerm& t = terms[e];
      const Eigen::Matrix3d& ri = t.i == k ? r : (*rotations)[t.i];
      const Eigen::Matrix3d& rj = t.j == k ? r : (*rotations)[t.j];
      cost += t.rho * RotationAngle(rj.transpose() * t.relative * ri);
    }
    return cost;
  };
  bool changed = false;
  for (std::size_t k = 0; k < n; ++k) {
    if (k == gauge) continue;
    double best = local_cost(k, (*rotations)[k]);
    Eigen::Matrix3d best_rotation = (*rotations)[k];
    for (const std::size_t e : incident[k]) {
      const EdgeTerm& t = terms[e];
      const Eigen::Matrix3d candidate =
          t.j == k ? ProjectToRotation(t.relative * (*rotations)[t.i])
                   : ProjectToRotation(t.relative.transpose() *
                                       (*rotations)[t.j]);
      const double cost = local_cost(k, candidate);
      if (cost < best - 1e-9) {
        best = cost;
        best_rotation = candidate;
      }
    }
    if (!best_rotation.isApprox((*rotations)[k], 0.0)) {
      (*rotations)[k] = best_rotation;
      changed = true;
    }
  }
  return changed;
}

}  // namespace

nlohmann::json AveragingReport::ToJson() const {
  nlohmann::json removed = nlohmann::json::array();
  for (const ViewPair& pair : removed_edges) {
    removed.push_back({pair.first, pair.second});
  }
  // Residual histogram with 1 degree bins up to 20 and one overflow bin.
  std::vector<int> histogram(21, 0);
  for (const auto& [pair, residual] : per_edge_residual_deg) {
    ++histogram[std::min<std::size_t>(20, static_cast<std::size_t>(residual))];
  }
  return {{"removed_edges", removed},
          {"residual_histogram_deg", histogram},
          {"iterations", iterations},
          {"converged", converged}};
}

GlobalRotations MstInitialize(const ClusterSubgraph& subgraph) {
  GlobalRotations result;
  if (subgraph.views.empty()) {
    return result;
  }
  std::vector<std::pair<ViewPair, std::uint32_t>> edges;
  for (const auto& [pair, edge] : subgraph.edges) {
    edges.emplace_back(pair, edge.geometry.inlier_count);
  }
  std::stable_sort(edges.begin(), edges.end(),
                   [](const auto& a, const auto& b) {
                     return a.second > b.second;
                   });
  const auto index = [&](view_t v) {
    return static_cast<std::size_t>(
        std::lower_bound(subgraph.views.begin(), subgraph.views.end(), v) -
        subgraph.views.begin());
  };
  UnionFind uf(subgraph.views.size());
  std::map<view_t, std::vector<view_t>> tree;
  std::size_t tree_edges = 0;
  for (const auto& [pair, weight] : edges) {
    if (uf.Union(index(pair.first), index(pair.second))) {
      tree[pair.first].push_back(pair.second);
      tree[pair.second].push_back(pair.first);
      ++tree_edges;
    }
  }
  if (tree_edges + 1 != subgraph.views.size()) {
    throw DegenerateInput("MstInitialize: subgraph is disconnected:" +
                          DescribeComponents(subgraph));
  }

  result.gauge = subgraph.views.front();
  result.rotations[result.gauge] = Eigen::Matrix3d::Identity();
  std::queue<view_t> queue;
  queue.push(result.gauge);
  while (!queue.empty()) {
    const view_t i = queue.front();
    queue.pop();
    for (const view_t j : tree[i]) {
      if (result.rotations.count(j)) {
        continue;
      }
      result.rotations[j] = ProjectToRotation(
          subgraph.OrientedGeometry(i, j).rotation * result.rotations[i]);
      queue.push(j);
    }
  }
  return result;
}

GlobalRotations SolveL1(const ClusterSubgraph& subgraph,
                        const GlobalRotations& init,
                        const RotationAveragingOptions& options,
                        AveragingReport* report) {
  const std::size_t n = subgraph.views.size();
  std::vector<Eigen::Matrix3d> rotations(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto it = init.rotations.find(subgraph.views[k]);
    if (it == init.rotations.end()) {
      throw InvalidArgument("SolveL1: initialization misses view " +
                            std::to_string(subgraph.views[k]));
    }
    rotations[k] = it->second;
  }
  const std::size_t gauge =
      static_cast<std::size_t>(std::find(subgraph.views.begin(),
                                         subgraph.views.end(), init.gauge) -
                               subgraph.views.begin());
  if (gauge == n) {
    throw InvalidArgument("SolveL1: gauge view is not in the subgraph");
  }
  const std::vector<EdgeTerm> terms = EdgeTerms(subgraph);

  // Free-variable index of each view; the gauge has none.
  std::vector<int> free_index(n, -1);
  int num_free = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (k != gauge) free_index[k] = num_free++;
  }

  AveragingReport local_report;
  double objective = Objective(terms, rotations);
  local_report.objective_history.push_back(objective);
  if (num_free > 0 && CandidatePass(terms, gauge, &rotations)) {
    objective = Objective(terms, rotations);
    local_report.objective_history.push_back(objective);
  }

  for (int iteration = 0; iteration < options.max_iterations && num_free > 0;
       ++iteration) {
    local_report.iterations = iteration + 1;
    std::vector<Eigen::Vector3d> omega_rel(terms.size());
    for (std::size_t e = 0; e < terms.size(); ++e) {
      const EdgeTerm& t = terms[e];
      omega_rel[e] =
          SO3Log(rotations[t.j].transpose() * t.relative * rotations[t.i]);
    }

    // Weighted L1 on the linearized system by IRLS. The block system is
    // (L kron I3), so a scalar Laplacian with three right-hand sides
    // suffices.
    Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(num_free, 3);
    const auto delta_of = [&](std::size_t k) -> Eigen::Vector3d {
      return free_index[k] < 0 ? Eigen::Vector3d::Zero()
                               : Eigen::Vector3d(delta.row(free_index[k]));
    };
    for (int irls = 0; irls < options.max_irls_iterations; ++irls) {
      Eigen::MatrixXd laplacian = Eigen::MatrixXd::Zero(num_free, num_free);
      Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(num_free, 3);
      for (std::size_t e = 0; e < terms.size(); ++e) {
        const EdgeTerm& t = terms[e];
        double w = t.rho;
        if (irls > 0) {
          const Eigen::Vector3d r = delta_of(t.j) - delta_of(t.i) - omega_rel[e];
          w = t.rho / std::max(r.norm(), options.irls_epsilon);
        }
        const int a = free_index[t.i];
        const int b = free_index[t.j];
        if (a >= 0) {
          laplacian(a, a) += w;
          rhs.row(a) -= w * omega_rel[e].transpose();
        }
        if (b >= 0) {
          laplacian(b, b) += w;
          rhs.row(b) += w * omega_rel[e].transpose();
        }
        if (a >= 0 && b >= 0) {
          laplacian(a, b) -= w;
          laplacian(b, a) -= w;
        }
      }
      const Eigen::LDLT<Eigen::MatrixXd> ldlt(laplacian);
      const Eigen::MatrixXd updated = ldlt.solve(rhs);
      const double change = (updated - delta).cwiseAbs().maxCoeff();
      delta = updated;
      if (change < 1e-9) {
        break;
      }
    }

    double max_step = 0.0;
    for (int k = 0; k < num_free; ++k) {
      max_step = std::max(max_step, delta.row(k).norm());
    }

    // Accept the largest step, by halving, that does not increase the
    // objective.
    bool accepted = false;
    double alpha = 1.0;
    std::vector<Eigen::Matrix3d> candidate(n);
    for (int halving = 0; halving < 10; ++halving, alpha *= 0.5) {
      for (std::size_t k = 0; k < n; ++k) {
        candidate[k] = rotations[k] * SO3Exp(alpha * delta_of(k));
      }
      const double candidate_objective = Objective(terms, candidate);
      if (candidate_objective <= objective) {
        rotations = candidate;
        objective = candidate_objective;
        local_report.objective_history.push_back(objective);
        accepted = true;
        break;
      }
    }
    if (!accepted || alpha * max_step < options.tolerance) {
      if (CandidatePass(terms, gauge, &rotations)) {
        objective = Objective(terms, rotations);
        local_report.objective_history.push_back(objective);
        continue;
      }
      local_report.converged = accepted || max_step < options.tolerance;
      break;
    }
  }
  if (num_free == 0) {
    local_report.converged = true;
  }

  GlobalRotations result;
  result.gauge = init.gauge;
  for (std::size_t k = 0; k < n; ++k) {
    result.rotations[subgraph.views[k]] = ProjectToRotation(rotations[k]);
  }
  if (report != nullptr) {
    *report = std::move(local_report);
  }
  return result;
}

double RotationResidualDeg(const Eigen::Matrix3d& relative,
                           const Eigen::Matrix3d& rotation_i,
                           const Eigen::Matrix3d& rotation_j) {
  return RotationAngleDeg(relative *
                          (rotation_j * rotation_i.transpose()).transpose());
}

AveragingReport FilterEdges(const ClusterSubgraph& subgraph,
                            const GlobalRotations& rotations,
                            double rho_gmax_deg) {
  AveragingReport report;
  for (const auto& [pair, edge] : subgraph.edges) {
    const double residual = RotationResidualDeg(
        edge.geometry.rotation, rotations.rotations.at(pair.first),
        rotations.rotations.at(pair.second));
    report.per_edge_residual_deg[pair] = residual;
    if (residual > rho_gmax_deg) {
      report.removed_edges.insert(pair);
    }
  }
  return report;
}

}  // namespace psfm
