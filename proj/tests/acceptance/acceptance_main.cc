// Runs the acceptance criteria and prints one PASS/FAIL line per criterion.
// Exits nonzero when any criterion fails.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <glog/logging.h>

#include "psfm/clustering/clustering.h"
#include "psfm/geometry/sim3.h"
#include "psfm/geometry/so3.h"
#include "psfm/kernels/ba_linearization.h"
#include "psfm/pipeline/scenario.h"
#include "psfm/reconstruction/bundle_adjustment.h"
#include "psfm/registration/cluster_graph.h"
#include "psfm/registration/neighborhood_similarity.h"
#include "psfm/registration/sim3_ransac.h"
#include "psfm/rotation_averaging/rotation_averaging.h"
#include "support/pose_graph_problems.h"
#include "support/random_graphs.h"
#include "support/rotation_problems.h"
#include "support/synthetic_scene.h"

namespace psfm {
namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void Require(bool condition, const std::string& what) {
    if (!condition) {
      if (!pass) detail << "; ";
      detail << "failed: " << what;
      pass = false;
    }
  }
};

ScenarioConfig TempleScenario(OrderingKind kind, std::uint64_t seed) {
  ScenarioConfig config;
  config.stream.ordering.kind = kind;
  config.stream.ordering.period = 10;
  config.stream.confusion_rate = 0.5;
  config.SetSeed(seed);
  return config;
}

void OrderRobustness(Outcome* out) {
  std::ostringstream runs;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const ScenarioConfig config = TempleScenario(OrderingKind::kShuffled, seed);
    const ScenarioResult r = RunScenario(config, false);
    const Metrics& m = r.metrics.back();
    const double n = config.temple.num_cameras;
    bool effective_one = false;
    for (const Metrics& step : r.metrics) effective_one |= step.clusters_effective == 1;
    char line[160];
    std::snprintf(line, sizeof(line), " seed %llu: %zu/%d registered, %zu outliers, eff %zu, %.1fs;",
                  static_cast<unsigned long long>(seed), m.registered_cameras,
                  config.temple.num_cameras, m.outlier_cameras, m.clusters_effective,
                  r.seconds);
    runs << line;
    const std::string tag = "seed " + std::to_string(seed);
    out->Require(m.registered_cameras >= 0.95 * n, tag + " registered");
    out->Require(m.outlier_cameras <= 0.05 * n, tag + " outliers");
    out->Require(effective_one, tag + " clusters_effective never 1");
    out->Require(r.seconds < 120.0, tag + " runtime");
  }
  out->detail << runs.str();
}

void AdversarialRecovery(Outcome* out) {
  const ScenarioConfig config = TempleScenario(OrderingKind::kPeriodic, 0);
  const ScenarioResult r = RunScenario(config, false);
  // Stage 1: one cluster with more than a quarter of its registered cameras
  // misplaced. Stage 2: a later split into at least two clusters.
  int stage = 0;
  std::size_t wrong_at = 0, split_at = 0;
  for (std::size_t t = 0; t < r.metrics.size(); ++t) {
    const Metrics& m = r.metrics[t];
    if (stage == 0 && m.clusters_raw == 1 && m.registered_cameras > 0 &&
        m.outlier_cameras > 0.25 * m.registered_cameras) {
      stage = 1;
      wrong_at = t;
    } else if (stage == 1 && m.clusters_raw >= 2) {
      stage = 2;
      split_at = t;
      break;
    }
  }
  const Metrics& last = r.metrics.back();
  out->Require(stage >= 1, "no early wrong merge");
  out->Require(stage == 2, "no split after the wrong merge");
  out->Require(last.outlier_cameras == 0, "final outliers");
  out->Require(last.recoveries >= 1, "no recovery recorded");
  out->detail << " wrong merge at t=" << wrong_at << " ("
              << r.metrics[wrong_at].outlier_cameras << "/"
              << r.metrics[wrong_at].registered_cameras << " outliers), split at t="
              << split_at << ", final " << last.registered_cameras << "/"
              << config.temple.num_cameras << " registered, " << last.outlier_cameras
              << " outliers, " << last.recoveries << " recoveries";
}

void RotationAveraging(Outcome* out) {
  std::mt19937_64 rng(2024);
  std::size_t planted = 0, planted_removed = 0, inliers = 0, inliers_removed = 0;
  double worst_error = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto problem = testing::MakeRotationProblem(&rng, 20, 0.4, 0.2, 0.5);
    const GlobalRotations solved =
        SolveL1(problem.subgraph, MstInitialize(problem.subgraph));
    const AveragingReport report = FilterEdges(problem.subgraph, solved, 10.0);
    for (const auto& [pair, edge] : problem.subgraph.edges) {
      const bool removed = report.removed_edges.count(pair) > 0;
      if (problem.outliers.count(pair)) {
        ++planted;
        planted_removed += removed;
      } else {
        ++inliers;
        inliers_removed += removed;
      }
    }
    worst_error = std::max(worst_error, testing::MeanAlignedErrorDeg(solved, problem.truth));
  }
  out->Require(planted_removed == planted, "planted outliers kept");
  out->Require(inliers_removed <= 0.05 * inliers, "too many inliers removed");
  out->Require(worst_error < 2.0, "mean rotation error");
  out->detail << " outliers removed " << planted_removed << "/" << planted
              << ", inliers removed " << inliers_removed << "/" << inliers
              << ", worst trial mean error " << worst_error << " deg";
}

Sim3 RandomSim3(std::mt19937_64* rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Sim3 t;
  t.scale = std::exp(u(*rng));
  t.rotation = testing::RandomRotation(rng);
  t.translation = Eigen::Vector3d(u(*rng), u(*rng), u(*rng)) * 5.0;
  return t;
}

std::map<view_t, Eigen::Vector3d> Line(view_t first, int count, double spacing) {
  std::map<view_t, Eigen::Vector3d> out;
  for (int k = 0; k < count; ++k) out[first + k] = Eigen::Vector3d(spacing * k, 0, 0);
  return out;
}

void Sim3Estimation(Outcome* out) {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> n(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Sim3 truth = RandomSim3(&rng);
    std::vector<Eigen::Vector3d> src, dst;
    for (int k = 0; k < 20; ++k) {
      src.emplace_back(n(rng), n(rng), n(rng));
      dst.push_back(truth * src.back());
    }
    const Sim3 est = EstimateSim3ClosedForm(src, dst);
    worst = std::max({worst, std::abs(est.scale - truth.scale),
                      (est.rotation - truth.rotation).norm(),
                      (est.translation - truth.translation).norm()});
  }
  out->Require(worst < 1e-9, "closed form error");

  int successes = 0;
  for (int trial = 0; trial < 50; ++trial) {
    std::mt19937_64 trial_rng(5000 + trial);
    const Sim3 truth = RandomSim3(&trial_rng);
    std::vector<Eigen::Vector3d> src, dst;
    std::vector<char> planted;
    for (int k = 0; k < 50; ++k) {
      src.emplace_back(n(trial_rng), n(trial_rng), n(trial_rng));
      const bool outlier = k % 10 < 3;
      planted.push_back(outlier);
      const Eigen::Vector3d jitter(n(trial_rng), n(trial_rng), n(trial_rng));
      const Eigen::Vector3d exact = truth * src.back();
      dst.push_back(outlier ? Eigen::Vector3d(exact + 3.0 * jitter + Eigen::Vector3d::Constant(1.0))
                            : Eigen::Vector3d(exact + 1e-3 * truth.scale * jitter));
    }
    Sim3RansacOptions options;
    options.inlier_threshold = 0.01 * truth.scale;
    const Sim3RansacResult r = RansacSim3(src, dst, options, &trial_rng);
    bool ok = r.success;
    for (int k = 0; ok && k < 50; ++k) ok = static_cast<bool>(r.inlier_mask[k]) == !planted[k];
    ok = ok && std::abs(r.transform.scale / truth.scale - 1.0) < 1e-2 &&
         RotationDistanceDeg(r.transform.rotation, truth.rotation) < 0.5;
    successes += ok;
  }
  out->Require(successes == 50, "RANSAC trials");

  Sim3 apart;
  apart.translation = Eigen::Vector3d(50, 0, 0);
  const double disjoint = NeighborhoodSimilarity(Line(0, 10, 1.0), Line(100, 10, 1.0), apart).s;
  Sim3 shift;
  shift.translation = Eigen::Vector3d(1, 0, 0);
  const double interleaved =
      NeighborhoodSimilarity(Line(0, 10, 2.0), Line(100, 10, 2.0), shift).s;
  out->Require(disjoint == 1.0, "disjoint similarity");
  out->Require(interleaved < 0.9, "interleaved similarity");
  out->detail << " closed form worst error " << worst << ", RANSAC " << successes
              << "/50, s(disjoint)=" << disjoint << ", s(interleaved)=" << interleaved;
}

void PoseGraph(Outcome* out) {
  double worst_ratio = 0.0;
  bool decreasing = true;
  for (int seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(300 + seed);
    const testing::RingProblem p = testing::MakeRing(&rng, 0.05, 1.0);
    PoseGraphReport report;
    const auto poses = OptimizeClusterPoses(p.graph, PoseGraphOptions{}, &report);
    decreasing &= report.cost_history.size() >= 2;
    for (std::size_t k = 1; k < report.cost_history.size(); ++k) {
      decreasing &= report.cost_history[k] < report.cost_history[k - 1];
    }
    const double baseline = testing::Baseline(p.graph);
    for (int k = 0; k < 6; ++k) {
      worst_ratio = std::max(
          worst_ratio, testing::PoseError(poses.at(k), p.truth[k], baseline) / p.noise_norm);
    }
  }
  out->Require(decreasing, "robust cost not strictly decreasing");
  out->Require(worst_ratio < 3.0, "pose error above 3x noise");
  out->detail << " 10 rings with one gross outlier, worst pose error "
              << worst_ratio << "x injected noise";
}

Eigen::Vector2d Residual(const CameraPose& pose, const Intrinsics& k,
                         const Eigen::Vector3d& point, const Eigen::Vector2d& pixel) {
  return k.Project(pose.ToCamera(point)) - pixel;
}

void BundleAdjustment(Outcome* out) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Intrinsics k = testing::DefaultIntrinsics();
  const double h = 1e-6;
  double worst_fd = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Vector3d center(u(rng) * 3, u(rng) * 3, u(rng) * 3 - 10);
    const Eigen::Vector3d target(u(rng), u(rng), u(rng));
    CameraPose pose = testing::LookAt(center, target);
    pose.rotation = SO3Exp(0.1 * testing::RandomUnitVector(&rng)) * pose.rotation;
    const Eigen::Vector3d point = target + Eigen::Vector3d(u(rng), u(rng), u(rng));
    const Eigen::Vector2d pixel(u(rng) * 100 + 500, u(rng) * 100 + 400);
    Eigen::Vector2d residual;
    CameraJacobian jc;
    PointJacobian jp;
    if (!LinearizeObservation(pose, k, point, pixel, &residual, &jc, &jp)) {
      out->Require(false, "linearization rejected a valid configuration");
      continue;
    }
    const double scale = std::max(1.0, std::max(jc.cwiseAbs().maxCoeff(), jp.cwiseAbs().maxCoeff()));
    for (int d = 0; d < 3; ++d) {
      const Eigen::Vector3d e = Eigen::Vector3d::Unit(d) * h;
      CameraPose plus = pose, minus = pose;
      plus.rotation = SO3Exp(e) * pose.rotation;
      minus.rotation = SO3Exp(-e) * pose.rotation;
      const Eigen::Vector2d fd_rot =
          (Residual(plus, k, point, pixel) - Residual(minus, k, point, pixel)) / (2 * h);
      plus = pose;
      minus = pose;
      plus.center += e;
      minus.center -= e;
      const Eigen::Vector2d fd_center =
          (Residual(plus, k, point, pixel) - Residual(minus, k, point, pixel)) / (2 * h);
      const Eigen::Vector2d fd_point =
          (Residual(pose, k, point + e, pixel) - Residual(pose, k, point - e, pixel)) / (2 * h);
      worst_fd = std::max({worst_fd, (fd_rot - jc.col(d)).norm() / scale,
                           (fd_center - jc.col(3 + d)).norm() / scale,
                           (fd_point - jp.col(d)).norm() / scale});
    }
  }
  out->Require(worst_fd < 1e-5, "Jacobian mismatch");

  bool monotone = true;
  double worst_reduction = 1.0;
  for (int seed = 0; seed < 5; ++seed) {
    std::mt19937_64 scene_rng(400 + seed);
    const testing::SyntheticScene scene =
        testing::MakeSyntheticScene(scene_rng, testing::SceneOptions{});
    LocalReconstruction recon = testing::TruthReconstruction(scene);
    std::normal_distribution<double> n(0.0, 1.0);
    for (auto& [view, pose] : recon.poses) {
      if (view < 2) continue;
      pose.rotation = SO3Exp(DegToRad(1.0) * testing::RandomUnitVector(&scene_rng)) * pose.rotation;
      pose.center += 0.05 * Eigen::Vector3d(n(scene_rng), n(scene_rng), n(scene_rng));
    }
    for (Track& track : recon.tracks) {
      *track.point += 0.05 * Eigen::Vector3d(n(scene_rng), n(scene_rng), n(scene_rng));
    }
    const BundleAdjustmentReport report =
        BundleAdjust(scene.graph, BundleScope::Full(), BundleAdjustmentOptions{}, &recon);
    for (std::size_t i = 1; i < report.cost_history.size(); ++i) {
      monotone &= report.cost_history[i] <= report.cost_history[i - 1];
    }
    worst_reduction = std::min(worst_reduction, 1.0 - report.final_cost / report.initial_cost);
  }
  out->Require(monotone, "cost increased on an accepted step");
  out->Require(worst_reduction > 0.999, "cost reduction");
  out->detail << " worst relative Jacobian error " << worst_fd
              << " over 20 configurations, worst cost reduction "
              << 100.0 * worst_reduction << "%";
}

void ClusteringEquivalence(Outcome* out) {
  std::mt19937_64 rng(31);
  int mismatches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    ViewGraph graph(16);
    Partition partition = ClusterFull(graph);
    bool equal = true;
    for (const auto& step : testing::RandomInsertionSequence(&rng, 30)) {
      const view_t v = testing::ApplyStep(step, &graph);
      partition = ClusterIncremental(partition, graph, v).first;
      equal &= partition.Groups() == ClusterFull(graph).Groups();
    }
    mismatches += !equal;
  }
  out->Require(mismatches == 0, "partition mismatch");
  out->detail << " " << 100 - mismatches << "/100 sequences identical at every step";
}

std::string Slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void Determinism(Outcome* out) {
  const auto root = std::filesystem::temp_directory_path() / "psfm_acceptance_determinism";
  std::filesystem::remove_all(root);
  const std::vector<std::pair<std::string, ScenarioConfig>> scenarios = {
      {"shuffled", TempleScenario(OrderingKind::kShuffled, 1)},
      {"periodic", TempleScenario(OrderingKind::kPeriodic, 0)}};
  for (const auto& [name, base] : scenarios) {
    std::string files[2];
    for (int run = 0; run < 2; ++run) {
      ScenarioConfig config = base;
      config.output_dir = root / (name + std::to_string(run));
      config.snapshot_every = 1000;
      RunScenario(config, true);
      files[run] = Slurp(config.output_dir / "metrics.csv");
    }
    out->Require(!files[0].empty() && files[0] == files[1], name + " metrics.csv differs");
    out->detail << " " << name << ": " << files[0].size() << " bytes"
                << (files[0] == files[1] ? " identical;" : " differ;");
  }
  std::filesystem::remove_all(root);
}

}  // namespace
}  // namespace psfm

int main(int, char** argv) {
  google::InitGoogleLogging(argv[0]);
  const std::vector<std::pair<const char*, std::function<void(psfm::Outcome*)>>> criteria = {
      {"order robustness", psfm::OrderRobustness},
      {"adversarial recovery", psfm::AdversarialRecovery},
      {"rotation averaging", psfm::RotationAveraging},
      {"sim3 estimation", psfm::Sim3Estimation},
      {"pose graph", psfm::PoseGraph},
      {"bundle adjustment", psfm::BundleAdjustment},
      {"clustering equivalence", psfm::ClusteringEquivalence},
      {"determinism", psfm::Determinism}};
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    psfm::Outcome outcome;
    try {
      criteria[i].second(&outcome);
    } catch (const std::exception& e) {
      outcome.Require(false, std::string("exception: ") + e.what());
    }
    failures += !outcome.pass;
    std::printf("%s %zu %s:%s\n", outcome.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                outcome.detail.str().c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
