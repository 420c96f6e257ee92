#include "psfm/simulator/stream.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include <Eigen/Geometry>

#include "psfm/geometry/so3.h"
#include "psfm/util/error.h"

namespace psfm {
namespace {

std::mt19937_64 MakeRng(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)};
  return std::mt19937_64(seq);
}

Eigen::Vector3d Gaussian3(std::mt19937_64* rng, double sigma) {
  std::normal_distribution<double> n(0.0, sigma);
  return {n(*rng), n(*rng), n(*rng)};
}

RelativeGeometry Perturb(RelativeGeometry g, const NoiseModel& noise,
                         std::mt19937_64* rng) {
  g.rotation = SO3Exp(Gaussian3(rng, DegToRad(noise.rotation_deg))) * g.rotation;
  g.translation_direction =
      (SO3Exp(Gaussian3(rng, DegToRad(noise.direction_deg))) *
       g.translation_direction)
          .normalized();
  return g;
}

struct Candidate {
  view_t prior;
  double score;
  int shared;
  int symmetric;
  int steps;
};

nlohmann::json Vec(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }

}  // namespace

std::string ToString(OrderingKind kind) {
  switch (kind) {
    case OrderingKind::kLinear:
      return "linear";
    case OrderingKind::kShuffled:
      return "shuffled";
    case OrderingKind::kPeriodic:
      return "periodic";
  }
  return "linear";
}

OrderingKind OrderingKindFromString(const std::string& name) {
  if (name == "linear") return OrderingKind::kLinear;
  if (name == "shuffled") return OrderingKind::kShuffled;
  if (name == "periodic") return OrderingKind::kPeriodic;
  throw InvalidArgument("unknown ordering '" + name + "'");
}

std::vector<int> MakeOrdering(int num_cameras, const Ordering& ordering) {
  std::vector<int> order(num_cameras);
  std::iota(order.begin(), order.end(), 0);
  switch (ordering.kind) {
    case OrderingKind::kLinear:
      break;
    case OrderingKind::kShuffled: {
      std::mt19937_64 rng(ordering.seed);
      // Fisher-Yates with an explicit draw so the permutation does not
      // depend on the standard library's shuffle.
      for (int k = num_cameras - 1; k > 0; --k) {
        const int j = static_cast<int>(rng() % static_cast<std::uint64_t>(k + 1));
        std::swap(order[k], order[j]);
      }
      break;
    }
    case OrderingKind::kPeriodic: {
      if (ordering.period < 1) {
        throw InvalidArgument("periodic ordering needs period >= 1");
      }
      order.clear();
      const int block = 2 * ordering.period;
      for (int start = 0; start < num_cameras; start += block) {
        for (int k = 0; k < ordering.period; ++k) {
          for (const int c : {start + k, start + ordering.period + k}) {
            if (c < num_cameras) order.push_back(c);
          }
        }
      }
      break;
    }
  }
  return order;
}

std::vector<std::vector<Eigen::Vector2d>> MakeKeypoints(const Scene& scene,
                                                        double pixel_sigma,
                                                        std::uint64_t seed) {
  std::vector<std::vector<Eigen::Vector2d>> keypoints(scene.cameras.size());
  for (std::size_t i = 0; i < scene.cameras.size(); ++i) {
    std::mt19937_64 rng = MakeRng(seed, 0x6b70, i);
    std::normal_distribution<double> n(0.0, 1.0);
    for (const int p : scene.visibility[i]) {
      const auto px = ProjectPoint(scene.cameras[i], scene.intrinsics[i],
                                   scene.points[p]);
      keypoints[i].push_back(*px + pixel_sigma * Eigen::Vector2d(n(rng), n(rng)));
    }
  }
  return keypoints;
}

std::vector<MatchEvent> GenerateStream(const Scene& scene,
                                       const StreamOptions& options) {
  const int n = scene.NumCameras();
  const std::vector<int> order = MakeOrdering(n, options.ordering);
  const auto keypoints = MakeKeypoints(scene, options.noise.pixel, options.seed);
  // keypoint index of each point per camera, -1 when not visible.
  std::vector<std::vector<int>> slot(n, std::vector<int>(scene.points.size(), -1));
  for (int i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < scene.visibility[i].size(); ++k) {
      slot[i][scene.visibility[i][k]] = static_cast<int>(k);
    }
  }
  const bool symmetric = scene.symmetry.has_value() && options.confusion_rate > 0.0;

  std::vector<MatchEvent> events;
  for (std::size_t t = 0; t < order.size(); ++t) {
    const int cv = order[t];
    MatchEvent event;
    event.view = static_cast<view_t>(t);
    event.camera = cv;
    event.intrinsics = scene.intrinsics[cv];
    event.keypoints = keypoints[cv];

    std::vector<Candidate> candidates;
    for (std::size_t u = 0; u < t; ++u) {
      const int cu = order[u];
      Candidate c{static_cast<view_t>(u), 0.0, 0, 0, 0};
      for (const int p : scene.visibility[cu]) c.shared += slot[cv][p] >= 0;
      if (symmetric) {
        for (int s = 0; s < 2; ++s) {
          int count = 0;
          for (const int p : scene.visibility[cu]) {
            const int q = scene.partner[s][p];
            count += q >= 0 && slot[cv][q] >= 0;
          }
          if (count > c.symmetric) {
            c.symmetric = count;
            c.steps = s == 0 ? 1 : -1;
          }
        }
      }
      c.score = std::max<double>(c.shared, options.confusion_rate * c.symmetric);
      if (c.score >= options.min_correspondences) candidates.push_back(c);
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) {
                       return a.score > b.score;
                     });
    if (static_cast<int>(candidates.size()) > options.retrieval_top_k) {
      candidates.resize(options.retrieval_top_k);
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const Candidate& a, const Candidate& b) { return a.prior < b.prior; });

    for (const Candidate& c : candidates) {
      const int cu = order[c.prior];
      std::mt19937_64 rng = MakeRng(options.seed, std::min(cu, cv) * 131071 + std::max(cu, cv), 0xed9e);
      EventEdge edge;
      edge.other = c.prior;
      if (c.shared >= options.confusion_rate * c.symmetric) {
        edge.label = EdgeLabel::kGenuine;
        for (const int p : scene.visibility[cu]) {
          if (slot[cv][p] >= 0) {
            edge.matches.push_back({static_cast<point2D_t>(slot[cu][p]),
                                    static_cast<point2D_t>(slot[cv][p])});
          }
        }
        edge.geometry = Perturb(
            RelativeGeometryFromPoses(scene.cameras[cu], scene.cameras[cv]),
            options.noise, &rng);
      } else {
        edge.label = EdgeLabel::kSymmetryConfusion;
        const int s = c.steps == 1 ? 0 : 1;
        for (const int p : scene.visibility[cu]) {
          const int q = scene.partner[s][p];
          if (q >= 0 && slot[cv][q] >= 0) {
            edge.matches.push_back({static_cast<point2D_t>(slot[cu][p]),
                                    static_cast<point2D_t>(slot[cv][q])});
          }
        }
        std::shuffle(edge.matches.begin(), edge.matches.end(), rng);
        edge.matches.resize(static_cast<std::size_t>(
            std::lround(options.confusion_rate * c.symmetric)));
        std::sort(edge.matches.begin(), edge.matches.end(),
                  [](const FeatureMatch& a, const FeatureMatch& b) {
                    return a.point2D_idx1 < b.point2D_idx1;
                  });
        // The arriving camera seen as if the structure were rotated back by
        // one symmetry step.
        const Eigen::Matrix3d sym = scene.SymmetryRotation(c.steps);
        const CameraPose virtual_camera{scene.cameras[cv].rotation * sym,
                                        sym.transpose() * scene.cameras[cv].center};
        edge.geometry = Perturb(
            RelativeGeometryFromPoses(scene.cameras[cu], virtual_camera),
            options.noise, &rng);
      }
      if (edge.matches.size() < options.min_correspondences) continue;
      edge.geometry.inlier_count = static_cast<std::uint32_t>(edge.matches.size());
      event.edges.push_back(std::move(edge));
    }
    events.push_back(std::move(event));
  }
  return events;
}

nlohmann::json StreamToJson(const std::vector<MatchEvent>& events) {
  nlohmann::json j = nlohmann::json::array();
  for (const MatchEvent& e : events) {
    nlohmann::json ev;
    ev["view"] = e.view;
    ev["camera"] = e.camera;
    ev["intrinsics"] = {{"fx", e.intrinsics.fx}, {"fy", e.intrinsics.fy},
                        {"cx", e.intrinsics.cx}, {"cy", e.intrinsics.cy},
                        {"width", e.intrinsics.width},
                        {"height", e.intrinsics.height}};
    auto& kps = ev["keypoints"] = nlohmann::json::array();
    for (const Eigen::Vector2d& k : e.keypoints) kps.push_back({k.x(), k.y()});
    auto& edges = ev["edges"] = nlohmann::json::array();
    for (const EventEdge& edge : e.edges) {
      const Eigen::Quaterniond q(edge.geometry.rotation);
      nlohmann::json matches = nlohmann::json::array();
      for (const FeatureMatch& m : edge.matches) {
        matches.push_back({m.point2D_idx1, m.point2D_idx2});
      }
      edges.push_back(
          {{"other", edge.other},
           {"quaternion_wxyz", {q.w(), q.x(), q.y(), q.z()}},
           {"direction", Vec(edge.geometry.translation_direction)},
           {"inliers", edge.geometry.inlier_count},
           {"label", edge.label == EdgeLabel::kGenuine ? "genuine"
                                                       : "symmetry_confusion"},
           {"matches", matches}});
    }
    j.push_back(ev);
  }
  return j;
}

std::vector<MatchEvent> StreamFromJson(const nlohmann::json& json) {
  std::vector<MatchEvent> events;
  for (const auto& ev : json) {
    MatchEvent e;
    e.view = ev.at("view").get<view_t>();
    e.camera = ev.value("camera", -1);
    const auto& k = ev.at("intrinsics");
    e.intrinsics = {k.at("fx").get<double>(), k.at("fy").get<double>(),
                    k.at("cx").get<double>(), k.at("cy").get<double>(),
                    k.value("width", 0), k.value("height", 0)};
    for (const auto& kp : ev.at("keypoints")) {
      e.keypoints.emplace_back(kp.at(0).get<double>(), kp.at(1).get<double>());
    }
    for (const auto& ej : ev.at("edges")) {
      EventEdge edge;
      edge.other = ej.at("other").get<view_t>();
      const auto& qj = ej.at("quaternion_wxyz");
      const Eigen::Quaterniond q(qj.at(0).get<double>(), qj.at(1).get<double>(),
                                 qj.at(2).get<double>(), qj.at(3).get<double>());
      edge.geometry.rotation = q.normalized().toRotationMatrix();
      const auto& d = ej.at("direction");
      edge.geometry.translation_direction =
          Eigen::Vector3d(d.at(0).get<double>(), d.at(1).get<double>(),
                          d.at(2).get<double>())
              .normalized();
      edge.geometry.inlier_count = ej.at("inliers").get<std::uint32_t>();
      edge.label = ej.value("label", "genuine") == "genuine"
                       ? EdgeLabel::kGenuine
                       : EdgeLabel::kSymmetryConfusion;
      for (const auto& m : ej.at("matches")) {
        edge.matches.push_back({m.at(0).get<point2D_t>(), m.at(1).get<point2D_t>()});
      }
      e.edges.push_back(std::move(edge));
    }
    events.push_back(std::move(e));
  }
  return events;
}

}  // namespace psfm
