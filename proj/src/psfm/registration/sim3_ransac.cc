#include "psfm/registration/sim3_ransac.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>

#include "psfm/util/error.h"

namespace psfm {
namespace {

std::size_t Score(const Sim3& transform, std::span<const Eigen::Vector3d> src,
                  std::span<const Eigen::Vector3d> dst, double threshold,
                  std::vector<char>* mask) {
  std::size_t count = 0;
  mask->assign(src.size(), 0);
  for (std::size_t k = 0; k < src.size(); ++k) {
    if ((transform * src[k] - dst[k]).norm() < threshold) {
      (*mask)[k] = 1;
      ++count;
    }
  }
  return count;
}

std::optional<Sim3> Fit(std::span<const Eigen::Vector3d> src,
                        std::span<const Eigen::Vector3d> dst,
                        const std::vector<char>& mask) {
  std::vector<Eigen::Vector3d> a, b;
  for (std::size_t k = 0; k < src.size(); ++k) {
    if (mask[k]) {
      a.push_back(src[k]);
      b.push_back(dst[k]);
    }
  }
  try {
    return EstimateSim3ClosedForm(a, b);
  } catch (const DegenerateInput&) {
    return std::nullopt;
  }
}

}  // namespace

Sim3RansacResult RansacSim3(std::span<const Eigen::Vector3d> src,
                            std::span<const Eigen::Vector3d> dst,
                            const Sim3RansacOptions& options,
                            std::mt19937_64* rng) {
  if (src.size() != dst.size()) {
    throw InvalidArgument("RansacSim3: size mismatch");
  }
  const std::size_t n = src.size();
  if (n < 3) {
    throw InvalidArgument("RansacSim3: needs at least three pairs");
  }
  Sim3RansacResult best;
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<char> mask;
  double max_iterations = options.max_iterations;
  for (int iteration = 0; iteration < max_iterations; ++iteration) {
    const std::size_t a = pick(*rng);
    const std::size_t b = pick(*rng);
    const std::size_t c = pick(*rng);
    if (a == b || b == c || a == c) continue;
    Sim3 hypothesis;
    try {
      hypothesis = EstimateSim3ClosedForm(
          std::array<Eigen::Vector3d, 3>{src[a], src[b], src[c]},
          std::array<Eigen::Vector3d, 3>{dst[a], dst[b], dst[c]});
    } catch (const DegenerateInput&) {
      continue;
    }
    const std::size_t count =
        Score(hypothesis, src, dst, options.inlier_threshold, &mask);
    if (count > best.num_inliers) {
      best.transform = hypothesis;
      best.num_inliers = count;
      best.inlier_mask = mask;
      const double w = static_cast<double>(count) / static_cast<double>(n);
      const double fail = 1.0 - w * w * w;
      max_iterations =
          fail <= 0.0
              ? 0.0
              : std::min<double>(options.max_iterations,
                                 std::ceil(std::log(1.0 - options.confidence) /
                                           std::log(fail)));
    }
  }
  if (best.num_inliers < 3) {
    best.success = false;
    return best;
  }
  // Refit on inliers while the consensus does not shrink.
  for (int round = 0; round < 3; ++round) {
    const auto refit = Fit(src, dst, best.inlier_mask);
    if (!refit) break;
    const std::size_t count =
        Score(*refit, src, dst, options.inlier_threshold, &mask);
    if (count < best.num_inliers) break;
    const bool same = mask == best.inlier_mask;
    best.transform = *refit;
    best.num_inliers = count;
    best.inlier_mask = mask;
    if (same) break;
  }
  best.success = true;
  return best;
}

double BoundingBoxDiagonal(std::span<const Eigen::Vector3d> points) {
  if (points.empty()) {
    return 0.0;
  }
  Eigen::Vector3d lo = points.front();
  Eigen::Vector3d hi = points.front();
  for (const Eigen::Vector3d& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return (hi - lo).norm();
}

}  // namespace psfm
