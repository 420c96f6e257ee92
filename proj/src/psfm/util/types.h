#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <utility>

namespace psfm {

// Dense identifiers, assigned in arrival / creation order.
using view_t = std::uint32_t;
using cluster_t = std::uint32_t;
using point2D_t = std::uint32_t;

inline constexpr view_t kInvalidViewId = std::numeric_limits<view_t>::max();
inline constexpr cluster_t kInvalidClusterId =
    std::numeric_limits<cluster_t>::max();

// Unordered view pair stored with first < second.
struct ViewPair {
  view_t first = kInvalidViewId;
  view_t second = kInvalidViewId;

  ViewPair() = default;
  ViewPair(view_t a, view_t b)
      : first(a < b ? a : b), second(a < b ? b : a) {}

  auto operator<=>(const ViewPair&) const = default;
};

struct ViewPairHash {
  std::size_t operator()(const ViewPair& pair) const noexcept {
    return std::hash<std::uint64_t>{}(
        (static_cast<std::uint64_t>(pair.first) << 32) | pair.second);
  }
};

}  // namespace psfm
