#pragma once

#include <cstdint>

#include "copercept/core/pose.hpp"

namespace copercept {

/// Gaussian pose noise: sigma_p metres on x and y, sigma_r degrees on yaw.
struct NoiseSpec {
  double sigma_p = 0.0;
  double sigma_r = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const NoiseSpec&) const = default;
};

/// Adds N(0, sigma^2) noise to x, y and yaw. The standard-normal draws depend only on
/// (spec.seed, stream), so the same stream at larger sigmas is a scaled copy.
Pose perturb_pose(const Pose& p, const NoiseSpec& spec, std::uint64_t stream = 0);

}  // namespace copercept
