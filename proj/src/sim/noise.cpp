#include "copercept/sim/noise.hpp"

#include <cmath>
#include <random>

#include "copercept/core/error.hpp"

namespace copercept {

void NoiseSpec::validate() const {
  if (!(sigma_p >= 0.0) || !(sigma_r >= 0.0) || !std::isfinite(sigma_p) || !std::isfinite(sigma_r)) {
    throw ParameterError("noise sigmas must be finite and >= 0");
  }
}

Pose perturb_pose(const Pose& p, const NoiseSpec& spec, std::uint64_t stream) {
  spec.validate();
  if (spec.sigma_p == 0.0 && spec.sigma_r == 0.0) return p;
  std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> n01(0.0, 1.0);
  const double zx = n01(rng), zy = n01(rng), zr = n01(rng);
  Pose out = p;
  out.x += spec.sigma_p * zx;
  out.y += spec.sigma_p * zy;
  out.yaw = normalize_degrees(p.yaw + spec.sigma_r * zr);
  return out;
}

}  // namespace copercept
