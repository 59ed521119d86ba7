#pragma once

#include <Eigen/Geometry>

namespace copercept {

/// Wraps an angle in degrees into [-180, 180).
double normalize_degrees(double deg);

/// Rigid pose; translation in metres, Z-Y-X Euler angles in degrees.
struct Pose {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double yaw = 0.0;
  double pitch = 0.0;
  double roll = 0.0;

  Pose normalized() const;

  /// Maps points from this pose's local frame into the parent frame.
  Eigen::Isometry3d isometry() const;

  static Pose from_isometry(const Eigen::Isometry3d& t);

  bool operator==(const Pose&) const = default;
};

/// Pose of `source` expressed in the frame of `target` (both given in world).
Pose relative_pose(const Pose& source, const Pose& target);

}  // namespace copercept
