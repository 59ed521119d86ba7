#include "copercept/core/pose.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace copercept {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

}  // namespace

double normalize_degrees(double deg) {
  double r = std::fmod(deg + 180.0, 360.0);
  if (r < 0.0) r += 360.0;
  r -= 180.0;
  // fmod can land exactly on the open end after the shift.
  if (r >= 180.0) r -= 360.0;
  return r;
}

Pose Pose::normalized() const {
  Pose p = *this;
  p.yaw = normalize_degrees(yaw);
  p.pitch = normalize_degrees(pitch);
  p.roll = normalize_degrees(roll);
  return p;
}

Eigen::Isometry3d Pose::isometry() const {
  Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
  t.translation() = Eigen::Vector3d(x, y, z);
  if (yaw == 0.0 && pitch == 0.0 && roll == 0.0) return t;
  t.linear() = (Eigen::AngleAxisd(yaw * kDegToRad, Eigen::Vector3d::UnitZ()) *
                Eigen::AngleAxisd(pitch * kDegToRad, Eigen::Vector3d::UnitY()) *
                Eigen::AngleAxisd(roll * kDegToRad, Eigen::Vector3d::UnitX()))
                   .toRotationMatrix();
  return t;
}

Pose Pose::from_isometry(const Eigen::Isometry3d& t) {
  const Eigen::Matrix3d& r = t.linear();
  Pose p;
  p.x = t.translation().x();
  p.y = t.translation().y();
  p.z = t.translation().z();
  p.yaw = std::atan2(r(1, 0), r(0, 0)) / kDegToRad;
  p.pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0)) / kDegToRad;
  p.roll = std::atan2(r(2, 1), r(2, 2)) / kDegToRad;
  return p.normalized();
}

Pose relative_pose(const Pose& source, const Pose& target) {
  return Pose::from_isometry(target.isometry().inverse() * source.isometry());
}

}  // namespace copercept
