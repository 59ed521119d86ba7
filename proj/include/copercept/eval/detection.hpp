#pragma once

#include <vector>

#include <Eigen/Core>

#include "copercept/collab/collab.hpp"
#include "copercept/core/grid.hpp"

namespace copercept {

/// Rotated rectangle on the ground plane. yaw in degrees, length along the heading.
struct BevBox {
  double x = 0.0;
  double y = 0.0;
  double length = 4.5;
  double width = 2.0;
  double yaw_deg = 0.0;

  double area() const { return length * width; }
  /// Corners in counter-clockwise order.
  std::vector<Eigen::Vector2d> corners() const;
};

struct Detection {
  BevBox box;
  double score = 0.0;

  void validate() const;
};

struct DecodeOptions {
  double threshold = 0.5;
  bool nms = true;  // keep only 3x3 local maxima
  double length = 4.5;
  double width = 2.0;
};

/// One canonical box per heatmap peak, at the peak cell centre with yaw 0 and score = heat.
/// A peak beats a neighbour of equal value when it comes first in row-major order.
/// Output is ordered by descending score, then row-major cell.
std::vector<Detection> decode_detections(const BevFeature& b, const Heatmap& hm, const DecodeOptions& opt = {});

/// Intersection of two convex polygons (Sutherland-Hodgman), counter-clockwise input.
std::vector<Eigen::Vector2d> clip_convex(const std::vector<Eigen::Vector2d>& subject,
                                         const std::vector<Eigen::Vector2d>& clip);

double polygon_area(const std::vector<Eigen::Vector2d>& poly);

/// Intersection over union of two rotated rectangles; 0 when either has no area.
double bev_iou(const BevBox& a, const BevBox& b);

/// Greedy matching in descending score (ties keep input order), each ground truth consumed once
/// at IoU >= threshold; area under the all-point interpolated precision-recall curve.
double average_precision(const std::vector<Detection>& dets, const std::vector<BevBox>& gts, double iou_threshold);

/// Fraction of `gts` matched by some detection at IoU >= threshold (greedy, descending score).
double recall(const std::vector<Detection>& dets, const std::vector<BevBox>& gts, double iou_threshold);

/// Per ground truth: whether the greedy matching consumed it.
std::vector<bool> matched_ground_truth(const std::vector<Detection>& dets, const std::vector<BevBox>& gts,
                                       double iou_threshold);

}  // namespace copercept
