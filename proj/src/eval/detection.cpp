#include "copercept/eval/detection.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "copercept/core/error.hpp"

namespace copercept {

namespace {

double cross(const Eigen::Vector2d& a, const Eigen::Vector2d& b) { return a.x() * b.y() - a.y() * b.x(); }

// Detections sorted by descending score, stable on input order.
std::vector<std::size_t> score_order(const std::vector<Detection>& dets) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });
  return order;
}

// true-positive flag per detection, in score order, plus the consumed ground truths.
std::vector<bool> greedy_match(const std::vector<Detection>& dets, const std::vector<BevBox>& gts, double threshold,
                               std::vector<bool>& used) {
  used.assign(gts.size(), false);
  std::vector<bool> tp;
  for (std::size_t i : score_order(dets)) {
    double best = -1.0;
    std::size_t best_j = gts.size();
    for (std::size_t j = 0; j < gts.size(); ++j) {
      if (used[j]) continue;
      const double iou = bev_iou(dets[i].box, gts[j]);
      if (iou > best) {
        best = iou;
        best_j = j;
      }
    }
    const bool hit = best_j < gts.size() && best >= threshold;
    if (hit) used[best_j] = true;
    tp.push_back(hit);
  }
  return tp;
}

}  // namespace

std::vector<Eigen::Vector2d> BevBox::corners() const {
  const double r = yaw_deg * std::numbers::pi / 180.0;
  const Eigen::Vector2d u(std::cos(r), std::sin(r)), v(-std::sin(r), std::cos(r));
  const Eigen::Vector2d c(x, y);
  const double hl = 0.5 * length, hw = 0.5 * width;
  return {c - hl * u - hw * v, c + hl * u - hw * v, c + hl * u + hw * v, c - hl * u + hw * v};
}

void Detection::validate() const {
  if (!(box.length > 0.0) || !(box.width > 0.0)) throw ParameterError("detection box must have positive size");
  if (!(score >= 0.0 && score <= 1.0)) throw ParameterError("detection score outside [0, 1]");
}

std::vector<Detection> decode_detections(const BevFeature& b, const Heatmap& hm, const DecodeOptions& opt) {
  if (hm.height() != b.height() || hm.width() != b.width()) {
    throw ShapeError("decode_detections: heatmap " + std::to_string(hm.height()) + "x" + std::to_string(hm.width()) +
                     " does not match plane " + std::to_string(b.height()) + "x" + std::to_string(b.width()));
  }
  const int H = hm.height(), W = hm.width();
  struct Peak {
    float heat;
    int index;
  };
  std::vector<Peak> peaks;
  for (int h = 0; h < H; ++h) {
    for (int w = 0; w < W; ++w) {
      const float v = hm(h, w);
      if (!(v > opt.threshold)) continue;
      bool peak = true;
      for (int dh = -1; dh <= 1 && peak && opt.nms; ++dh) {
        for (int dw = -1; dw <= 1; ++dw) {
          const int nh = h + dh, nw = w + dw;
          if ((dh == 0 && dw == 0) || nh < 0 || nh >= H || nw < 0 || nw >= W) continue;
          const float n = hm(nh, nw);
          const bool earlier = nh * W + nw < h * W + w;
          if (n > v || (n == v && earlier)) {
            peak = false;
            break;
          }
        }
      }
      if (peak) peaks.push_back({v, h * W + w});
    }
  }
  std::stable_sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& c) { return a.heat > c.heat; });

  std::vector<Detection> out;
  for (const Peak& p : peaks) {
    const Eigen::Vector2d c = cell_center(b.shape(), p.index / W, p.index % W);
    out.push_back({BevBox{c.x(), c.y(), opt.length, opt.width, 0.0}, std::clamp<double>(p.heat, 0.0, 1.0)});
  }
  return out;
}

std::vector<Eigen::Vector2d> clip_convex(const std::vector<Eigen::Vector2d>& subject,
                                         const std::vector<Eigen::Vector2d>& clip) {
  std::vector<Eigen::Vector2d> out = subject;
  for (std::size_t i = 0; i < clip.size() && !out.empty(); ++i) {
    const Eigen::Vector2d a = clip[i], b = clip[(i + 1) % clip.size()];
    const Eigen::Vector2d edge = b - a;
    const std::vector<Eigen::Vector2d> in = std::move(out);
    out.clear();
    for (std::size_t j = 0; j < in.size(); ++j) {
      const Eigen::Vector2d p = in[j], q = in[(j + 1) % in.size()];
      const double sp = cross(edge, p - a), sq = cross(edge, q - a);
      if (sp >= 0.0) out.push_back(p);
      if ((sp >= 0.0) != (sq >= 0.0)) out.push_back(p + (q - p) * (sp / (sp - sq)));
    }
  }
  return out;
}

double polygon_area(const std::vector<Eigen::Vector2d>& poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) a += cross(poly[i], poly[(i + 1) % poly.size()]);
  return 0.5 * std::abs(a);
}

double bev_iou(const BevBox& a, const BevBox& b) {
  if (!(a.area() > 0.0) || !(b.area() > 0.0)) return 0.0;
  const double dx = a.x - b.x, dy = a.y - b.y;
  const double reach = 0.5 * (std::hypot(a.length, a.width) + std::hypot(b.length, b.width));
  if (dx * dx + dy * dy > reach * reach) return 0.0;
  const double inter = polygon_area(clip_convex(a.corners(), b.corners()));
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? std::clamp(inter / uni, 0.0, 1.0) : 0.0;
}

double average_precision(const std::vector<Detection>& dets, const std::vector<BevBox>& gts, double iou_threshold) {
  if (gts.empty()) return dets.empty() ? 1.0 : 0.0;
  std::vector<bool> used;
  const std::vector<bool> tp = greedy_match(dets, gts, iou_threshold, used);

  std::vector<double> prec, rec;
  double hits = 0.0;
  for (std::size_t i = 0; i < tp.size(); ++i) {
    hits += tp[i] ? 1.0 : 0.0;
    prec.push_back(hits / double(i + 1));
    rec.push_back(hits / double(gts.size()));
  }
  // Precision envelope from the right, then area over recall steps.
  for (std::size_t i = prec.size(); i-- > 1;) prec[i - 1] = std::max(prec[i - 1], prec[i]);
  double ap = 0.0, prev_recall = 0.0;
  for (std::size_t i = 0; i < prec.size(); ++i) {
    ap += (rec[i] - prev_recall) * prec[i];
    prev_recall = rec[i];
  }
  return ap;
}

std::vector<bool> matched_ground_truth(const std::vector<Detection>& dets, const std::vector<BevBox>& gts,
                                       double iou_threshold) {
  std::vector<bool> used;
  greedy_match(dets, gts, iou_threshold, used);
  return used;
}

double recall(const std::vector<Detection>& dets, const std::vector<BevBox>& gts, double iou_threshold) {
  if (gts.empty()) return 1.0;
  const std::vector<bool> used = matched_ground_truth(dets, gts, iou_threshold);
  return double(std::count(used.begin(), used.end(), true)) / double(gts.size());
}

}  // namespace copercept
