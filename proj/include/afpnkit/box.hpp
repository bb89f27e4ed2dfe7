#pragma once

#include <array>
#include <vector>

namespace afpnkit {

/// Axis-aligned box in center form: (x, y) center, (w, h) extents, all in
/// pixels, w > 0 and h > 0. Corner form is derived on demand.
struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 1.0;
  double h = 1.0;

  double x_min() const { return x - w / 2.0; }
  double y_min() const { return y - h / 2.0; }
  double x_max() const { return x + w / 2.0; }
  double y_max() const { return y + h / 2.0; }
  double area() const { return w * h; }

  static BBox from_corners(double x0, double y0, double x1, double y1) {
    return {(x0 + x1) / 2.0, (y0 + y1) / 2.0, x1 - x0, y1 - y0};
  }
};

struct Detection {
  BBox box;
  int class_id = 0;
  double score = 0.0;
};

/// Intersection over union; 0 when disjoint.
double iou(const BBox& a, const BBox& b);

/// 1 - IoU + |C - union| / |C| with C the minimal enclosing box.
double giou_loss(const BBox& pred, const BBox& gt);

/// Every intermediate of the complete-IoU loss:
///   v = (4/pi^2) (arctan(wg/hg) - arctan(w/h))^2
///   alpha = v / ((1 - IoU) + v), defined as 0 when IoU = 1 and v = 0
///   penalty = rho^2 / c^2 + alpha * v
///   loss = 1 - IoU + penalty
struct CIoUBreakdown {
  double iou = 0.0;
  double rho2 = 0.0;   // squared center distance
  double c2 = 0.0;     // squared enclosing-box diagonal
  double v = 0.0;      // aspect-consistency term
  double alpha = 0.0;  // trade-off parameter
  double penalty = 0.0;
  double loss = 0.0;
};

CIoUBreakdown ciou_terms(const BBox& pred, const BBox& gt);

/// Analytic gradient of the CIoU loss with respect to pred's (x, y, w, h),
/// gt held fixed. alpha is treated as a constant of the evaluation point,
/// matching the reference CIoU training convention. Only meaningful at
/// differentiable configurations (no exactly touching or aligned edges).
std::array<double, 4> ciou_grad(const BBox& pred, const BBox& gt);

enum class NmsMode { Greedy, Weighted };

/// Per-class non-maximum suppression. Greedy keeps the highest-scoring box
/// of each overlap cluster. Weighted additionally replaces each kept box's
/// coordinates with the score-weighted mean over the boxes it suppressed
/// plus itself; the score is unchanged.
std::vector<Detection> nms(const std::vector<Detection>& dets,
                           double iou_threshold, NmsMode mode);

}  // namespace afpnkit
