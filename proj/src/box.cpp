#include "afpnkit/box.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace afpnkit {

namespace {

double overlap_1d(double lo_a, double hi_a, double lo_b, double hi_b) {
  return std::min(hi_a, hi_b) - std::max(lo_a, lo_b);
}

}  // namespace

double iou(const BBox& a, const BBox& b) {
  const double ow = overlap_1d(a.x_min(), a.x_max(), b.x_min(), b.x_max());
  if (ow <= 0.0) return 0.0;
  const double oh = overlap_1d(a.y_min(), a.y_max(), b.y_min(), b.y_max());
  if (oh <= 0.0) return 0.0;
  const double inter = ow * oh;
  return inter / (a.area() + b.area() - inter);
}

double giou_loss(const BBox& pred, const BBox& gt) {
  const double ow = std::max(0.0, overlap_1d(pred.x_min(), pred.x_max(),
                                             gt.x_min(), gt.x_max()));
  const double oh = std::max(0.0, overlap_1d(pred.y_min(), pred.y_max(),
                                             gt.y_min(), gt.y_max()));
  const double inter = ow * oh;
  const double uni = pred.area() + gt.area() - inter;
  const double cw = std::max(pred.x_max(), gt.x_max()) -
                    std::min(pred.x_min(), gt.x_min());
  const double ch = std::max(pred.y_max(), gt.y_max()) -
                    std::min(pred.y_min(), gt.y_min());
  const double c_area = cw * ch;
  return 1.0 - inter / uni + (c_area - uni) / c_area;
}

CIoUBreakdown ciou_terms(const BBox& pred, const BBox& gt) {
  CIoUBreakdown t;
  t.iou = iou(pred, gt);
  t.rho2 = (pred.x - gt.x) * (pred.x - gt.x) +
           (pred.y - gt.y) * (pred.y - gt.y);
  const double cw = std::max(pred.x_max(), gt.x_max()) -
                    std::min(pred.x_min(), gt.x_min());
  const double ch = std::max(pred.y_max(), gt.y_max()) -
                    std::min(pred.y_min(), gt.y_min());
  t.c2 = cw * cw + ch * ch;

  const double q = std::atan(gt.w / gt.h) - std::atan(pred.w / pred.h);
  constexpr double four_over_pi2 = 4.0 / (std::numbers::pi * std::numbers::pi);
  t.v = four_over_pi2 * q * q;

  const double denom = (1.0 - t.iou) + t.v;
  t.alpha = denom > 0.0 ? t.v / denom : 0.0;  // 0 at the IoU=1, v=0 point

  t.penalty = (t.c2 > 0.0 ? t.rho2 / t.c2 : 0.0) + t.alpha * t.v;
  t.loss = 1.0 - t.iou + t.penalty;
  return t;
}

std::array<double, 4> ciou_grad(const BBox& pred, const BBox& gt) {
  const double pl = pred.x_min(), pr = pred.x_max();
  const double pt = pred.y_min(), pb = pred.y_max();
  const double gl = gt.x_min(), gr = gt.x_max();
  const double gtop = gt.y_min(), gbot = gt.y_max();

  // Active-edge indicators for the min/max selections.
  const double right_pred = pr < gr ? 1.0 : 0.0;  // overlap right edge is pred's
  const double left_pred = pl > gl ? 1.0 : 0.0;
  const double bot_pred = pb < gbot ? 1.0 : 0.0;
  const double top_pred = pt > gtop ? 1.0 : 0.0;

  const double ow = std::min(pr, gr) - std::max(pl, gl);
  const double oh = std::min(pb, gbot) - std::max(pt, gtop);
  const bool overlapping = ow > 0.0 && oh > 0.0;
  const double inter = overlapping ? ow * oh : 0.0;
  const double uni = pred.area() + gt.area() - inter;

  double dI[4] = {0, 0, 0, 0};  // d inter / d(x, y, w, h)
  if (overlapping) {
    const double dow_dx = right_pred - left_pred;
    const double dow_dw = 0.5 * (right_pred + left_pred);
    const double doh_dy = bot_pred - top_pred;
    const double doh_dh = 0.5 * (bot_pred + top_pred);
    dI[0] = oh * dow_dx;
    dI[1] = ow * doh_dy;
    dI[2] = oh * dow_dw;
    dI[3] = ow * doh_dh;
  }
  const double dU[4] = {-dI[0], -dI[1], pred.h - dI[2], pred.w - dI[3]};

  double dIoU[4];
  for (int i = 0; i < 4; ++i) {
    dIoU[i] = (dI[i] * uni - inter * dU[i]) / (uni * uni);
  }

  // Enclosing-box diagonal.
  const double cw = std::max(pr, gr) - std::min(pl, gl);
  const double ch = std::max(pb, gbot) - std::min(pt, gtop);
  const double c2 = cw * cw + ch * ch;
  const double rho2 = (pred.x - gt.x) * (pred.x - gt.x) +
                      (pred.y - gt.y) * (pred.y - gt.y);

  const double encl_right = pr > gr ? 1.0 : 0.0;  // enclosing edge is pred's
  const double encl_left = pl < gl ? 1.0 : 0.0;
  const double encl_bot = pb > gbot ? 1.0 : 0.0;
  const double encl_top = pt < gtop ? 1.0 : 0.0;

  const double dcw[4] = {encl_right - encl_left, 0.0,
                         0.5 * (encl_right + encl_left), 0.0};
  const double dch[4] = {0.0, encl_bot - encl_top, 0.0,
                         0.5 * (encl_bot + encl_top)};
  const double drho2[4] = {2.0 * (pred.x - gt.x), 2.0 * (pred.y - gt.y), 0.0,
                           0.0};

  double dDist[4];  // d(rho^2 / c^2)
  for (int i = 0; i < 4; ++i) {
    const double dc2 = 2.0 * cw * dcw[i] + 2.0 * ch * dch[i];
    dDist[i] = (drho2[i] * c2 - rho2 * dc2) / (c2 * c2);
  }

  // Aspect term; alpha is frozen at the evaluation point.
  const double q = std::atan(gt.w / gt.h) - std::atan(pred.w / pred.h);
  constexpr double pi2 = std::numbers::pi * std::numbers::pi;
  const double iou_val = inter / uni;
  const double v = (4.0 / pi2) * q * q;
  const double alpha_denom = (1.0 - iou_val) + v;
  const double alpha = alpha_denom > 0.0 ? v / alpha_denom : 0.0;
  const double wh2 = pred.w * pred.w + pred.h * pred.h;
  const double dv_dw = -(8.0 / pi2) * q * (pred.h / wh2);
  const double dv_dh = (8.0 / pi2) * q * (pred.w / wh2);

  return {
      -dIoU[0] + dDist[0],
      -dIoU[1] + dDist[1],
      -dIoU[2] + dDist[2] + alpha * dv_dw,
      -dIoU[3] + dDist[3] + alpha * dv_dh,
  };
}

std::vector<Detection> nms(const std::vector<Detection>& dets,
                           double iou_threshold, NmsMode mode) {
  if (iou_threshold <= 0.0 || iou_threshold >= 1.0) {
    throw std::invalid_argument("nms threshold must be in (0, 1)");
  }

  // Score-descending processing order per class; ties keep input order.
  std::vector<int> order(dets.size());
  for (std::size_t i = 0; i < dets.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return dets[a].score > dets[b].score;
  });

  std::vector<char> suppressed(dets.size(), 0);
  std::vector<char> kept(dets.size(), 0);
  std::vector<BBox> merged(dets.size());

  for (std::size_t oi = 0; oi < order.size(); ++oi) {
    const int i = order[oi];
    if (suppressed[i]) continue;
    kept[i] = 1;

    double wsum = dets[i].score;
    double xs = dets[i].score * dets[i].box.x;
    double ys = dets[i].score * dets[i].box.y;
    double ws = dets[i].score * dets[i].box.w;
    double hs = dets[i].score * dets[i].box.h;

    for (std::size_t oj = oi + 1; oj < order.size(); ++oj) {
      const int j = order[oj];
      if (suppressed[j] || dets[j].class_id != dets[i].class_id) continue;
      if (iou(dets[i].box, dets[j].box) > iou_threshold) {
        suppressed[j] = 1;
        wsum += dets[j].score;
        xs += dets[j].score * dets[j].box.x;
        ys += dets[j].score * dets[j].box.y;
        ws += dets[j].score * dets[j].box.w;
        hs += dets[j].score * dets[j].box.h;
      }
    }
    merged[i] = wsum > 0.0
                    ? BBox{xs / wsum, ys / wsum, ws / wsum, hs / wsum}
                    : dets[i].box;
  }

  // Emit in input order so greedy output is a subsequence of the input.
  std::vector<Detection> out;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (!kept[i]) continue;
    Detection d = dets[i];
    if (mode == NmsMode::Weighted) d.box = merged[i];
    out.push_back(d);
  }
  return out;
}

}  // namespace afpnkit
