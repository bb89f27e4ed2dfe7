#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "afpnkit/box.hpp"

namespace afpnkit {

struct GroundTruth {
  BBox box;
  int class_id = 0;
  int image_id = 0;
};

/// A detection tagged with the image it came from, the unit the evaluation
/// protocol works on (box.hpp's Detection is the per-image NMS record).
struct DetectionRecord {
  BBox box;
  int class_id = 0;
  int image_id = 0;
  double score = 0.0;
};

/// Greedy matching: detections are grouped by (image_id, class_id) and
/// visited in descending score order (ties keep input order); each claims
/// the not-yet-matched ground truth of its group with the highest IoU >=
/// iou_thr (IoU ties go to the lowest ground-truth index). Returns, per
/// detection in input order, the matched index into `gts` or -1 (FP).
std::vector<int> match_detections(const std::vector<DetectionRecord>& dets,
                                  const std::vector<GroundTruth>& gts,
                                  double iou_thr);

struct ScoredFlag {
  double score = 0.0;
  bool tp = false;
};

/// All-point interpolated AP: sort by descending score (stable), build the
/// cumulative precision/recall curve, take the area under its
/// monotonically decreasing precision envelope. Returns 0 when n_gt == 0
/// or nothing was detected.
double average_precision(std::vector<ScoredFlag> flags, int n_gt);

/// Per-class AP at the given IoU threshold for every class with at least
/// one ground truth (other classes are not reported).
std::map<int, double> per_class_ap(const std::vector<DetectionRecord>& dets,
                                   const std::vector<GroundTruth>& gts,
                                   double iou_thr);

/// Mean of per_class_ap values; 0 when no class has ground truth.
double mean_ap(const std::vector<DetectionRecord>& dets,
               const std::vector<GroundTruth>& gts, double iou_thr);

struct SizeBucketedAp {
  std::optional<double> ap_small;
  std::optional<double> ap_medium;
  std::optional<double> ap_large;
};

/// AP restricted by ground-truth area: small < t1, medium in [t1, t2),
/// large >= t2. Matching runs once globally; a detection matched to an
/// out-of-bucket ground truth is ignored for that bucket while unmatched
/// detections count FP in every bucket. Buckets with no ground truth
/// anywhere are absent. Per class, then averaged like mean_ap.
SizeBucketedAp size_bucketed_ap(const std::vector<DetectionRecord>& dets,
                                const std::vector<GroundTruth>& gts,
                                double iou_thr, double t1 = 32.0 * 32.0,
                                double t2 = 96.0 * 96.0);

/// Log-average miss rate: sweep score thresholds (every tie-closed prefix
/// of the descending-score order, including the empty one), record (FPPI,
/// miss rate) pairs, then at each of 9 log-spaced FPPI reference points in
/// [1e-2, 1] take the miss rate of the largest achieved FPPI <= the
/// point. Result is exp(mean of ln(max(mr, 1e-10))). Absent when `gts` is
/// empty. n_images must cover images with no detections, it normalizes
/// FPPI.
std::optional<double> lamr(const std::vector<DetectionRecord>& dets,
                           const std::vector<GroundTruth>& gts, int n_images,
                           double iou_thr);

struct FpsReport {
  double fps = 0.0;
  double p50_ms = 0.0;  // median per-iteration latency
};

/// Times `work`: `warmup` unmeasured calls, then `iters` measured on a
/// monotonic clock. FPS = iters / total elapsed seconds. Throws
/// std::invalid_argument on iters < 1 or warmup < 0 and std::runtime_error
/// when the elapsed time is not positive.
FpsReport fps_benchmark(const std::function<void()>& work, int warmup,
                        int iters);

struct ClassMetrics {
  double ap = 0.0;
  std::optional<double> lamr;
};

struct EvalReport {
  std::map<std::string, ClassMetrics> per_class;  // keyed by class name
  double map50 = 0.0;
  std::optional<double> ap_s;
  std::optional<double> ap_m;
  std::optional<double> ap_l;
  std::optional<double> fps;
  std::string config_echo;  // JSON text echoed into the report; "" -> {}
};

/// Full evaluation pipeline over one detection/ground-truth set.
/// class_names maps class_id -> reported name; every ground-truth class id
/// must be present in it.
EvalReport evaluate_detections(const std::vector<DetectionRecord>& dets,
                               const std::vector<GroundTruth>& gts,
                               const std::map<int, std::string>& class_names,
                               int n_images, double iou_thr = 0.5,
                               double t1 = 32.0 * 32.0,
                               double t2 = 96.0 * 96.0);

/// {per_class: {name: {ap, lamr}}, map50, ap_s, ap_m, ap_l, fps,
/// config_echo}; absent optionals serialize as null.
std::string eval_report_to_json_text(const EvalReport& report);

}  // namespace afpnkit
