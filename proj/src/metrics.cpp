#include "afpnkit/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "json.hpp"

namespace afpnkit {

std::vector<int> match_detections(const std::vector<DetectionRecord>& dets,
                                  const std::vector<GroundTruth>& gts,
                                  double iou_thr) {
  std::map<std::pair<int, int>, std::vector<std::size_t>> det_groups;
  std::map<std::pair<int, int>, std::vector<std::size_t>> gt_groups;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    det_groups[{dets[i].image_id, dets[i].class_id}].push_back(i);
  }
  for (std::size_t i = 0; i < gts.size(); ++i) {
    gt_groups[{gts[i].image_id, gts[i].class_id}].push_back(i);
  }

  std::vector<int> matched(dets.size(), -1);
  for (auto& [key, det_idx] : det_groups) {
    std::stable_sort(det_idx.begin(), det_idx.end(),
                     [&](std::size_t a, std::size_t b) {
                       return dets[a].score > dets[b].score;
                     });
    auto git = gt_groups.find(key);
    if (git == gt_groups.end()) continue;
    const auto& gt_idx = git->second;
    std::vector<bool> taken(gt_idx.size(), false);
    for (std::size_t di : det_idx) {
      double best = iou_thr;
      int arg = -1;
      for (std::size_t g = 0; g < gt_idx.size(); ++g) {
        if (taken[g]) continue;
        const double v = iou(dets[di].box, gts[gt_idx[g]].box);
        if (v > best || (arg < 0 && v == best)) {
          best = v;
          arg = static_cast<int>(g);
        }
      }
      if (arg >= 0) {
        taken[arg] = true;
        matched[di] = static_cast<int>(gt_idx[arg]);
      }
    }
  }
  return matched;
}

double average_precision(std::vector<ScoredFlag> flags, int n_gt) {
  if (n_gt < 0) throw std::invalid_argument("n_gt must be >= 0");
  if (n_gt == 0 || flags.empty()) return 0.0;
  std::stable_sort(flags.begin(), flags.end(),
                   [](const ScoredFlag& a, const ScoredFlag& b) {
                     return a.score > b.score;
                   });
  // Points of the PR curve at each rank, then the running-max precision
  // envelope integrated from the right.
  std::vector<double> recall(flags.size()), precision(flags.size());
  int tp = 0;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    tp += flags[i].tp ? 1 : 0;
    recall[i] = static_cast<double>(tp) / n_gt;
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
  }
  double ap = 0.0, env = 0.0;
  for (std::size_t i = flags.size(); i-- > 0;) {
    env = std::max(env, precision[i]);
    const double r_prev = i > 0 ? recall[i - 1] : 0.0;
    if (recall[i] > r_prev) ap += (recall[i] - r_prev) * env;
  }
  return ap;
}

namespace {

std::map<int, int> gt_counts(const std::vector<GroundTruth>& gts) {
  std::map<int, int> n;
  for (const auto& g : gts) ++n[g.class_id];
  return n;
}

}  // namespace

std::map<int, double> per_class_ap(const std::vector<DetectionRecord>& dets,
                                   const std::vector<GroundTruth>& gts,
                                   double iou_thr) {
  const auto matched = match_detections(dets, gts, iou_thr);
  std::map<int, std::vector<ScoredFlag>> flags;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    flags[dets[i].class_id].push_back({dets[i].score, matched[i] >= 0});
  }
  std::map<int, double> ap;
  for (const auto& [cls, n] : gt_counts(gts)) {
    auto it = flags.find(cls);
    ap[cls] = average_precision(it == flags.end() ? std::vector<ScoredFlag>{}
                                                  : it->second,
                                n);
  }
  return ap;
}

double mean_ap(const std::vector<DetectionRecord>& dets,
               const std::vector<GroundTruth>& gts, double iou_thr) {
  const auto ap = per_class_ap(dets, gts, iou_thr);
  if (ap.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& [cls, v] : ap) sum += v;
  return sum / static_cast<double>(ap.size());
}

SizeBucketedAp size_bucketed_ap(const std::vector<DetectionRecord>& dets,
                                const std::vector<GroundTruth>& gts,
                                double iou_thr, double t1, double t2) {
  if (!(t1 > 0.0 && t1 < t2)) {
    throw std::invalid_argument("size buckets need 0 < t1 < t2");
  }
  const auto matched = match_detections(dets, gts, iou_thr);
  auto bucket_of = [&](double area) { return area < t1 ? 0 : area < t2 ? 1 : 2; };

  SizeBucketedAp out;
  for (int b = 0; b < 3; ++b) {
    // Per class: flags keep in-bucket matches (TP) and unmatched
    // detections (FP); matches into other buckets are ignored.
    std::map<int, int> n_gt;
    for (const auto& g : gts) {
      if (bucket_of(g.box.area()) == b) ++n_gt[g.class_id];
    }
    if (n_gt.empty()) continue;
    std::map<int, std::vector<ScoredFlag>> flags;
    for (std::size_t i = 0; i < dets.size(); ++i) {
      if (matched[i] >= 0) {
        if (bucket_of(gts[matched[i]].box.area()) == b) {
          flags[dets[i].class_id].push_back({dets[i].score, true});
        }
      } else {
        flags[dets[i].class_id].push_back({dets[i].score, false});
      }
    }
    double sum = 0.0;
    for (const auto& [cls, n] : n_gt) {
      auto it = flags.find(cls);
      sum += average_precision(
          it == flags.end() ? std::vector<ScoredFlag>{} : it->second, n);
    }
    const double ap = sum / static_cast<double>(n_gt.size());
    (b == 0 ? out.ap_small : b == 1 ? out.ap_medium : out.ap_large) = ap;
  }
  return out;
}

std::optional<double> lamr(const std::vector<DetectionRecord>& dets,
                           const std::vector<GroundTruth>& gts, int n_images,
                           double iou_thr) {
  if (n_images < 1) throw std::invalid_argument("lamr needs >= 1 image");
  if (gts.empty()) return std::nullopt;

  // Greedy matching is prefix-stable in score order: the match of a
  // detection depends only on strictly earlier ones in its group, so
  // thresholding equals truncating the globally sorted list at tie-closed
  // prefixes. One full match therefore yields every sweep point.
  const auto matched = match_detections(dets, gts, iou_thr);
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dets[a].score > dets[b].score;
  });

  const double n_gt = static_cast<double>(gts.size());
  std::vector<std::pair<double, double>> points;  // (fppi, miss rate)
  points.emplace_back(0.0, 1.0);                  // empty prefix
  int tp = 0, fp = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    (matched[order[k]] >= 0 ? tp : fp) += 1;
    const bool tie_open = k + 1 < order.size() &&
                          dets[order[k + 1]].score == dets[order[k]].score;
    if (tie_open) continue;
    points.emplace_back(static_cast<double>(fp) / n_images, 1.0 - tp / n_gt);
  }

  double log_sum = 0.0;
  for (int i = 0; i < 9; ++i) {
    const double ref = std::pow(10.0, -2.0 + i * 0.25);
    double mr = 1.0;
    double best_fppi = -1.0;
    for (const auto& [fppi, m] : points) {
      if (fppi <= ref && fppi >= best_fppi) {  // ties: later prefix wins
        best_fppi = fppi;
        mr = m;
      }
    }
    log_sum += std::log(std::max(mr, 1e-10));
  }
  return std::exp(log_sum / 9.0);
}

FpsReport fps_benchmark(const std::function<void()>& work, int warmup,
                        int iters) {
  if (iters < 1) throw std::invalid_argument("fps_benchmark needs iters >= 1");
  if (warmup < 0) throw std::invalid_argument("warmup must be >= 0");
  using clock = std::chrono::steady_clock;
  for (int i = 0; i < warmup; ++i) work();

  std::vector<double> per_iter_ms(iters);
  const auto t0 = clock::now();
  for (int i = 0; i < iters; ++i) {
    const auto a = clock::now();
    work();
    const auto b = clock::now();
    per_iter_ms[i] = std::chrono::duration<double, std::milli>(b - a).count();
  }
  const double elapsed = std::chrono::duration<double>(clock::now() - t0).count();
  if (!(elapsed > 0.0)) {
    throw std::runtime_error("benchmark clock reported non-positive elapsed time");
  }
  std::sort(per_iter_ms.begin(), per_iter_ms.end());
  FpsReport out;
  out.fps = iters / elapsed;
  out.p50_ms = iters % 2 == 1 ? per_iter_ms[iters / 2]
                              : 0.5 * (per_iter_ms[iters / 2 - 1] +
                                       per_iter_ms[iters / 2]);
  return out;
}

EvalReport evaluate_detections(const std::vector<DetectionRecord>& dets,
                               const std::vector<GroundTruth>& gts,
                               const std::map<int, std::string>& class_names,
                               int n_images, double iou_thr, double t1,
                               double t2) {
  EvalReport report;
  const auto ap = per_class_ap(dets, gts, iou_thr);
  for (const auto& [cls, v] : ap) {
    auto it = class_names.find(cls);
    if (it == class_names.end()) {
      throw std::invalid_argument("no class name registered for id " +
                                  std::to_string(cls));
    }
    std::vector<DetectionRecord> cd;
    std::vector<GroundTruth> cg;
    for (const auto& d : dets)
      if (d.class_id == cls) cd.push_back(d);
    for (const auto& g : gts)
      if (g.class_id == cls) cg.push_back(g);
    report.per_class[it->second] = {v, lamr(cd, cg, n_images, iou_thr)};
  }
  report.map50 = mean_ap(dets, gts, iou_thr);
  const auto buckets = size_bucketed_ap(dets, gts, iou_thr, t1, t2);
  report.ap_s = buckets.ap_small;
  report.ap_m = buckets.ap_medium;
  report.ap_l = buckets.ap_large;
  return report;
}

std::string eval_report_to_json_text(const EvalReport& report) {
  nlohmann::json doc;
  auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json();
  };
  doc["per_class"] = nlohmann::json::object();
  for (const auto& [name, m] : report.per_class) {
    doc["per_class"][name] = {{"ap", m.ap}, {"lamr", opt(m.lamr)}};
  }
  doc["map50"] = report.map50;
  doc["ap_s"] = opt(report.ap_s);
  doc["ap_m"] = opt(report.ap_m);
  doc["ap_l"] = opt(report.ap_l);
  doc["fps"] = opt(report.fps);
  doc["config_echo"] = report.config_echo.empty()
                           ? nlohmann::json::object()
                           : nlohmann::json::parse(report.config_echo);
  return doc.dump(2) + "\n";
}

}  // namespace afpnkit
