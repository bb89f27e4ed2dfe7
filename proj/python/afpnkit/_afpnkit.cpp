#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <array>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "afpnkit/annotations.hpp"
#include "afpnkit/augment.hpp"
#include "afpnkit/box.hpp"
#include "afpnkit/metrics.hpp"
#include "afpnkit/neck.hpp"
#include "afpnkit/search.hpp"

namespace py = pybind11;
using namespace afpnkit;

namespace {

using Box4 = std::array<double, 4>;  // center form (x, y, w, h)

BBox unpack(const Box4& b) { return {b[0], b[1], b[2], b[3]}; }
Box4 pack(const BBox& b) { return {b.x, b.y, b.w, b.h}; }

py::dict terms_dict(const CIoUBreakdown& t) {
  py::dict d;
  d["iou"] = t.iou;
  d["rho2"] = t.rho2;
  d["c2"] = t.c2;
  d["v"] = t.v;
  d["alpha"] = t.alpha;
  d["penalty"] = t.penalty;
  d["loss"] = t.loss;
  return d;
}

std::string eval_report_json(const std::string& annotations_path,
                             const std::string& detections_path,
                             double iou_thr, double t1, double t2) {
  const AnnotationSet anns = load_annotations(annotations_path);
  const auto dets = load_detections(detections_path, anns);
  std::map<int, std::string> names;
  for (std::size_t i = 0; i < anns.categories.size(); ++i)
    names[int(i)] = anns.categories[i];
  EvalReport rep = evaluate_detections(dets, anns.ground_truths, names,
                                       int(anns.images.size()), iou_thr, t1, t2);
  rep.config_echo = "{\"iou_thr\": " + std::to_string(iou_thr) + "}";
  return eval_report_to_json_text(rep);
}

}  // namespace

PYBIND11_MODULE(_afpnkit, m) {
  m.doc() = "Multi-scale detection toolkit: box losses, pyramid arithmetic, "
            "augmentation policies and evaluation metrics";

  m.def("box_from_corners",
        [](double x0, double y0, double x1, double y1) {
          return pack(BBox::from_corners(x0, y0, x1, y1));
        },
        py::arg("x_min"), py::arg("y_min"), py::arg("x_max"), py::arg("y_max"),
        "Corner form to center form (x, y, w, h)");

  m.def("iou", [](const Box4& a, const Box4& b) { return iou(unpack(a), unpack(b)); },
        py::arg("a"), py::arg("b"), "Intersection over union of center-form boxes");

  m.def("giou_loss",
        [](const Box4& p, const Box4& g) { return giou_loss(unpack(p), unpack(g)); },
        py::arg("pred"), py::arg("gt"));

  m.def("ciou_terms",
        [](const Box4& p, const Box4& g) {
          return terms_dict(ciou_terms(unpack(p), unpack(g)));
        },
        py::arg("pred"), py::arg("gt"),
        "All intermediates of the complete-IoU loss as a dict");

  m.def("ciou_loss",
        [](const Box4& p, const Box4& g) {
          return ciou_terms(unpack(p), unpack(g)).loss;
        },
        py::arg("pred"), py::arg("gt"));

  m.def("ciou_grad",
        [](const Box4& p, const Box4& g) { return ciou_grad(unpack(p), unpack(g)); },
        py::arg("pred"), py::arg("gt"),
        "d loss / d (x, y, w, h) of pred, trade-off term frozen");

  m.def("nms",
        [](const std::vector<std::tuple<Box4, int, double>>& dets,
           double iou_threshold, bool weighted) {
          std::vector<Detection> in;
          for (const auto& [b, c, s] : dets) in.push_back({unpack(b), c, s});
          const auto kept =
              nms(in, iou_threshold, weighted ? NmsMode::Weighted : NmsMode::Greedy);
          std::vector<std::tuple<Box4, int, double>> out;
          for (const auto& d : kept)
            out.emplace_back(pack(d.box), d.class_id, d.score);
          return out;
        },
        py::arg("detections"), py::arg("iou_threshold") = 0.5,
        py::arg("weighted") = false,
        "Per-class suppression over (box, class_id, score) tuples");

  m.def("effective_receptive_field", &effective_receptive_field,
        py::arg("kernel"), py::arg("dilation"),
        py::arg("r_prev") = std::nullopt);

  m.def("search_space_size", &search_space_size, py::arg("n_ops"),
        py::arg("d_levels"), py::arg("p_levels"), py::arg("n_subs"),
        "Exact policy-space cardinality as a decimal string");

  m.def("kind_names", [] {
    std::vector<std::string> names;
    for (int k = 0; k < kNumAugKinds; ++k)
      names.push_back(kind_name(static_cast<AugKind>(k)));
    return names;
  });

  m.def("op_magnitude",
        [](const std::string& kind, int mag_level) {
          return op_magnitude(kind_from_name(kind), mag_level);
        },
        py::arg("kind"), py::arg("mag_level"));

  m.def("canonical_policy_json",
        [](const std::string& text) {
          return policy_to_json_text(policy_from_json_text(text));
        },
        py::arg("text"), "Parse, validate and re-serialize a policy document");

  m.def("average_precision",
        [](const std::vector<std::pair<double, bool>>& flags, int n_gt) {
          std::vector<ScoredFlag> f;
          for (const auto& [s, tp] : flags) f.push_back({s, tp});
          return average_precision(f, n_gt);
        },
        py::arg("scored_flags"), py::arg("n_gt"),
        "All-point interpolated AP over (score, is_true_positive) pairs");

  m.def("eval_report_json", &eval_report_json, py::arg("annotations_path"),
        py::arg("detections_path"), py::arg("iou_thr") = 0.5,
        py::arg("t1") = 32.0 * 32.0, py::arg("t2") = 96.0 * 96.0,
        "Full detection evaluation of two interchange files, as JSON text");
}
