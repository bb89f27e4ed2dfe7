// afpnkit command-line harness.
//
// Exit codes: 0 success, 1 invariant/tolerance failure, 2 input or
// configuration error. All JSON artifacts are written atomically
// (temp + rename) and every command is deterministic per --seed.
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "afpnkit/annotations.hpp"
#include "afpnkit/augment.hpp"
#include "afpnkit/box.hpp"
#include "afpnkit/image_io.hpp"
#include "afpnkit/metrics.hpp"
#include "afpnkit/neck.hpp"
#include "afpnkit/search.hpp"
#include "afpnkit/tensor.hpp"
#include "afpnkit/weights.hpp"

namespace fs = std::filesystem;
using namespace afpnkit;

namespace {

// Harness defaults favor quick verification runs: a thin 4-channel
// pyramid instead of the full-scale 256-channel one (reachable through
// --config), so every command finishes in seconds on one core.
struct RunConfig {
  std::uint64_t seed = 0;
  int resize = 608;
  double iou_thr = 0.5;
  double bucket_t1 = 32.0 * 32.0;
  double bucket_t2 = 96.0 * 96.0;
  NeckConfig neck;

  RunConfig() {
    neck.in_channels = {3, 4, 5, 6};
    neck.width = 4;
    neck.aam.mid_channels = 4;
  }
};

RunConfig load_run_config(const std::string& path) {
  RunConfig rc;
  if (path.empty()) return rc;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  const auto doc = nlohmann::json::parse(in);
  if (doc.contains("seed")) rc.seed = doc["seed"].get<std::uint64_t>();
  if (doc.contains("resize")) rc.resize = doc["resize"].get<int>();
  if (doc.contains("iou_thr")) rc.iou_thr = doc["iou_thr"].get<double>();
  if (doc.contains("bucket_t1")) rc.bucket_t1 = doc["bucket_t1"].get<double>();
  if (doc.contains("bucket_t2")) rc.bucket_t2 = doc["bucket_t2"].get<double>();
  if (doc.contains("neck")) {
    const auto& n = doc["neck"];
    if (n.contains("in_channels")) {
      const auto v = n["in_channels"].get<std::vector<int>>();
      if (v.size() != 4) {
        throw std::runtime_error("neck.in_channels must list 4 values");
      }
      std::copy(v.begin(), v.end(), rc.neck.in_channels.begin());
    }
    if (n.contains("width")) rc.neck.width = n["width"].get<int>();
    if (n.contains("betas")) {
      const auto v = n["betas"].get<std::vector<double>>();
      if (v.size() != 3) throw std::runtime_error("neck.betas must list 3 values");
      std::copy(v.begin(), v.end(), rc.neck.aam.betas.begin());
    }
    if (n.contains("mid_channels")) {
      rc.neck.aam.mid_channels = n["mid_channels"].get<int>();
    }
    if (n.contains("fem")) {
      const auto& f = n["fem"];
      if (f.contains("kernel")) rc.neck.fem.kernel = f["kernel"].get<int>();
      if (f.contains("dilations")) {
        const auto v = f["dilations"].get<std::vector<int>>();
        if (v.size() != 3) {
          throw std::runtime_error("neck.fem.dilations must list 3 values");
        }
        std::copy(v.begin(), v.end(), rc.neck.fem.dilations.begin());
      }
      if (f.contains("mode")) {
        const auto m = f["mode"].get<std::string>();
        if (m == "train") {
          rc.neck.fem.mode = FEMMode::Train;
        } else if (m == "infer") {
          rc.neck.fem.mode = FEMMode::Infer;
        } else {
          throw std::runtime_error("neck.fem.mode must be train or infer");
        }
      }
      if (f.contains("infer_branch")) {
        rc.neck.fem.infer_branch = f["infer_branch"].get<int>();
      }
    }
  }
  rc.neck.validate();
  return rc;
}

nlohmann::json config_echo_json(const RunConfig& rc) {
  nlohmann::json n;
  n["in_channels"] = rc.neck.in_channels;
  n["width"] = rc.neck.width;
  n["betas"] = rc.neck.aam.betas;
  n["mid_channels"] = rc.neck.aam.mid_channels;
  return {{"seed", rc.seed},       {"resize", rc.resize},
          {"iou_thr", rc.iou_thr}, {"bucket_t1", rc.bucket_t1},
          {"bucket_t2", rc.bucket_t2}, {"neck", n}};
}

void write_text_atomic(const std::string& path, const std::string& text) {
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw std::runtime_error("failed writing " + tmp.string());
  }
  fs::rename(tmp, target);
}

void emit_report(const std::string& out_path, const nlohmann::json& doc) {
  const std::string text = doc.dump(2) + "\n";
  std::cout << text;
  if (!out_path.empty()) write_text_atomic(out_path, text);
}

Tensor random_input(int c, int h, int w, Rng& rng) {
  Tensor t(1, c, h, w);
  for (auto& v : t.data()) v = static_cast<float>(rng.uniform());
  return t;
}

// ---- make-weights ---------------------------------------------------

int cmd_make_weights(const RunConfig& rc, const std::string& out,
                     const std::string& init, double scale) {
  const WeightInit wi = init == "zero" ? WeightInit::Zero : WeightInit::Random;
  const WeightStore ws = make_neck_weights(rc.neck, wi, rc.seed, scale);
  // The manifest references its blob by name, so atomicity comes from
  // staging both files in a scratch directory and renaming into place.
  const fs::path target(out);
  const fs::path dir =
      target.has_parent_path() ? target.parent_path() : fs::path(".");
  const fs::path stage = dir / (target.filename().string() + ".stage");
  fs::create_directories(stage);
  const fs::path staged = stage / target.filename();
  ws.save(staged.string());
  fs::rename(staged, target);
  fs::rename(staged.string() + ".bin", target.string() + ".bin");
  fs::remove_all(stage);
  std::cout << "wrote " << out << " (" << ws.count() << " tensors)\n";
  return 0;
}

// ---- neck-check ------------------------------------------------------

int cmd_neck_check(const RunConfig& rc, const std::string& weights_path,
                   const std::string& out_path) {
  if (rc.resize % 32 != 0 || rc.resize < 32) {
    throw std::runtime_error("resize target must be a positive multiple of 32");
  }
  const WeightStore ws = WeightStore::load(weights_path);

  auto run_once = [&]() {
    Rng rng(rc.seed);
    const std::array<int, 4> sizes = {rc.resize / 4, rc.resize / 8,
                                      rc.resize / 16, rc.resize / 32};
    std::array<Tensor, 4> c;
    for (int i = 0; i < 4; ++i) {
      c[i] = random_input(rc.neck.in_channels[i], sizes[i], sizes[i], rng);
    }
    auto p = affpn_forward(c[0], c[1], c[2], c[3], rc.neck, ws);
    return std::make_pair(std::move(c), std::move(p));
  };

  auto [c, p] = run_once();
  auto [c2, p2] = run_once();
  bool deterministic = true;
  for (int i = 0; i < 4; ++i) {
    deterministic = deterministic && p[i].data() == p2[i].data();
  }

  // Recompose M6 from primitives: M5 plus the attention-weighted contexts.
  ConvSpec lateral;
  lateral.kernel = ws.get("lateral.l5.kernel");
  lateral.bias = ws.get_vector("lateral.l5.bias");
  const Tensor m5 = conv2d(c[3], lateral);
  AamTrace trace;
  const Tensor m6 = aam_forward(c[3], m5, rc.neck.aam, ws, "aam", &trace);

  Tensor recomposed = m5;
  for (int i = 0; i < 3; ++i) {
    Tensor a(1, 1, trace.attention.h(), trace.attention.w());
    for (int y = 0; y < a.h(); ++y)
      for (int x = 0; x < a.w(); ++x) a.at(0, 0, y, x) = trace.attention.at(0, i, y, x);
    recomposed = ew_add(recomposed, ew_hadamard(trace.upsampled[i], a));
  }
  double residual = 0.0;
  for (std::size_t i = 0; i < m6.size(); ++i) {
    residual = std::max(
        residual, std::abs(double(m6.data()[i]) - double(recomposed.data()[i])));
  }

  float attn_min = 1.0f, attn_max = 0.0f;
  for (const float v : trace.attention.data()) {
    attn_min = std::min(attn_min, v);
    attn_max = std::max(attn_max, v);
  }

  bool shapes_ok = true;
  nlohmann::json shapes = nlohmann::json::object();
  nlohmann::json ladder = nlohmann::json::array();
  for (int i = 0; i < 4; ++i) {
    const int expect = rc.resize / (4 << i);
    shapes["p" + std::to_string(i + 2)] =
        std::vector<int>{p[i].n(), p[i].c(), p[i].h(), p[i].w()};
    ladder.push_back(p[i].h());
    shapes_ok = shapes_ok && p[i].n() == 1 && p[i].c() == rc.neck.width &&
                p[i].h() == expect && p[i].w() == expect;
  }

  const bool attention_ok = attn_min > 0.0f && attn_max < 1.0f;
  const bool residual_ok = residual <= 1e-6;
  const bool pass = shapes_ok && attention_ok && residual_ok && deterministic;

  nlohmann::json doc;
  doc["input_size"] = rc.resize;
  doc["shapes"] = shapes;
  doc["ladder"] = ladder;
  doc["attention"] = {{"min", attn_min}, {"max", attn_max}};
  doc["composition_residual"] = residual;
  doc["deterministic"] = deterministic;
  doc["pass"] = pass;
  emit_report(out_path, doc);
  return pass ? 0 : 1;
}

// ---- grad-check ------------------------------------------------------

int cmd_grad_check(std::uint64_t seed, int trials, const std::string& out_path) {
  if (trials < 1) throw std::runtime_error("--trials must be >= 1");
  Rng rng(seed);
  const double eps = 1e-5, tolerance = 1e-3;
  int checked = 0;
  double max_rel_err = 0.0;

  for (int t = 0; t < trials; ++t) {
    BBox p{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0),
           rng.uniform(0.2, 3.0), rng.uniform(0.2, 3.0)};
    const BBox g{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0),
                 rng.uniform(0.2, 3.0), rng.uniform(0.2, 3.0)};
    // Skip configurations near the loss's kinks: touching or aligned
    // edges, matched aspect ratios, tiny extents.
    const double margin = 1e-3;
    auto near = [&](double a, double b) { return std::abs(a - b) < margin; };
    if (near(p.x_min(), g.x_min()) || near(p.x_max(), g.x_max()) ||
        near(p.x_min(), g.x_max()) || near(p.x_max(), g.x_min()) ||
        near(p.y_min(), g.y_min()) || near(p.y_max(), g.y_max()) ||
        near(p.y_min(), g.y_max()) || near(p.y_max(), g.y_min())) {
      continue;
    }

    const auto analytic = ciou_grad(p, g);
    const double alpha0 = ciou_terms(p, g).alpha;
    // Finite differences of the loss with the trade-off parameter frozen
    // at its evaluation-point value, matching the analytic convention.
    auto frozen_loss = [&](const BBox& b) {
      const auto t2 = ciou_terms(b, g);
      return 1.0 - t2.iou + t2.rho2 / t2.c2 + alpha0 * t2.v;
    };
    double* fields[4] = {&p.x, &p.y, &p.w, &p.h};
    for (int i = 0; i < 4; ++i) {
      const double orig = *fields[i];
      *fields[i] = orig + eps;
      const double up = frozen_loss(p);
      *fields[i] = orig - eps;
      const double dn = frozen_loss(p);
      *fields[i] = orig;
      const double fd = (up - dn) / (2.0 * eps);
      const double rel = std::abs(analytic[i] - fd) / std::max(1.0, std::abs(fd));
      max_rel_err = std::max(max_rel_err, rel);
    }
    ++checked;
  }

  const bool pass = checked > 0 && max_rel_err <= tolerance;
  nlohmann::json doc;
  doc["trials"] = trials;
  doc["checked"] = checked;
  doc["eps"] = eps;
  doc["max_rel_err"] = max_rel_err;
  doc["tolerance"] = tolerance;
  doc["pass"] = pass;
  emit_report(out_path, doc);
  return pass ? 0 : 1;
}

// ---- aug -------------------------------------------------------------

int cmd_aug(const std::string& annotations_path, const std::string& policy_path,
            const std::string& out_dir, std::uint64_t seed) {
  const AnnotationSet anns = load_annotations(annotations_path);
  const Policy policy = load_policy(policy_path);
  const fs::path base = fs::path(annotations_path).parent_path();

  std::vector<Sample> samples(anns.images.size());
  std::vector<std::string> unreadable;
  for (std::size_t i = 0; i < anns.images.size(); ++i) {
    const auto& img = anns.images[i];
    try {
      samples[i].image = read_ppm((base / img.path).string());
    } catch (const std::exception& ex) {
      unreadable.push_back(img.path);
      continue;
    }
    if (samples[i].image.w() != img.width ||
        samples[i].image.h() != img.height) {
      throw std::runtime_error("image " + img.path +
                               " does not match its declared size");
    }
    for (const auto& g : anns.ground_truths) {
      if (g.image_id == img.image_id) {
        samples[i].boxes.push_back({g.box, g.class_id, 1.0});
      }
    }
  }
  if (!unreadable.empty()) {
    std::ostringstream os;
    os << "cannot read image(s):";
    for (const auto& p : unreadable) os << " " << p;
    throw std::runtime_error(os.str());
  }

  fs::create_directories(out_dir);
  AnnotationSet out = anns;
  out.ground_truths.clear();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& info = anns.images[i];
    Rng rng(seed ^ (0x9e3779b97f4a7c15ULL *
                    (static_cast<std::uint64_t>(info.image_id) + 1)));
    const Sample result = apply_policy(samples[i], policy, rng, &samples);
    write_ppm((fs::path(out_dir) / fs::path(info.path).filename()).string(),
              result.image);
    out.images[i].path = fs::path(info.path).filename().string();
    out.images[i].width = result.image.w();
    out.images[i].height = result.image.h();
    for (const auto& b : result.boxes) {
      // Mixing ops down-weight provenance; only majority-weight boxes
      // survive into the exported annotations.
      if (b.weight >= 0.5) {
        out.ground_truths.push_back({b.box, b.class_id, info.image_id});
      }
    }
  }
  write_text_atomic((fs::path(out_dir) / "annotations.json").string(),
                    annotations_to_json_text(out));
  std::cout << "wrote " << out.images.size() << " images and "
            << out.ground_truths.size() << " boxes to " << out_dir << "\n";
  return 0;
}

// ---- search ----------------------------------------------------------

int cmd_search(const std::string& evaluator_name, const std::string& algo,
               int budget, std::uint64_t seed, const std::string& ckpt_out,
               const std::string& policy_out, const std::string& resume) {
  SearchConfig cfg;
  if (algo == "ppo") {
    cfg.algo = SearchAlgo::Ppo;
  } else if (algo == "random") {
    cfg.algo = SearchAlgo::Random;
  } else {
    throw std::runtime_error("--algo must be ppo or random");
  }
  cfg.budget = budget;
  cfg.seed = seed;

  SearchState st;
  if (resume.empty()) {
    st = make_search_state(cfg);
  } else {
    st = load_checkpoint(resume);
    if (st.algo != cfg.algo) {
      throw std::runtime_error("checkpoint algo does not match --algo");
    }
  }

  RewardEvaluator evaluator;
  if (evaluator_name == "separable") {
    evaluator = synthetic_separable_reward;
  } else if (evaluator_name == "proxy") {
    evaluator = make_proxy_evaluator(st.seed);
  } else {
    throw std::runtime_error("unknown evaluator \"" + evaluator_name +
                             "\" (expected separable or proxy)");
  }

  search_continue(st, evaluator, cfg, budget);
  for (const auto& h : st.history) {
    std::cout << "eval " << h.eval_index << " reward " << h.reward << "\n";
  }
  const SearchResult result = result_from_state(st);
  std::cout << "best_reward " << result.best_reward << "\n";

  const std::string tmp = ckpt_out + ".tmp";
  save_checkpoint(tmp, st);
  fs::rename(tmp, ckpt_out);
  write_text_atomic(policy_out, policy_to_json_text(result.best_policy));
  return 0;
}

// ---- eval ------------------------------------------------------------

int cmd_eval(const RunConfig& rc, const std::string& detections_path,
             const std::string& annotations_path, const std::string& out_path) {
  const AnnotationSet anns = load_annotations(annotations_path);
  const auto dets = load_detections(detections_path, anns);
  if (anns.images.empty()) {
    throw std::runtime_error("annotation set lists no images");
  }
  std::map<int, std::string> names;
  for (std::size_t i = 0; i < anns.categories.size(); ++i) {
    names[static_cast<int>(i)] = anns.categories[i];
  }
  EvalReport report = evaluate_detections(
      dets, anns.ground_truths, names, static_cast<int>(anns.images.size()),
      rc.iou_thr, rc.bucket_t1, rc.bucket_t2);
  nlohmann::json echo = {{"iou_thr", rc.iou_thr},
                         {"bucket_t1", rc.bucket_t1},
                         {"bucket_t2", rc.bucket_t2},
                         {"n_images", anns.images.size()}};
  report.config_echo = echo.dump();
  const std::string text = eval_report_to_json_text(report);
  std::cout << text;
  if (!out_path.empty()) write_text_atomic(out_path, text);
  return 0;
}

// ---- bench -----------------------------------------------------------

int cmd_bench(const RunConfig& rc, const std::string& component,
              std::uint64_t seed, int iters, const std::string& out_path) {
  if (iters < 1) throw std::runtime_error("--trials must be >= 1");
  const int warmup = std::max(1, iters / 10);
  // Bench default: a reduced ladder (resize/8-ish input) so the default
  // invocation stays well under the time budget on one core.
  const int s5 = std::max(2, rc.resize / 256);
  const int s2 = s5 * 8;
  const int base = s2 * 4;

  const WeightStore ws =
      make_neck_weights(rc.neck, WeightInit::Random, seed, 0.05);
  Rng rng(seed);
  std::function<void()> work;
  int input_size = base;

  if (component == "neck") {
    auto c2 = random_input(rc.neck.in_channels[0], s2, s2, rng);
    auto c3 = random_input(rc.neck.in_channels[1], s5 * 4, s5 * 4, rng);
    auto c4 = random_input(rc.neck.in_channels[2], s5 * 2, s5 * 2, rng);
    auto c5 = random_input(rc.neck.in_channels[3], s5, s5, rng);
    work = [=, &rc]() { affpn_forward(c2, c3, c4, c5, rc.neck, ws); };
  } else if (component == "aam") {
    auto c5 = random_input(rc.neck.in_channels[3], s5, s5, rng);
    auto m5 = random_input(rc.neck.width, s5, s5, rng);
    work = [=, &rc]() { aam_forward(c5, m5, rc.neck.aam, ws); };
  } else if (component == "fem") {
    auto x = random_input(rc.neck.width, s2, s2, rng);
    work = [=, &rc]() { fem_forward(x, rc.neck.fem, ws, "fem.l2"); };
  } else if (component == "nms") {
    std::vector<Detection> dets(200);
    for (auto& d : dets) {
      d.box = {rng.uniform(0.0, 10.0), rng.uniform(0.0, 10.0),
               rng.uniform(0.5, 3.0), rng.uniform(0.5, 3.0)};
      d.class_id = static_cast<int>(rng.uniform_int(5));
      d.score = rng.uniform();
    }
    work = [=]() { nms(dets, 0.5, NmsMode::Weighted); };
    input_size = static_cast<int>(dets.size());
  } else if (component == "policy") {
    Sample s;
    s.image = random_input(3, 64, 64, rng);
    s.boxes.push_back({BBox::from_corners(10, 10, 30, 40), 0, 1.0});
    auto pool = std::make_shared<std::vector<Sample>>(4, s);
    Policy policy;
    for (auto& sub : policy.subs)
      for (auto& op : sub.ops) {
        op.prob_level = 9;
        op.mag_level = 5;
      }
    int k = 0;
    for (auto& sub : policy.subs)
      for (auto& op : sub.ops) op.kind = static_cast<AugKind>(k++);
    work = [=]() {
      Rng r(seed);
      apply_policy(s, policy, r, pool.get());
    };
    input_size = 64;
  } else {
    throw std::runtime_error(
        "component must be one of neck, aam, fem, nms, policy");
  }

  const FpsReport fps = fps_benchmark(work, warmup, iters);
  nlohmann::json doc;
  doc["component"] = component;
  doc["input_size"] = input_size;
  doc["warmup"] = warmup;
  doc["iters"] = iters;
  doc["fps"] = fps.fps;
  doc["p50_ms"] = fps.p50_ms;
  emit_report(out_path, doc);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"afpnkit: pyramid neck, box losses, augmentation search and "
               "detection metrics"};
  app.require_subcommand(1);

  std::string config_path, out_path, weights_path, policy_path, resume_path;
  std::string init = "random", algo = "ppo", evaluator, component;
  std::string annotations_path, detections_path, input_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int budget = 300, trials = 200;
  double scale = 0.05;

  auto add_seed = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed, "random seed")
        ->each([&](const std::string&) { seed_set = true; });
  };
  auto add_config = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON run configuration");
  };

  auto* mw = app.add_subcommand("make-weights", "synthesize a neck weight file");
  add_config(mw);
  add_seed(mw);
  mw->add_option("--out", out_path, "weight manifest path")->required();
  mw->add_option("--init", init, "zero or random")
      ->check(CLI::IsMember({"zero", "random"}));
  mw->add_option("--scale", scale, "random init standard deviation");

  auto* nc = app.add_subcommand("neck-check", "verify pyramid invariants");
  add_config(nc);
  add_seed(nc);
  nc->add_option("--weights", weights_path, "weight manifest path")->required();
  nc->add_option("--out", out_path, "report JSON path");

  auto* gc = app.add_subcommand("grad-check",
                                "box-loss analytic vs finite-difference check");
  add_seed(gc);
  gc->add_option("--trials", trials, "random pairs to test");
  gc->add_option("--out", out_path, "report JSON path");

  auto* au = app.add_subcommand("aug", "apply an augmentation policy to a set");
  au->add_option("input", input_path, "annotations JSON (images beside it)")
      ->required();
  au->add_option("--policy", policy_path, "policy JSON path")->required();
  au->add_option("--out", out_path, "output directory")->required();
  add_seed(au);

  auto* se = app.add_subcommand("search", "run augmentation policy search");
  se->add_option("evaluator", evaluator, "reward: separable or proxy")
      ->required();
  se->add_option("--algo", algo, "ppo or random")
      ->check(CLI::IsMember({"ppo", "random"}));
  se->add_option("--budget", budget, "total evaluator calls");
  add_seed(se);
  se->add_option("--out", out_path, "checkpoint JSON path");
  se->add_option("--policy", policy_path, "best policy JSON path");
  se->add_option("--resume", resume_path, "checkpoint to continue from");

  auto* ev = app.add_subcommand("eval", "score detections against annotations");
  ev->add_option("detections", detections_path, "detections JSON")->required();
  ev->add_option("annotations", annotations_path, "annotations JSON")
      ->required();
  add_config(ev);
  ev->add_option("--out", out_path, "report JSON path");

  auto* be = app.add_subcommand("bench", "time one component");
  be->add_option("component", component, "neck, aam, fem, nms or policy")
      ->required();
  add_config(be);
  add_seed(be);
  be->add_option("--trials", trials, "measured iterations");
  be->add_option("--out", out_path, "report JSON path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    RunConfig rc = load_run_config(config_path);
    if (seed_set) rc.seed = seed;

    if (mw->parsed()) return cmd_make_weights(rc, out_path, init, scale);
    if (nc->parsed()) return cmd_neck_check(rc, weights_path, out_path);
    if (gc->parsed()) return cmd_grad_check(rc.seed, trials, out_path);
    if (au->parsed()) return cmd_aug(input_path, policy_path, out_path, rc.seed);
    if (se->parsed()) {
      return cmd_search(evaluator, algo, budget, rc.seed,
                        out_path.empty() ? "checkpoint.json" : out_path,
                        policy_path.empty() ? "best_policy.json" : policy_path,
                        resume_path);
    }
    if (ev->parsed()) return cmd_eval(rc, detections_path, annotations_path, out_path);
    if (be->parsed()) return cmd_bench(rc, component, rc.seed, trials, out_path);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  }
  return 2;  // unreachable: a subcommand is required
}
