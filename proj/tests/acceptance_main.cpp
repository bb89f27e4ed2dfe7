// Acceptance gate: one line per criterion, nonzero exit when any fails.
// Every numeric check is recomputed here against an independent oracle
// (rasterized IoU, zero-inserted kernels, exhaustive threshold sweeps,
// 128-bit power accounting) rather than trusting the library's own tests.

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "afpnkit/annotations.hpp"
#include "afpnkit/augment.hpp"
#include "afpnkit/box.hpp"
#include "afpnkit/metrics.hpp"
#include "afpnkit/neck.hpp"
#include "afpnkit/rng.hpp"
#include "afpnkit/search.hpp"
#include "afpnkit/tensor.hpp"
#include "afpnkit/weights.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace afpnkit;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Check {
  bool ok = true;
  std::vector<std::string> notes;

  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      notes.push_back(what);
    }
  }
};

// ---- criterion 1: loss worked examples + scale invariance -------------

// Counts cell centers of an n x n grid over the joint extent that fall in
// either box; shares no code with the closed-form intersection.
double raster_iou(const BBox& a, const BBox& b, int n = 3000) {
  const double x0 = std::min(a.x_min(), b.x_min());
  const double x1 = std::max(a.x_max(), b.x_max());
  const double y0 = std::min(a.y_min(), b.y_min());
  const double y1 = std::max(a.y_max(), b.y_max());
  auto inside = [](const BBox& box, double x, double y) {
    return x >= box.x_min() && x <= box.x_max() && y >= box.y_min() &&
           y <= box.y_max();
  };
  long in_a = 0, in_b = 0, in_both = 0;
  for (int i = 0; i < n; ++i) {
    const double y = y0 + (i + 0.5) * (y1 - y0) / n;
    for (int j = 0; j < n; ++j) {
      const double x = x0 + (j + 0.5) * (x1 - x0) / n;
      const bool ia = inside(a, x, y), ib = inside(b, x, y);
      in_a += ia;
      in_b += ib;
      in_both += ia && ib;
    }
  }
  const long uni = in_a + in_b - in_both;
  return uni > 0 ? double(in_both) / double(uni) : 0.0;
}

bool criterion1() {
  const auto t0 = Clock::now();
  Check c;

  // Identical boxes: zero loss.
  const BBox same{0.3, -1.2, 2.0, 0.7};
  c.expect(std::abs(ciou_terms(same, same).loss) <= 1e-3, "L(B,B) != 0");

  // Offset unit squares: rho2 = 1, c2 = 5, v = 0, L = 1.2; IoU 0.
  const BBox b1{0.5, 0.5, 1.0, 1.0}, b2{1.5, 0.5, 1.0, 1.0};
  const auto t12 = ciou_terms(b1, b2);
  c.expect(std::abs(t12.loss - 1.2) <= 1e-3, "offset squares loss != 1.2");
  c.expect(std::abs(t12.iou - raster_iou(b1, b2)) <= 1e-3,
           "offset squares iou vs raster");

  // Concentric 2x1 prediction on a 1x1 truth: L ~= 0.5032.
  const BBox wide{0.0, 0.0, 2.0, 1.0}, unit{0.0, 0.0, 1.0, 1.0};
  const auto tcw = ciou_terms(wide, unit);
  c.expect(std::abs(tcw.loss - 0.5032) <= 1e-3, "concentric loss != 0.5032");
  c.expect(std::abs(tcw.iou - raster_iou(wide, unit)) <= 1e-3,
           "concentric iou vs raster");

  // Corner-form [0,0,2,2] vs [1,1,3,3]: IoU 1/7, rasterized cross-check.
  const BBox q1 = BBox::from_corners(0, 0, 2, 2);
  const BBox q2 = BBox::from_corners(1, 1, 3, 3);
  c.expect(std::abs(iou(q1, q2) - 1.0 / 7.0) <= 1e-3, "iou != 1/7");
  c.expect(std::abs(iou(q1, q2) - raster_iou(q1, q2)) <= 1e-3,
           "1/7 iou vs raster");

  // 1000 random pairs: self-loss zero and scale invariance to 1e-9.
  Rng rng(2026);
  for (int i = 0; i < 1000; ++i) {
    const BBox p{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(0.2, 3),
                 rng.uniform(0.2, 3)};
    const BBox g{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(0.2, 3),
                 rng.uniform(0.2, 3)};
    const double s = rng.uniform(0.5, 4.0);
    const BBox ps{p.x * s, p.y * s, p.w * s, p.h * s};
    const BBox gs{g.x * s, g.y * s, g.w * s, g.h * s};
    const double l0 = ciou_terms(p, g).loss;
    const double l1 = ciou_terms(ps, gs).loss;
    if (std::abs(l1 - l0) > 1e-9 * std::max(1.0, std::abs(l0))) {
      c.expect(false, "scale invariance broke");
      break;
    }
    if (std::abs(ciou_terms(p, p).loss) > 1e-9) {
      c.expect(false, "self loss nonzero");
      break;
    }
  }

  c.expect(seconds_since(t0) < 10.0, "criterion 1 exceeded 10 s");
  for (const auto& n : c.notes) std::cerr << "  criterion 1: " << n << "\n";
  return c.ok;
}

// ---- criterion 2: gradient vs finite differences + mutation test ------

bool criterion2() {
  const auto t0 = Clock::now();
  Check c;
  Rng rng(7);
  const double eps = 1e-5, margin = 1e-3;
  double max_rel = 0.0, max_rel_mutated = 0.0;
  int checked = 0;
  for (int t = 0; t < 1000; ++t) {
    BBox p{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(0.2, 3),
           rng.uniform(0.2, 3)};
    const BBox g{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(0.2, 3),
                 rng.uniform(0.2, 3)};
    auto near = [&](double a, double b) { return std::abs(a - b) < margin; };
    if (near(p.x_min(), g.x_min()) || near(p.x_max(), g.x_max()) ||
        near(p.x_min(), g.x_max()) || near(p.x_max(), g.x_min()) ||
        near(p.y_min(), g.y_min()) || near(p.y_max(), g.y_max()) ||
        near(p.y_min(), g.y_max()) || near(p.y_max(), g.y_min())) {
      continue;
    }
    const auto analytic = ciou_grad(p, g);
    const double alpha0 = ciou_terms(p, g).alpha;
    auto frozen = [&](const BBox& b) {
      const auto tm = ciou_terms(b, g);
      return 1.0 - tm.iou + tm.rho2 / tm.c2 + alpha0 * tm.v;
    };
    double* fields[4] = {&p.x, &p.y, &p.w, &p.h};
    for (int i = 0; i < 4; ++i) {
      const double orig = *fields[i];
      *fields[i] = orig + eps;
      const double up = frozen(p);
      *fields[i] = orig - eps;
      const double dn = frozen(p);
      *fields[i] = orig;
      const double fd = (up - dn) / (2 * eps);
      const double denom = std::max(1.0, std::abs(fd));
      max_rel = std::max(max_rel, std::abs(analytic[i] - fd) / denom);
      // The deliberately broken gradient (2% scale error) must be caught.
      max_rel_mutated =
          std::max(max_rel_mutated, std::abs(1.02 * analytic[i] - fd) / denom);
    }
    ++checked;
  }
  c.expect(checked >= 700, "too few differentiable pairs");
  c.expect(max_rel <= 1e-3, "analytic gradient off by more than 1e-3");
  c.expect(max_rel_mutated > 1e-3, "mutated gradient slipped through");
  c.expect(seconds_since(t0) < 30.0, "criterion 2 exceeded 30 s");
  for (const auto& n : c.notes) std::cerr << "  criterion 2: " << n << "\n";
  return c.ok;
}

// ---- criterion 3: dilation oracle + receptive field -------------------

bool criterion3() {
  Check c;
  Rng rng(5);
  for (int t = 0; t < 50 && c.ok; ++t) {
    const int dil_set[3] = {2, 3, 5};
    const int d = dil_set[rng.uniform_int(3)];
    const int k = (rng.uniform_int(4) == 0) ? 1 : 3;
    const int in_c = 1 + int(rng.uniform_int(3));
    const int out_c = 1 + int(rng.uniform_int(3));
    const int keff = d * (k - 1) + 1;
    const int h = keff + 1 + int(rng.uniform_int(5));
    const int w = keff + 1 + int(rng.uniform_int(5));
    const int stride = 1 + int(rng.uniform_int(2));
    const int pad = int(rng.uniform_int(d + 1));

    Tensor x(1, in_c, h, w);
    for (float& v : x.data()) v = float(rng.uniform(-1, 1));
    ConvSpec dilated;
    dilated.kernel = Tensor(out_c, in_c, k, k);
    for (float& v : dilated.kernel.data()) v = float(rng.uniform(-1, 1));
    dilated.bias.assign(out_c, 0.1f);
    dilated.stride = stride;
    dilated.padding = pad;
    dilated.dilation = d;

    // Independent oracle: spread the taps onto a zero-inserted dense
    // kernel and run an ordinary convolution.
    ConvSpec dense = dilated;
    dense.kernel = Tensor(out_c, in_c, keff, keff);
    for (int o = 0; o < out_c; ++o)
      for (int i = 0; i < in_c; ++i)
        for (int r = 0; r < k; ++r)
          for (int q = 0; q < k; ++q)
            dense.kernel.at(o, i, r * d, q * d) = dilated.kernel.at(o, i, r, q);
    dense.dilation = 1;

    const Tensor a = conv2d(x, dilated);
    const Tensor b = conv2d(x, dense);
    if (a.size() != b.size()) {
      c.expect(false, "dilated and dense shapes disagree");
      break;
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (std::abs(a.data()[i] - b.data()[i]) > 1e-6) {
        c.expect(false, "dilated conv disagrees with zero-inserted kernel");
        break;
      }
    }
  }
  c.expect(effective_receptive_field(3, 3) == 7, "erf(3,3) != 7");
  c.expect(effective_receptive_field(3, 1) == 3, "erf(3,1) != 3");
  c.expect(effective_receptive_field(3, 5, 7) == 17, "erf(3,5,7) != 17");
  for (const auto& n : c.notes) std::cerr << "  criterion 3: " << n << "\n";
  return c.ok;
}

// ---- criterion 4: AAM composition with neutral attention --------------

bool criterion4() {
  Check c;
  NeckConfig cfg;
  cfg.in_channels = {3, 4, 5, 6};
  cfg.width = 4;
  cfg.aam.mid_channels = 4;

  Rng rng(11);
  Tensor c5(1, 6, 12, 12), m5(1, 4, 12, 12);
  for (float& v : c5.data()) v = float(rng.normal());
  for (float& v : m5.data()) v = float(rng.normal());

  WeightStore w = make_neck_weights(cfg, WeightInit::Random, 21);
  // Zeroed attention head: sigmoid(0) = 0.5 on every context.
  w.put("aam.attn.conv2.kernel", Tensor(3, cfg.width, 3, 3, 0.0f));
  w.put("aam.attn.conv2.bias", Tensor(3, 1, 1, 1, 0.0f));

  AamTrace trace;
  const Tensor m6 = aam_forward(c5, m5, cfg.aam, w, "aam", &trace);

  // Recompose each context stream from tensor-core primitives only.
  Tensor half_sum(1, 4, 12, 12);
  for (int i = 0; i < 3; ++i) {
    const int ph = aam_pooled_size(cfg.aam.betas[i], 12);
    const int pw = aam_pooled_size(cfg.aam.betas[i], 12);
    const Tensor pooled = adaptive_avg_pool(c5, ph, pw);
    ConvSpec proj;
    proj.kernel = w.get("aam.context" + std::to_string(i) + ".conv.kernel");
    proj.bias = w.get_vector("aam.context" + std::to_string(i) + ".conv.bias");
    const Tensor fi = bilinear_upsample(conv2d(pooled, proj), 12, 12);
    half_sum = ew_add(half_sum, ew_scale(fi, 0.5f));
  }
  double resid = 0.0;
  for (std::size_t i = 0; i < m6.size(); ++i) {
    const double diff =
        double(m6.data()[i]) - double(m5.data()[i]) - double(half_sum.data()[i]);
    resid = std::max(resid, std::abs(diff));
  }
  c.expect(resid <= 1e-6, "M6 - M5 != 0.5*(F1+F2+F3)");

  // Random attention parameters stay strictly inside (0, 1).
  const WeightStore wr = make_neck_weights(cfg, WeightInit::Random, 22);
  AamTrace tr;
  aam_forward(c5, m5, cfg.aam, wr, "aam", &tr);
  float lo = 1.0f, hi = 0.0f;
  for (const float v : tr.attention.data()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  c.expect(lo > 0.0f && hi < 1.0f, "attention left (0, 1)");
  for (const auto& n : c.notes) std::cerr << "  criterion 4: " << n << "\n";
  return c.ok;
}

// ---- criterion 5: FEM symmetry, permutation, shape ---------------------

bool criterion5() {
  Check c;
  const int width = 4;
  Rng rng(17);
  Tensor x(1, width, 9, 11);
  for (float& v : x.data()) v = float(rng.normal());

  // Identical branches: kernels live on the center tap only, so the
  // dilation offsets never touch a nonzero weight and all three branches
  // compute the same map.
  WeightStore w;
  Tensor center(width, width, 3, 3);
  for (int o = 0; o < width; ++o)
    for (int i = 0; i < width; ++i)
      center.at(o, i, 1, 1) = float(rng.normal() * 0.3);
  Tensor bias(width, 1, 1, 1);
  for (float& v : bias.data()) v = float(rng.normal() * 0.1);
  for (int b = 0; b < 3; ++b) {
    const std::string bp = "fem.branch" + std::to_string(b);
    w.put(bp + ".conv.kernel", center);
    w.put(bp + ".conv.bias", bias);
    w.put(bp + ".bn.gamma", Tensor(width, 1, 1, 1, 1.2f));
    w.put(bp + ".bn.beta", Tensor(width, 1, 1, 1, 0.1f));
    w.put(bp + ".bn.mean", Tensor(width, 1, 1, 1, 0.05f));
    w.put(bp + ".bn.var", Tensor(width, 1, 1, 1, 0.9f));
  }
  FEMConfig fem;
  const Tensor mean3 = fem_forward(x, fem, w, "fem");
  FEMConfig single = fem;
  single.mode = FEMMode::Infer;
  for (int b = 0; b < 3; ++b) {
    single.infer_branch = b;
    const Tensor one = fem_forward(x, single, w, "fem");
    double diff = 0.0;
    for (std::size_t i = 0; i < one.size(); ++i)
      diff = std::max(diff, std::abs(double(mean3.data()[i]) - one.data()[i]));
    if (diff > 1e-7) c.expect(false, "mean != single identical branch");
  }

  // Permutation invariance: rotate the (parameters, dilation) pairs.
  WeightStore wa, wb;
  std::array<Tensor, 3> kernels;
  for (int b = 0; b < 3; ++b) {
    kernels[b] = Tensor(width, width, 3, 3);
    for (float& v : kernels[b].data()) v = float(rng.normal() * 0.2);
  }
  auto put_branch = [&](WeightStore& store, int slot, const Tensor& kern) {
    const std::string bp = "fem.branch" + std::to_string(slot);
    store.put(bp + ".conv.kernel", kern);
    store.put(bp + ".conv.bias", Tensor(width, 1, 1, 1, 0.02f));
    store.put(bp + ".bn.gamma", Tensor(width, 1, 1, 1, 1.0f));
    store.put(bp + ".bn.beta", Tensor(width, 1, 1, 1, 0.0f));
    store.put(bp + ".bn.mean", Tensor(width, 1, 1, 1, 0.0f));
    store.put(bp + ".bn.var", Tensor(width, 1, 1, 1, 1.0f));
  };
  for (int b = 0; b < 3; ++b) put_branch(wa, b, kernels[b]);
  for (int b = 0; b < 3; ++b) put_branch(wb, b, kernels[(b + 1) % 3]);
  FEMConfig fa, fb;
  fa.dilations = {1, 3, 5};
  fb.dilations = {3, 5, 1};  // each kernel keeps its dilation partner
  const Tensor ya = fem_forward(x, fa, wa, "fem");
  const Tensor yb = fem_forward(x, fb, wb, "fem");
  double pdiff = 0.0;
  for (std::size_t i = 0; i < ya.size(); ++i)
    pdiff = std::max(pdiff, std::abs(double(ya.data()[i]) - yb.data()[i]));
  c.expect(pdiff <= 1e-6, "branch permutation changed the output");

  // Shape preservation with padding = dilation at 1/3/5.
  for (const int side : {7, 12, 19}) {
    Tensor z(1, width, side, side + 3);
    for (float& v : z.data()) v = float(rng.uniform(-1, 1));
    const Tensor out = fem_forward(z, fa, wa, "fem");
    c.expect(out.h() == z.h() && out.w() == z.w() && out.c() == width,
             "fem changed the spatial shape");
  }
  for (const auto& n : c.notes) std::cerr << "  criterion 5: " << n << "\n";
  return c.ok;
}

// ---- criterion 6: search space accounting ------------------------------

bool criterion6() {
  Check c;
  // 2090^10 recomputed in 128-bit arithmetic (fits: ~1.6e33 < 2^127).
  unsigned __int128 p = 1;
  for (int i = 0; i < 10; ++i) p *= 2090;
  std::string expect;
  while (p > 0) {
    expect.insert(expect.begin(), char('0' + int(p % 10)));
    p /= 10;
  }
  c.expect(search_space_size(19, 11, 10, 5) == expect,
           "search_space_size(19,11,10,5) != 2090^10");
  c.expect(search_space_size(15, 11, 10, 1) == "2722500",
           "per-pair space != 2722500");

  c.expect(ControllerConfig::kSteps == 30, "controller steps != 30");
  Rng rng(3);
  const Controller ctl = Controller::random(ControllerConfig{}, rng);
  Rng draw(8);
  const ControllerSample s = controller_sample(ctl, draw);
  bool ranges = true;
  for (int t = 0; t < 30; ++t)
    ranges = ranges && s.trace[t] >= 0 && s.trace[t] < head_cardinality(t % 3);
  c.expect(ranges, "sampled decisions left their head ranges");
  for (const auto& n : c.notes) std::cerr << "  criterion 6: " << n << "\n";
  return c.ok;
}

// ---- criterion 7: PPO sanity + beats random ----------------------------

bool criterion7() {
  const auto t0 = Clock::now();
  Check c;

  // Exact fixed point at zero advantage.
  {
    Rng rng(1);
    Controller ctl = Controller::random(ControllerConfig{}, rng);
    const auto before = ctl.params();
    Rng draw(2);
    std::vector<PpoItem> batch;
    for (int i = 0; i < 4; ++i) {
      const ControllerSample s = controller_sample(ctl, draw);
      batch.push_back({s.trace, s.log_prob, 5.0});
    }
    double baseline = 5.0;
    ppo_update(ctl, batch, baseline, 0.2, 0.5);
    c.expect(ctl.params() == before, "zero advantage moved the parameters");
  }

  // A rewarded trajectory gains log probability.
  {
    Rng rng(3);
    Controller ctl = Controller::random(ControllerConfig{}, rng);
    Rng draw(4);
    const ControllerSample s = controller_sample(ctl, draw);
    const double before = replay_log_prob(ctl, s.trace);
    std::vector<PpoItem> batch = {{s.trace, s.log_prob, 10.0}};
    double baseline = 0.0;
    ppo_update(ctl, batch, baseline, 0.2, 0.01);
    c.expect(replay_log_prob(ctl, s.trace) > before,
             "positive advantage did not raise log prob");
  }

  // PPO must beat equal-budget random search on the separable reward for
  // at least 8 of 10 fixed seeds.
  int wins = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    SearchConfig ppo;
    ppo.algo = SearchAlgo::Ppo;
    ppo.budget = 300;
    ppo.batch = 8;
    ppo.lr = 0.00035;
    ppo.seed = seed;
    SearchConfig rnd = ppo;
    rnd.algo = SearchAlgo::Random;
    const double ppo_best = search(synthetic_separable_reward, ppo).best_reward;
    const double rnd_best = search(synthetic_separable_reward, rnd).best_reward;
    if (ppo_best > rnd_best) ++wins;
  }
  std::ostringstream os;
  os << "ppo won " << wins << "/10 seeds";
  c.expect(wins >= 8, os.str());
  c.expect(seconds_since(t0) < 300.0, "criterion 7 exceeded 5 min");
  for (const auto& n : c.notes) std::cerr << "  criterion 7: " << n << "\n";
  return c.ok;
}

// ---- criterion 8: augmentation identity, determinism, frequencies -----

Sample pattern_sample(int h, int w) {
  Sample s;
  s.image = Tensor(1, 3, h, w);
  for (int ch = 0; ch < 3; ++ch)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        s.image.at(0, ch, y, x) = float(((ch + 1) * (x + w * y) % 97) / 97.0);
  s.boxes.push_back({BBox{w / 2.0, h / 2.0, w / 4.0, h / 4.0}, 0, 1.0});
  return s;
}

bool samples_match(const Sample& a, const Sample& b) {
  if (a.image.data() != b.image.data()) return false;
  if (a.boxes.size() != b.boxes.size()) return false;
  for (std::size_t i = 0; i < a.boxes.size(); ++i) {
    const auto& x = a.boxes[i];
    const auto& y = b.boxes[i];
    if (x.box.x != y.box.x || x.box.y != y.box.y || x.box.w != y.box.w ||
        x.box.h != y.box.h || x.class_id != y.class_id ||
        x.weight != y.weight) {
      return false;
    }
  }
  return a.label_weights == b.label_weights;
}

bool criterion8() {
  Check c;
  const Sample base = pattern_sample(24, 24);
  std::vector<Sample> pool = {pattern_sample(24, 24), pattern_sample(20, 28),
                              pattern_sample(28, 20)};

  // Probability level 0 is the identity for every op.
  for (int k = 0; k < kNumAugKinds; ++k) {
    AugOpSpec spec;
    spec.kind = static_cast<AugKind>(k);
    spec.prob_level = 0;
    spec.mag_level = 7;
    Rng rng(100 + k);
    const Sample out = apply_op(base, spec, rng, &pool);
    if (!samples_match(out, base)) {
      c.expect(false, std::string("prob 0 not identity for ") +
                          kind_name(spec.kind));
    }
  }

  // Byte-identical outputs under a repeated seed, mixing ops included.
  Policy mixed;
  const AugKind kinds[10] = {AugKind::Rotate,   AugKind::CutMix,
                             AugKind::Mosaic,   AugKind::Brightness,
                             AugKind::Mixup,    AugKind::Blur,
                             AugKind::SnapMix,  AugKind::Erasing,
                             AugKind::Zoom,     AugKind::Noise};
  for (int i = 0; i < 10; ++i) {
    auto& op = mixed.subs[i / 2].ops[i % 2];
    op.kind = kinds[i];
    op.prob_level = 6;
    op.mag_level = 6;
  }
  for (const std::uint64_t seed : {1ull, 77ull, 123456ull}) {
    Rng r1(seed), r2(seed);
    for (int rep = 0; rep < 10; ++rep) {
      const Sample o1 = apply_policy(base, mixed, r1, &pool);
      const Sample o2 = apply_policy(base, mixed, r2, &pool);
      if (!samples_match(o1, o2)) {
        c.expect(false, "same seed produced different bytes");
        break;
      }
    }
  }

  // Sub-policy pick frequencies: 5 distinguishable horizontal shifts.
  const int w = 40;
  Sample strip;
  strip.image = Tensor(1, 3, 2, w);
  for (int ch = 0; ch < 3; ++ch)
    for (int y = 0; y < 2; ++y)
      for (int x = 0; x < w; ++x)
        strip.image.at(0, ch, y, x) = float((x + 0.5) / w);
  Policy shifts;
  const int levels[5] = {0, 2, 4, 6, 8};
  for (int i = 0; i < 5; ++i) {
    shifts.subs[i].ops[0].kind = AugKind::TranslateX;
    shifts.subs[i].ops[0].prob_level = 9;
    shifts.subs[i].ops[0].mag_level = levels[i];
    shifts.subs[i].ops[1].prob_level = 0;
  }
  std::map<int, int> counts;
  Rng rng(909);
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const Sample out = apply_policy(strip, shifts, rng, nullptr);
    const double v = out.image.at(0, 0, 1, w / 2);
    const int src = int(std::lround(v * w - 0.5));
    ++counts[w / 2 - src];  // the applied pixel shift
  }
  c.expect(counts.size() == 5, "expected exactly 5 observed shifts");
  for (const auto& [shift, cnt] : counts) {
    if (std::abs(cnt / double(n) - 0.2) > 0.02) {
      std::ostringstream os;
      os << "sub-policy frequency off: shift " << shift << " rate "
         << cnt / double(n);
      c.expect(false, os.str());
    }
  }
  for (const auto& n2 : c.notes) std::cerr << "  criterion 8: " << n2 << "\n";
  return c.ok;
}

// ---- criterion 9: metrics oracle ---------------------------------------

double sweep_lamr(const std::vector<DetectionRecord>& dets,
                  const std::vector<GroundTruth>& gts, int n_images,
                  double thr) {
  // Exhaustive oracle: re-match the filtered set at every score cut.
  std::set<double> cuts;
  for (const auto& d : dets) cuts.insert(d.score);
  std::vector<std::pair<double, double>> pts = {{0.0, 1.0}};
  for (const double cut : cuts) {
    std::vector<DetectionRecord> kept;
    for (const auto& d : dets)
      if (d.score >= cut) kept.push_back(d);
    const auto match = match_detections(kept, gts, thr);
    int tp = 0;
    for (const int m : match) tp += m >= 0;
    pts.push_back({double(int(kept.size()) - tp) / n_images,
                   1.0 - double(tp) / double(gts.size())});
  }
  double acc = 0.0;
  for (int i = 0; i < 9; ++i) {
    const double ref = std::pow(10.0, -2.0 + 0.25 * i);
    double best = -1.0, mr = 1.0;
    for (const auto& [fppi, m] : pts) {
      if (fppi > ref) continue;
      if (fppi > best || (fppi == best && m < mr)) {
        best = fppi;
        mr = m;
      }
    }
    acc += std::log(std::max(mr, 1e-10));
  }
  return std::exp(acc / 9.0);
}

bool criterion9(const fs::path& data_dir) {
  Check c;

  // Crafted AP instance.
  const double ap =
      average_precision({{0.9, true}, {0.8, false}, {0.7, true}}, 2);
  c.expect(std::abs(ap - 5.0 / 6.0) <= 1e-9, "AP != 5/6");

  // Bundled fixture vs committed brute-force values.
  const fs::path fx = data_dir / "eval_fixture";
  const AnnotationSet anns = load_annotations((fx / "annotations.json").string());
  const auto dets = load_detections((fx / "detections.json").string(), anns);
  std::map<int, std::string> names;
  for (std::size_t i = 0; i < anns.categories.size(); ++i)
    names[int(i)] = anns.categories[i];
  const EvalReport rep =
      evaluate_detections(dets, anns.ground_truths, names,
                          int(anns.images.size()), 0.5);

  std::ifstream in(fx / "expected.json");
  c.expect(bool(in), "missing expected.json");
  if (in) {
    const nlohmann::json want = nlohmann::json::parse(in);
    auto close = [](double a, double b) { return std::abs(a - b) <= 1e-9; };
    c.expect(close(rep.map50, want.at("map50").get<double>()),
             "fixture map50 mismatch");
    auto check_opt = [&](const std::optional<double>& got, const char* key) {
      const auto& v = want.at(key);
      if (v.is_null()) {
        c.expect(!got.has_value(), std::string(key) + " should be null");
      } else {
        c.expect(got.has_value() && close(*got, v.get<double>()),
                 std::string(key) + " mismatch");
      }
    };
    check_opt(rep.ap_s, "ap_s");
    check_opt(rep.ap_m, "ap_m");
    check_opt(rep.ap_l, "ap_l");
    for (const auto& [name, sub] : want.at("per_class").items()) {
      c.expect(rep.per_class.count(name) == 1,
               "fixture class missing: " + name);
      if (!rep.per_class.count(name)) continue;
      const ClassMetrics& m = rep.per_class.at(name);
      c.expect(close(m.ap, sub.at("ap").get<double>()),
               "fixture ap mismatch for " + name);
      if (sub.at("lamr").is_null()) {
        c.expect(!m.lamr.has_value(), "lamr should be null for " + name);
      } else {
        c.expect(m.lamr.has_value() &&
                     close(*m.lamr, sub.at("lamr").get<double>()),
                 "fixture lamr mismatch for " + name);
      }
    }
  }

  // LAMR endpoints.
  std::vector<GroundTruth> gts = {{BBox::from_corners(0, 0, 10, 10), 0, 0},
                                  {BBox::from_corners(20, 0, 30, 10), 0, 1}};
  std::vector<DetectionRecord> hits = {
      {BBox::from_corners(0, 0, 10, 10), 0, 0, 0.9},
      {BBox::from_corners(20, 0, 30, 10), 0, 1, 0.8}};
  const auto perfect = lamr(hits, gts, 2, 0.5);
  c.expect(perfect.has_value() && std::abs(*perfect / 1e-10 - 1.0) < 1e-9,
           "perfect lamr not floored at 1e-10");
  const auto blind = lamr({}, gts, 2, 0.5);
  c.expect(blind.has_value() && *blind == 1.0, "empty lamr != 1");

  // Crafted staircase vs the exhaustive sweep oracle.
  Rng rng(31337);
  std::vector<GroundTruth> cg;
  std::vector<DetectionRecord> cd;
  for (int g = 0; g < 6; ++g) {
    const double x = rng.uniform(0, 60), y = rng.uniform(0, 60);
    cg.push_back({BBox::from_corners(x, y, x + 12, y + 12), 0,
                  int(rng.uniform_int(4))});
  }
  for (int d = 0; d < 11; ++d) {
    const auto& b = cg[rng.uniform_int(cg.size())];
    const double jx = rng.uniform(-4, 4), jy = rng.uniform(-4, 4);
    cd.push_back({BBox{b.box.x + jx, b.box.y + jy, b.box.w, b.box.h}, 0,
                  int(rng.uniform_int(4)), (1 + rng.uniform_int(4)) / 4.0});
  }
  const auto crafted = lamr(cd, cg, 4, 0.5);
  c.expect(crafted.has_value() &&
               std::abs(*crafted - sweep_lamr(cd, cg, 4, 0.5)) <= 1e-12,
           "crafted lamr != sweep oracle");
  for (const auto& n : c.notes) std::cerr << "  criterion 9: " << n << "\n";
  return c.ok;
}

// ---- criterion 10: end-to-end CLI --------------------------------------

int run_cmd(const std::string& cmd) {
  const int rc = std::system(cmd.c_str());
  if (rc == -1) return -1;
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return "<unreadable:" + p.string() + ">";
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

bool same_dir_bytes(const fs::path& a, const fs::path& b) {
  std::vector<std::string> names_a, names_b;
  for (const auto& e : fs::directory_iterator(a))
    names_a.push_back(e.path().filename().string());
  for (const auto& e : fs::directory_iterator(b))
    names_b.push_back(e.path().filename().string());
  std::sort(names_a.begin(), names_a.end());
  std::sort(names_b.begin(), names_b.end());
  if (names_a != names_b) return false;
  for (const auto& n : names_a)
    if (slurp(a / n) != slurp(b / n)) return false;
  return true;
}

bool criterion10(const std::string& cli, const fs::path& data_dir) {
  Check c;
  if (cli.empty()) {
    std::cerr << "  criterion 10: --cli not given\n";
    return false;
  }
  const fs::path work = fs::temp_directory_path() / "afpnkit_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);
  auto path = [&](const std::string& n) { return (work / n).string(); };
  auto quiet = [&](const std::string& args) {
    return run_cmd(cli + " " + args + " > /dev/null 2>> " + path("stderr.log"));
  };

  // Weight synthesis, twice: manifest and blob must be byte-stable.
  c.expect(quiet("make-weights --out " + path("w.json") + " --seed 3") == 0,
           "make-weights failed");
  c.expect(quiet("make-weights --out " + path("w2.json") + " --seed 3") == 0,
           "make-weights rerun failed");
  c.expect(slurp(path("w.json.bin")) == slurp(path("w2.json.bin")),
           "weight blobs differ across reruns");

  // The pyramid check at the full 608 input.
  c.expect(quiet("neck-check --weights " + path("w.json") + " --seed 5 --out " +
                 path("r1.json")) == 0,
           "neck-check exited nonzero");
  c.expect(quiet("neck-check --weights " + path("w.json") + " --seed 5 --out " +
                 path("r2.json")) == 0,
           "neck-check rerun exited nonzero");
  c.expect(slurp(path("r1.json")) == slurp(path("r2.json")),
           "neck-check reports differ");
  {
    std::ifstream in(path("r1.json"));
    if (in) {
      const nlohmann::json rep = nlohmann::json::parse(in);
      const std::vector<int> ladder = rep.at("ladder").get<std::vector<int>>();
      c.expect(ladder == std::vector<int>({152, 76, 38, 19}),
               "ladder is not 152/76/38/19");
      c.expect(rep.at("input_size").get<int>() == 608, "input size not 608");
      c.expect(rep.at("pass").get<bool>(), "neck-check did not pass");
    } else {
      c.expect(false, "neck-check report missing");
    }
  }

  // Gradient check.
  c.expect(quiet("grad-check --trials 300 --seed 4 --out " + path("g1.json")) ==
               0,
           "grad-check exited nonzero");
  c.expect(quiet("grad-check --trials 300 --seed 4 --out " + path("g2.json")) ==
               0,
           "grad-check rerun exited nonzero");
  c.expect(slurp(path("g1.json")) == slurp(path("g2.json")),
           "grad-check reports differ");

  // Augmentation over the bundled fixture.
  const std::string anns = (data_dir / "aug_fixture" / "annotations.json").string();
  const std::string pol = (data_dir / "policies" / "translate_x.json").string();
  c.expect(quiet("aug " + anns + " --policy " + pol + " --seed 7 --out " +
                 path("aug1")) == 0,
           "aug exited nonzero");
  c.expect(quiet("aug " + anns + " --policy " + pol + " --seed 7 --out " +
                 path("aug2")) == 0,
           "aug rerun exited nonzero");
  c.expect(same_dir_bytes(work / "aug1", work / "aug2"),
           "aug outputs differ across reruns");

  // Policy search (random, tiny budget).
  const std::string search_args = "search separable --algo random --budget 2 "
                                  "--seed 11 ";
  c.expect(quiet(search_args + "--out " + path("ck1.json") + " --policy " +
                 path("p1.json")) == 0,
           "search exited nonzero");
  c.expect(quiet(search_args + "--out " + path("ck2.json") + " --policy " +
                 path("p2.json")) == 0,
           "search rerun exited nonzero");
  c.expect(slurp(path("ck1.json")) == slurp(path("ck2.json")),
           "checkpoints differ across reruns");
  c.expect(slurp(path("p1.json")) == slurp(path("p2.json")),
           "best policies differ across reruns");

  // Evaluation over the bundled fixture.
  const std::string ev = (data_dir / "eval_fixture").string();
  c.expect(quiet("eval " + ev + "/detections.json " + ev +
                 "/annotations.json --out " + path("e1.json")) == 0,
           "eval exited nonzero");
  c.expect(quiet("eval " + ev + "/detections.json " + ev +
                 "/annotations.json --out " + path("e2.json")) == 0,
           "eval rerun exited nonzero");
  c.expect(slurp(path("e1.json")) == slurp(path("e2.json")),
           "eval reports differ across reruns");

  if (c.ok) fs::remove_all(work);
  for (const auto& n : c.notes) std::cerr << "  criterion 10: " << n << "\n";
  return c.ok;
}

}  // namespace

int main(int argc, char** argv) {
  std::string data_dir = "data", cli;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--data-dir" && i + 1 < argc) {
      data_dir = argv[++i];
    } else if (arg == "--cli" && i + 1 < argc) {
      cli = argv[++i];
    } else {
      std::cerr << "usage: " << argv[0] << " [--data-dir DIR] [--cli PATH]\n";
      return 2;
    }
  }

  struct Criterion {
    const char* name;
    std::function<bool()> run;
  };
  const std::vector<Criterion> criteria = {
      {"loss worked examples, rasterized IoU, scale invariance", criterion1},
      {"analytic gradient vs finite differences with mutation test",
       criterion2},
      {"dilated convolution equals zero-inserted kernel; receptive field",
       criterion3},
      {"attention module composition with neutral attention", criterion4},
      {"enhancement branches: symmetry, permutation, shape", criterion5},
      {"search space accounting and 30-decision sampler", criterion6},
      {"ppo fixed point, improvement, beats random on 8/10 seeds",
       criterion7},
      {"augmentation identity, determinism, sub-policy frequencies",
       criterion8},
      {"metrics against brute-force and sweep oracles",
       [&] { return criterion9(data_dir); }},
      {"end-to-end CLI ladder and byte-stable artifacts",
       [&] { return criterion10(cli, data_dir); }},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    bool ok = false;
    try {
      ok = criteria[i].run();
    } catch (const std::exception& ex) {
      std::cerr << "  criterion " << i + 1 << " threw: " << ex.what() << "\n";
    }
    std::cout << (ok ? "PASS" : "FAIL") << " criterion " << i + 1 << ": "
              << criteria[i].name << "\n";
    failures += ok ? 0 : 1;
  }
  if (failures > 0) {
    std::cout << failures << " of " << criteria.size()
              << " criteria failed\n";
    return 1;
  }
  std::cout << "all " << criteria.size() << " criteria passed\n";
  return 0;
}
