#include "afpnkit/augment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace afpnkit {

namespace {

constexpr const char* kKindNames[kNumAugKinds] = {
    "translate_x", "translate_y", "shear",   "rotate", "zoom",
    "brightness",  "contrast",    "color_jitter", "noise",  "blur",
    "erasing",     "cutmix",      "mixup",   "snapmix", "mosaic",
};

void validate_sample(const Sample& s) {
  if (s.image.n() != 1 || s.image.c() != 3) {
    throw std::invalid_argument("sample image must be (1, 3, H, W), got " +
                                s.image.shape_str());
  }
  if (s.image.h() < 1 || s.image.w() < 1) {
    throw std::invalid_argument("sample image has zero area");
  }
}

void clamp01(Tensor& img) {
  for (auto& v : img.data()) v = std::clamp(v, 0.0f, 1.0f);
}

// x' = a x + b y + c ; y' = d x + e y + f, on continuous pixel
// coordinates (pixel i spans [i, i+1), center i + 0.5).
struct Affine {
  double a = 1, b = 0, c = 0, d = 0, e = 1, f = 0;
};

Affine invert(const Affine& t) {
  const double det = t.a * t.e - t.b * t.d;
  if (std::fabs(det) < 1e-12) throw std::runtime_error("singular warp");
  Affine r;
  r.a = t.e / det;
  r.b = -t.b / det;
  r.d = -t.d / det;
  r.e = t.a / det;
  r.c = -(r.a * t.c + r.b * t.f);
  r.f = -(r.d * t.c + r.e * t.f);
  return r;
}

std::pair<double, double> apply_pt(const Affine& t, double x, double y) {
  return {t.a * x + t.b * y + t.c, t.d * x + t.e * y + t.f};
}

// Bilinear read at a continuous coordinate; outside pixels contribute 0.
double sample_zero(const Tensor& img, int ch, double fx, double fy) {
  const double u = fx - 0.5, v = fy - 0.5;
  const int x0 = static_cast<int>(std::floor(u));
  const int y0 = static_cast<int>(std::floor(v));
  const double wx = u - x0, wy = v - y0;
  double out = 0.0;
  for (int dy = 0; dy < 2; ++dy) {
    const int yy = y0 + dy;
    if (yy < 0 || yy >= img.h()) continue;
    for (int dx = 0; dx < 2; ++dx) {
      const int xx = x0 + dx;
      if (xx < 0 || xx >= img.w()) continue;
      out += (dx ? wx : 1 - wx) * (dy ? wy : 1 - wy) * img.at(0, ch, yy, xx);
    }
  }
  return out;
}

Tensor warp_image(const Tensor& img, const Affine& inv) {
  Tensor out(1, img.c(), img.h(), img.w());
  for (int ch = 0; ch < img.c(); ++ch)
    for (int y = 0; y < img.h(); ++y) {
      float* row = out.row(0, ch, y);
      for (int x = 0; x < img.w(); ++x) {
        auto [sx, sy] = apply_pt(inv, x + 0.5, y + 0.5);
        row[x] = static_cast<float>(sample_zero(img, ch, sx, sy));
      }
    }
  return out;
}

// Boxes follow the pixels: map the four corners, take the axis-aligned
// hull, clip to the canvas, drop anything that collapses.
std::vector<LabeledBox> warp_boxes(const std::vector<LabeledBox>& boxes,
                                   const Affine& fwd, int w, int h) {
  std::vector<LabeledBox> out;
  out.reserve(boxes.size());
  for (const auto& lb : boxes) {
    const double xs[2] = {lb.box.x_min(), lb.box.x_max()};
    const double ys[2] = {lb.box.y_min(), lb.box.y_max()};
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (double cx : xs)
      for (double cy : ys) {
        auto [px, py] = apply_pt(fwd, cx, cy);
        x0 = std::min(x0, px);
        x1 = std::max(x1, px);
        y0 = std::min(y0, py);
        y1 = std::max(y1, py);
      }
    x0 = std::clamp(x0, 0.0, static_cast<double>(w));
    x1 = std::clamp(x1, 0.0, static_cast<double>(w));
    y0 = std::clamp(y0, 0.0, static_cast<double>(h));
    y1 = std::clamp(y1, 0.0, static_cast<double>(h));
    if (x1 - x0 < 1e-6 || y1 - y0 < 1e-6) continue;
    LabeledBox nb = lb;
    nb.box = BBox::from_corners(x0, y0, x1, y1);
    out.push_back(nb);
  }
  return out;
}

Sample warp_sample(const Sample& s, const Affine& fwd) {
  Sample out;
  out.image = warp_image(s.image, invert(fwd));
  clamp01(out.image);
  out.boxes = warp_boxes(s.boxes, fwd, s.image.w(), s.image.h());
  out.label_weights = s.label_weights;
  return out;
}

struct Rect {
  int x0 = 0, y0 = 0, w = 1, h = 1;
  double area() const { return static_cast<double>(w) * h; }
};

// Draw order is part of the determinism contract: aspect, then x, then y.
Rect draw_rect(Rng& rng, int w, int h, double area_frac) {
  const double aspect = rng.uniform(0.5, 2.0);
  const double target = std::max(1.0, area_frac * w * h);
  Rect r;
  r.w = std::clamp(static_cast<int>(std::lround(std::sqrt(target / aspect))), 1, w);
  r.h = std::clamp(static_cast<int>(std::lround(std::sqrt(target * aspect))), 1, h);
  r.x0 = static_cast<int>(rng.uniform_int(w - r.w + 1));
  r.y0 = static_cast<int>(rng.uniform_int(h - r.h + 1));
  return r;
}

std::map<int, double> mix_weights(const std::map<int, double>& a, double wa,
                                  const std::map<int, double>& b, double wb) {
  std::map<int, double> out;
  for (const auto& [k, v] : a) out[k] += wa * v;
  for (const auto& [k, v] : b) out[k] += wb * v;
  double total = 0.0;
  for (const auto& [k, v] : out) total += v;
  if (total <= 0.0) return {};
  for (auto& [k, v] : out) v /= total;
  return out;
}

// Scales a pool partner to the working canvas so compositing ops never
// have to care about size mismatches.
Sample fit_to(const Sample& src, int w, int h) {
  validate_sample(src);
  if (src.image.w() == w && src.image.h() == h) return src;
  Sample out;
  out.image = resize_bilinear(src.image, h, w);
  const Affine scale{static_cast<double>(w) / src.image.w(), 0, 0,
                     0, static_cast<double>(h) / src.image.h(), 0};
  out.boxes = warp_boxes(src.boxes, scale, w, h);
  out.label_weights = src.label_weights;
  return out;
}

const Sample& pool_pick(const std::vector<Sample>* pool, Rng& rng) {
  return (*pool)[rng.uniform_int(pool->size())];
}

void require_pool(const std::vector<Sample>* pool, std::size_t n, AugKind k) {
  if (!pool || pool->size() < n) {
    std::ostringstream os;
    os << kind_name(k) << " needs a pool of at least " << n << " samples";
    throw std::invalid_argument(os.str());
  }
}

Tensor crop(const Tensor& img, const Rect& r) {
  Tensor out(1, img.c(), r.h, r.w);
  for (int c = 0; c < img.c(); ++c)
    for (int y = 0; y < r.h; ++y)
      std::copy(img.row(0, c, r.y0 + y) + r.x0,
                img.row(0, c, r.y0 + y) + r.x0 + r.w, out.row(0, c, y));
  return out;
}

void paste(Tensor& dst, const Tensor& patch, int x0, int y0) {
  for (int c = 0; c < dst.c(); ++c)
    for (int y = 0; y < patch.h(); ++y)
      std::copy(patch.row(0, c, y), patch.row(0, c, y) + patch.w(),
                dst.row(0, c, y0 + y) + x0);
}

// Pool boxes that survive a crop rectangle, mapped into dst coordinates.
std::vector<LabeledBox> boxes_through_rect(const std::vector<LabeledBox>& boxes,
                                           const Rect& src, const Rect& dst,
                                           double weight_factor) {
  std::vector<LabeledBox> out;
  const double sx = static_cast<double>(dst.w) / src.w;
  const double sy = static_cast<double>(dst.h) / src.h;
  for (const auto& lb : boxes) {
    const double x0 = std::max(lb.box.x_min(), static_cast<double>(src.x0));
    const double x1 = std::min(lb.box.x_max(), static_cast<double>(src.x0 + src.w));
    const double y0 = std::max(lb.box.y_min(), static_cast<double>(src.y0));
    const double y1 = std::min(lb.box.y_max(), static_cast<double>(src.y0 + src.h));
    if (x1 - x0 < 1e-6 || y1 - y0 < 1e-6) continue;
    LabeledBox nb = lb;
    nb.box = BBox::from_corners((x0 - src.x0) * sx + dst.x0,
                                (y0 - src.y0) * sy + dst.y0,
                                (x1 - src.x0) * sx + dst.x0,
                                (y1 - src.y0) * sy + dst.y0);
    nb.weight = lb.weight * weight_factor;
    out.push_back(nb);
  }
  return out;
}

Sample op_blur(const Sample& s, int radius) {
  if (radius <= 0) return s;
  const int h = s.image.h(), w = s.image.w();
  Sample out = s;
  Tensor tmp(1, 3, h, w);
  // Separable box filter with replicated edges; horizontal then vertical.
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < h; ++y) {
      const float* src = s.image.row(0, c, y);
      float* dst = tmp.row(0, c, y);
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k)
          acc += src[std::clamp(x + k, 0, w - 1)];
        dst[x] = static_cast<float>(acc / (2 * radius + 1));
      }
    }
    for (int y = 0; y < h; ++y) {
      float* dst = out.image.row(0, c, y);
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k)
          acc += tmp.at(0, c, std::clamp(y + k, 0, h - 1), x);
        dst[x] = static_cast<float>(acc / (2 * radius + 1));
      }
    }
  }
  clamp01(out.image);
  return out;
}

Sample op_mosaic(const Sample& s, double jitter, Rng& rng,
                 const std::vector<Sample>* pool) {
  const int w = s.image.w(), h = s.image.h();
  // Draw order: three partners, then the split jitters.
  const Sample* quads[4] = {&s, &pool_pick(pool, rng), &pool_pick(pool, rng),
                            &pool_pick(pool, rng)};
  const double jx = rng.uniform(), jy = rng.uniform();
  const int sx = std::clamp(
      static_cast<int>(std::lround(w * (0.5 + jitter * (2 * jx - 1)))), 1, w - 1);
  const int sy = std::clamp(
      static_cast<int>(std::lround(h * (0.5 + jitter * (2 * jy - 1)))), 1, h - 1);

  const Rect cells[4] = {{0, 0, sx, sy},
                         {sx, 0, w - sx, sy},
                         {0, sy, sx, h - sy},
                         {sx, sy, w - sx, h - sy}};
  Sample out;
  out.image = Tensor(1, 3, h, w);
  std::map<int, double> acc;  // area-share label mix, normalized once
  for (int q = 0; q < 4; ++q) {
    validate_sample(*quads[q]);
    const Tensor scaled = resize_bilinear(quads[q]->image, cells[q].h, cells[q].w);
    paste(out.image, scaled, cells[q].x0, cells[q].y0);
    const Rect whole{0, 0, quads[q]->image.w(), quads[q]->image.h()};
    auto mapped = boxes_through_rect(quads[q]->boxes, whole, cells[q], 1.0);
    out.boxes.insert(out.boxes.end(), mapped.begin(), mapped.end());
    const double share = cells[q].area() / (static_cast<double>(w) * h);
    for (const auto& [k, v] : quads[q]->label_weights) acc[k] += share * v;
  }
  out.label_weights = mix_weights(acc, 1.0, {}, 0.0);
  clamp01(out.image);
  return out;
}

Sample apply_transform(const Sample& s, AugKind kind, double mag, Rng& rng,
                       const std::vector<Sample>* pool) {
  const int w = s.image.w(), h = s.image.h();
  const double cx = w / 2.0, cy = h / 2.0;

  switch (kind) {
    case AugKind::TranslateX:
      return warp_sample(s, Affine{1, 0, mag * w, 0, 1, 0});
    case AugKind::TranslateY:
      return warp_sample(s, Affine{1, 0, 0, 0, 1, mag * h});
    case AugKind::Shear:
      return warp_sample(s, Affine{1, mag, -mag * cy, 0, 1, 0});
    case AugKind::Rotate: {
      const double t = mag * std::numbers::pi / 180.0;
      const double c = std::cos(t), sn = std::sin(t);
      return warp_sample(s, Affine{c, -sn, cx - c * cx + sn * cy,
                                   sn, c, cy - sn * cx - c * cy});
    }
    case AugKind::Zoom:
      return warp_sample(s, Affine{mag, 0, cx * (1 - mag), 0, mag, cy * (1 - mag)});

    case AugKind::Brightness: {
      Sample out = s;
      for (auto& v : out.image.data()) v += static_cast<float>(mag);
      clamp01(out.image);
      return out;
    }
    case AugKind::Contrast: {
      Sample out = s;
      for (auto& v : out.image.data())
        v = static_cast<float>((v - 0.5) * mag + 0.5);
      clamp01(out.image);
      return out;
    }
    case AugKind::ColorJitter: {
      Sample out = s;
      for (int c = 0; c < 3; ++c) {
        const float gain = static_cast<float>(rng.uniform(1.0 - mag, 1.0 + mag));
        float* base = out.image.row(0, c, 0);
        const std::size_t plane = static_cast<std::size_t>(h) * w;
        for (std::size_t i = 0; i < plane; ++i) base[i] *= gain;
      }
      clamp01(out.image);
      return out;
    }
    case AugKind::Noise: {
      Sample out = s;
      for (auto& v : out.image.data())
        v += static_cast<float>(rng.normal() * mag);
      clamp01(out.image);
      return out;
    }
    case AugKind::Blur:
      return op_blur(s, static_cast<int>(std::lround(mag)));

    case AugKind::Erasing: {
      Sample out = s;
      const Rect r = draw_rect(rng, w, h, mag);
      for (int c = 0; c < 3; ++c)
        for (int y = r.y0; y < r.y0 + r.h; ++y)
          std::fill(out.image.row(0, c, y) + r.x0,
                    out.image.row(0, c, y) + r.x0 + r.w, 0.0f);
      return out;
    }
    case AugKind::CutMix: {
      const Sample partner = fit_to(pool_pick(pool, rng), w, h);
      const Rect r = draw_rect(rng, w, h, mag);
      const double mix = r.area() / (static_cast<double>(w) * h);
      Sample out = s;
      paste(out.image, crop(partner.image, r), r.x0, r.y0);
      for (auto& lb : out.boxes) lb.weight *= 1.0 - mix;
      auto pasted = boxes_through_rect(partner.boxes, r, r, mix);
      out.boxes.insert(out.boxes.end(), pasted.begin(), pasted.end());
      out.label_weights =
          mix_weights(s.label_weights, 1.0 - mix, partner.label_weights, mix);
      return out;
    }
    case AugKind::Mixup: {
      const Sample partner = fit_to(pool_pick(pool, rng), w, h);
      Sample out = s;
      const float lam = static_cast<float>(mag);
      for (std::size_t i = 0; i < out.image.size(); ++i)
        out.image.data()[i] = (1 - lam) * out.image.data()[i] +
                              lam * partner.image.data()[i];
      clamp01(out.image);
      for (auto& lb : out.boxes) lb.weight *= 1.0 - mag;
      for (auto lb : partner.boxes) {
        lb.weight *= mag;
        out.boxes.push_back(lb);
      }
      out.label_weights =
          mix_weights(s.label_weights, 1.0 - mag, partner.label_weights, mag);
      return out;
    }
    case AugKind::SnapMix: {
      // Source and target rectangles are sized independently; the source
      // patch is resized to fill the target hole.
      const Sample& partner_raw = pool_pick(pool, rng);
      validate_sample(partner_raw);
      const Rect target = draw_rect(rng, w, h, mag);
      const double shrink = rng.uniform(0.1, 1.0);
      const Rect source = draw_rect(rng, partner_raw.image.w(),
                                    partner_raw.image.h(), mag * shrink);
      const double mix = target.area() / (static_cast<double>(w) * h);
      Sample out = s;
      Tensor patch = resize_bilinear(crop(partner_raw.image, source),
                                     target.h, target.w);
      paste(out.image, patch, target.x0, target.y0);
      for (auto& lb : out.boxes) lb.weight *= 1.0 - mix;
      auto pasted = boxes_through_rect(partner_raw.boxes, source, target, mix);
      out.boxes.insert(out.boxes.end(), pasted.begin(), pasted.end());
      out.label_weights = mix_weights(s.label_weights, 1.0 - mix,
                                      partner_raw.label_weights, mix);
      return out;
    }
    case AugKind::Mosaic:
      return op_mosaic(s, mag, rng, pool);
  }
  throw std::logic_error("unreachable augmentation kind");
}

}  // namespace

const char* kind_name(AugKind k) {
  const int i = static_cast<int>(k);
  if (i < 0 || i >= kNumAugKinds) {
    throw std::invalid_argument("augmentation kind out of range");
  }
  return kKindNames[i];
}

AugKind kind_from_name(const std::string& name) {
  for (int i = 0; i < kNumAugKinds; ++i) {
    if (name == kKindNames[i]) return static_cast<AugKind>(i);
  }
  throw std::invalid_argument("unknown augmentation kind \"" + name + "\"");
}

void AugOpSpec::validate() const {
  const int k = static_cast<int>(kind);
  if (k < 0 || k >= kNumAugKinds) {
    throw std::invalid_argument("augmentation kind out of range");
  }
  if (prob_level < 0 || prob_level >= kNumProbLevels) {
    throw std::invalid_argument("prob_level must be in 0..9");
  }
  if (mag_level < 0 || mag_level >= kNumMagLevels) {
    throw std::invalid_argument("mag_level must be in 0..10");
  }
}

double op_magnitude(AugKind kind, int mag_level) {
  if (mag_level < 0 || mag_level >= kNumMagLevels) {
    throw std::invalid_argument("mag_level must be in 0..10");
  }
  const double f = mag_level / 10.0;
  const double signed_f = 2.0 * f - 1.0;
  switch (kind) {
    case AugKind::TranslateX:
    case AugKind::TranslateY: return signed_f * 0.25;
    case AugKind::Shear:      return signed_f * 0.3;
    case AugKind::Rotate:     return signed_f * 30.0;
    case AugKind::Zoom:       return 0.5 + f;
    case AugKind::Brightness: return signed_f * 0.3;
    case AugKind::Contrast:   return 0.5 + f;
    case AugKind::ColorJitter:return 0.3 * f;
    case AugKind::Noise:      return 0.1 * f;
    case AugKind::Blur:       return 3.0 * f;
    case AugKind::Erasing:    return 0.2 * f;
    case AugKind::CutMix:     return 0.5 * f;
    case AugKind::Mixup:      return 0.5 * f;
    case AugKind::SnapMix:    return 0.5 * f;
    case AugKind::Mosaic:     return 0.25 * f;
  }
  throw std::logic_error("unreachable augmentation kind");
}

Sample apply_op(const Sample& s, const AugOpSpec& spec, Rng& rng,
                const std::vector<Sample>* pool) {
  spec.validate();
  validate_sample(s);
  if (spec.kind == AugKind::Mosaic) require_pool(pool, 3, spec.kind);
  if (spec.kind == AugKind::CutMix || spec.kind == AugKind::Mixup ||
      spec.kind == AugKind::SnapMix) {
    require_pool(pool, 1, spec.kind);
  }
  // The gate consumes exactly one draw whether or not the op fires.
  if (rng.uniform() >= spec.probability()) return s;
  return apply_transform(s, spec.kind, op_magnitude(spec.kind, spec.mag_level),
                         rng, pool);
}

Sample apply_subpolicy(const Sample& s, const SubPolicy& sub, Rng& rng,
                       const std::vector<Sample>* pool) {
  return apply_op(apply_op(s, sub.ops[0], rng, pool), sub.ops[1], rng, pool);
}

Sample apply_policy(const Sample& s, const Policy& p, Rng& rng,
                    const std::vector<Sample>* pool) {
  const std::size_t pick = rng.uniform_int(p.subs.size());
  return apply_subpolicy(s, p.subs[pick], rng, pool);
}

Policy policy_from_json_text(const std::string& text) {
  const auto doc = nlohmann::json::parse(text);
  if (!doc.is_array() || doc.size() != 5) {
    throw std::invalid_argument("a policy is a JSON array of 5 sub-policies");
  }
  Policy p;
  for (int i = 0; i < 5; ++i) {
    const auto& sub = doc[i];
    if (!sub.is_array() || sub.size() != 2) {
      throw std::invalid_argument("each sub-policy is an array of 2 op records");
    }
    for (int j = 0; j < 2; ++j) {
      const auto& rec = sub[j];
      AugOpSpec spec;
      spec.kind = kind_from_name(rec.at("kind").get<std::string>());
      spec.prob_level = rec.at("prob_level").get<int>();
      spec.mag_level = rec.at("mag_level").get<int>();
      spec.validate();
      p.subs[i].ops[j] = spec;
    }
  }
  return p;
}

std::string policy_to_json_text(const Policy& p) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& sub : p.subs) {
    nlohmann::json rec = nlohmann::json::array();
    for (const auto& op : sub.ops) {
      op.validate();
      rec.push_back({{"kind", kind_name(op.kind)},
                     {"prob_level", op.prob_level},
                     {"mag_level", op.mag_level}});
    }
    doc.push_back(rec);
  }
  return doc.dump(2) + "\n";
}

Policy load_policy(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open policy file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return policy_from_json_text(buf.str());
}

void save_policy(const std::string& path, const Policy& p) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write policy file " + path);
  out << policy_to_json_text(p);
}

Tensor resize_bilinear(const Tensor& img, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) {
    throw std::invalid_argument("resize target must be at least 1x1");
  }
  if (out_h == img.h() && out_w == img.w()) return img;
  Tensor out(img.n(), img.c(), out_h, out_w);
  const double sy = static_cast<double>(img.h()) / out_h;
  const double sx = static_cast<double>(img.w()) / out_w;
  for (int n = 0; n < img.n(); ++n)
    for (int c = 0; c < img.c(); ++c)
      for (int y = 0; y < out_h; ++y) {
        const double fy = std::max(0.0, (y + 0.5) * sy - 0.5);
        const int y0 = std::min(static_cast<int>(fy), img.h() - 1);
        const int y1 = std::min(y0 + 1, img.h() - 1);
        const double wy = fy - y0;
        float* row = out.row(n, c, y);
        for (int x = 0; x < out_w; ++x) {
          const double fx = std::max(0.0, (x + 0.5) * sx - 0.5);
          const int x0 = std::min(static_cast<int>(fx), img.w() - 1);
          const int x1 = std::min(x0 + 1, img.w() - 1);
          const double wx = fx - x0;
          row[x] = static_cast<float>(
              (1 - wy) * ((1 - wx) * img.at(n, c, y0, x0) +
                          wx * img.at(n, c, y0, x1)) +
              wy * ((1 - wx) * img.at(n, c, y1, x0) +
                    wx * img.at(n, c, y1, x1)));
        }
      }
  return out;
}

}  // namespace afpnkit
