#include "afpnkit/neck.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "afpnkit/rng.hpp"

namespace afpnkit {

void AAMConfig::validate() const {
  for (double b : betas) {
    if (b < 0.1 || b > 0.5) {
      throw std::invalid_argument("AAM pooling coefficients must lie in [0.1, 0.5]");
    }
  }
  if (!(betas[0] < betas[1] && betas[1] < betas[2])) {
    throw std::invalid_argument("AAM pooling coefficients must be strictly increasing");
  }
  if (mid_channels < 1) {
    throw std::invalid_argument("AAM mid_channels must be >= 1");
  }
}

void FEMConfig::validate() const {
  if (kernel < 1) throw std::invalid_argument("FEM kernel must be >= 1");
  for (int d : dilations) {
    if (d < 1) throw std::invalid_argument("FEM dilations must be >= 1");
  }
  if (dilations[0] == dilations[1] || dilations[1] == dilations[2] ||
      dilations[0] == dilations[2]) {
    throw std::invalid_argument("FEM dilations must be distinct");
  }
  if (infer_branch < 0 || infer_branch > 2) {
    throw std::invalid_argument("FEM infer_branch must be 0, 1 or 2");
  }
}

void NeckConfig::validate() const {
  for (int c : in_channels) {
    if (c < 1) throw std::invalid_argument("neck channel counts must be >= 1");
  }
  if (width < 1) throw std::invalid_argument("pyramid width must be >= 1");
  aam.validate();
  fem.validate();
  if (aam.mid_channels != width) {
    throw std::invalid_argument(
        "AAM mid_channels must equal the pyramid width: P5 feeds the FEM levels");
  }
}

int aam_pooled_size(double beta, int dim) {
  return std::max(1, static_cast<int>(std::lround(beta * dim)));
}

namespace {

ConvSpec conv_from_store(const WeightStore& weights, const std::string& prefix,
                         int stride, int padding, int dilation) {
  ConvSpec spec;
  spec.kernel = weights.get(prefix + ".kernel");
  spec.bias = weights.get_vector(prefix + ".bias");
  spec.stride = stride;
  spec.padding = padding;
  spec.dilation = dilation;
  return spec;
}

// Frozen batch-norm affine: y = gamma * (x - mean) / sqrt(var + eps) + beta.
Tensor bn_affine(const Tensor& x, const WeightStore& weights,
                 const std::string& prefix, double eps) {
  const auto gamma = weights.get_vector(prefix + ".gamma");
  const auto beta = weights.get_vector(prefix + ".beta");
  const auto mean = weights.get_vector(prefix + ".mean");
  const auto var = weights.get_vector(prefix + ".var");
  if (static_cast<int>(gamma.size()) != x.c()) {
    std::ostringstream os;
    os << prefix << " has " << gamma.size() << " channels, input has " << x.c();
    throw std::invalid_argument(os.str());
  }
  Tensor out = x;
  const std::size_t plane = static_cast<std::size_t>(x.h()) * x.w();
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < x.c(); ++c) {
      const float scale =
          static_cast<float>(gamma[c] / std::sqrt(var[c] + eps));
      const float shift = static_cast<float>(beta[c] - mean[c] * scale);
      float* row = out.row(n, c, 0);
      for (std::size_t i = 0; i < plane; ++i) row[i] = row[i] * scale + shift;
    }
  }
  return out;
}

}  // namespace

Tensor aam_forward(const Tensor& c5, const Tensor& m5, const AAMConfig& cfg,
                   const WeightStore& weights, const std::string& prefix,
                   AamTrace* trace) {
  cfg.validate();
  if (m5.c() != cfg.mid_channels || m5.h() != c5.h() || m5.w() != c5.w()) {
    std::ostringstream os;
    os << "aam expects m5 of shape (n, " << cfg.mid_channels << ", " << c5.h()
       << ", " << c5.w() << "), got " << m5.shape_str();
    throw std::invalid_argument(os.str());
  }

  std::array<Tensor, 3> upsampled;
  std::vector<Tensor> ups_vec;
  for (int i = 0; i < 3; ++i) {
    const int ph = aam_pooled_size(cfg.betas[i], c5.h());
    const int pw = aam_pooled_size(cfg.betas[i], c5.w());
    Tensor pooled = adaptive_avg_pool(c5, ph, pw);
    Tensor ctx = conv2d(pooled, conv_from_store(weights,
                        prefix + ".context" + std::to_string(i) + ".conv",
                        1, 0, 1));
    Tensor up = bilinear_upsample(ctx, c5.h(), c5.w());
    if (trace) {
      trace->pooled[i] = pooled;
      trace->contexts[i] = ctx;
      trace->upsampled[i] = up;
    }
    upsampled[i] = up;
    ups_vec.push_back(std::move(up));
  }

  Tensor merged = concat_channels(ups_vec);
  Tensor attn = conv2d(merged, conv_from_store(weights, prefix + ".attn.conv1", 1, 0, 1));
  attn = ew_relu(attn);
  attn = conv2d(attn, conv_from_store(weights, prefix + ".attn.conv2", 1, 1, 1));
  attn = ew_sigmoid(attn);
  if (attn.c() != 3) {
    throw std::invalid_argument("aam attention head must emit 3 channels, got " +
                                attn.shape_str());
  }

  // One sigmoid channel weights one context feature, broadcast over its
  // channels; the weighted contexts are summed and added to m5.
  Tensor weighted_sum(m5.n(), m5.c(), m5.h(), m5.w());
  for (int i = 0; i < 3; ++i) {
    Tensor wmap(attn.n(), 1, attn.h(), attn.w());
    for (int n = 0; n < attn.n(); ++n) {
      const float* src = attn.row(n, i, 0);
      float* dst = wmap.row(n, 0, 0);
      std::copy(src, src + static_cast<std::size_t>(attn.h()) * attn.w(), dst);
    }
    weighted_sum = ew_add(weighted_sum, ew_hadamard(upsampled[i], wmap));
  }
  if (trace) {
    trace->attention = attn;
    trace->weighted_sum = weighted_sum;
  }
  return ew_add(m5, weighted_sum);
}

Tensor fem_forward(const Tensor& x, const FEMConfig& cfg,
                   const WeightStore& weights, const std::string& prefix) {
  cfg.validate();

  auto run_branch = [&](int b) {
    const std::string bp = prefix + ".branch" + std::to_string(b);
    const int d = cfg.dilations[b];
    Tensor y = conv2d(x, conv_from_store(weights, bp + ".conv", 1, d, d));
    y = bn_affine(y, weights, bp + ".bn", cfg.bn_eps);
    return ew_relu(y);
  };

  if (cfg.mode == FEMMode::Infer) {
    return run_branch(cfg.infer_branch);
  }
  std::vector<Tensor> branches;
  branches.reserve(3);
  for (int b = 0; b < 3; ++b) branches.push_back(run_branch(b));
  return mean_over(branches);
}

std::array<Tensor, 4> affpn_forward(const Tensor& c2, const Tensor& c3,
                                    const Tensor& c4, const Tensor& c5,
                                    const NeckConfig& cfg,
                                    const WeightStore& weights) {
  cfg.validate();
  const Tensor* levels[4] = {&c2, &c3, &c4, &c5};
  for (int i = 0; i < 4; ++i) {
    if (levels[i]->c() != cfg.in_channels[i]) {
      std::ostringstream os;
      os << "level C" << i + 2 << " has " << levels[i]->c()
         << " channels, config says " << cfg.in_channels[i];
      throw std::invalid_argument(os.str());
    }
  }
  for (int i = 0; i < 3; ++i) {
    if (levels[i]->h() != 2 * levels[i + 1]->h() ||
        levels[i]->w() != 2 * levels[i + 1]->w()) {
      std::ostringstream os;
      os << "level C" << i + 2 << " " << levels[i]->shape_str()
         << " is not the stride-2 double of C" << i + 3 << " "
         << levels[i + 1]->shape_str();
      throw std::invalid_argument(os.str());
    }
  }

  auto lateral = [&](const Tensor& c, int level) {
    return conv2d(c, conv_from_store(weights,
                  "lateral.l" + std::to_string(level), 1, 0, 1));
  };

  Tensor m5 = lateral(c5, 5);
  Tensor m6 = aam_forward(c5, m5, cfg.aam, weights);

  std::array<Tensor, 4> out;
  out[3] = m6;  // P5
  Tensor prev = std::move(m6);
  for (int level = 4; level >= 2; --level) {
    const Tensor& c = *levels[level - 2];
    Tensor fused = ew_add(lateral(c, level),
                          bilinear_upsample(prev, c.h(), c.w()));
    Tensor p = fem_forward(fused, cfg.fem, weights,
                           "fem.l" + std::to_string(level));
    out[level - 2] = p;
    prev = std::move(p);
  }
  return out;
}

int effective_receptive_field(int k, int d, std::optional<int> r_prev) {
  if (k < 1 || d < 1 || (r_prev && *r_prev < 1)) {
    throw std::invalid_argument("receptive field arguments must be >= 1");
  }
  return d * (k - 1) + (r_prev ? *r_prev : 1);
}

namespace {

Tensor filled(int n, int c, int h, int w, WeightInit init, Rng& rng, double scale) {
  Tensor t(n, c, h, w);
  if (init == WeightInit::Random) {
    for (auto& v : t.data()) v = static_cast<float>(rng.normal() * scale);
  }
  return t;
}

void add_conv(WeightStore& store, const std::string& prefix, int out_c,
              int in_c, int k, WeightInit init, Rng& rng, double scale) {
  store.put(prefix + ".kernel", filled(out_c, in_c, k, k, init, rng, scale));
  store.put(prefix + ".bias", filled(out_c, 1, 1, 1, init, rng, scale));
}

void add_bn(WeightStore& store, const std::string& prefix, int c) {
  Tensor ones(c, 1, 1, 1, 1.0f);
  store.put(prefix + ".gamma", ones);
  store.put(prefix + ".beta", Tensor(c, 1, 1, 1, 0.0f));
  store.put(prefix + ".mean", Tensor(c, 1, 1, 1, 0.0f));
  store.put(prefix + ".var", ones);
}

}  // namespace

WeightStore make_neck_weights(const NeckConfig& cfg, WeightInit init,
                              std::uint64_t seed, double scale) {
  cfg.validate();
  Rng rng(seed);
  WeightStore store;
  for (int level = 2; level <= 5; ++level) {
    add_conv(store, "lateral.l" + std::to_string(level), cfg.width,
             cfg.in_channels[level - 2], 1, init, rng, scale);
  }
  for (int i = 0; i < 3; ++i) {
    add_conv(store, "aam.context" + std::to_string(i) + ".conv",
             cfg.aam.mid_channels, cfg.in_channels[3], 1, init, rng, scale);
  }
  add_conv(store, "aam.attn.conv1", cfg.aam.mid_channels,
           3 * cfg.aam.mid_channels, 1, init, rng, scale);
  add_conv(store, "aam.attn.conv2", 3, cfg.aam.mid_channels, 3, init, rng, scale);
  for (int level = 2; level <= 4; ++level) {
    for (int b = 0; b < 3; ++b) {
      const std::string bp = "fem.l" + std::to_string(level) + ".branch" +
                             std::to_string(b);
      add_conv(store, bp + ".conv", cfg.width, cfg.width, cfg.fem.kernel,
               init, rng, scale);
      add_bn(store, bp + ".bn", cfg.width);
    }
  }
  return store;
}

}  // namespace afpnkit
