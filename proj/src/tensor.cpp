#include "afpnkit/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace afpnkit {

Tensor::Tensor(int n, int c, int h, int w, float fill)
    : n_(n), c_(c), h_(h), w_(w) {
  if (n < 1 || c < 1 || h < 1 || w < 1) {
    std::ostringstream os;
    os << "tensor dimensions must be >= 1, got (" << n << ", " << c << ", "
       << h << ", " << w << ")";
    throw std::invalid_argument(os.str());
  }
  data_.assign(static_cast<std::size_t>(n) * c * h * w, fill);
}

Tensor Tensor::from_data(int n, int c, int h, int w, std::vector<float> data) {
  Tensor t(n, c, h, w);
  if (data.size() != t.size()) {
    std::ostringstream os;
    os << "data length " << data.size() << " does not match shape "
       << t.shape_str();
    throw std::invalid_argument(os.str());
  }
  t.data_ = std::move(data);
  return t;
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "(" << n_ << ", " << c_ << ", " << h_ << ", " << w_ << ")";
  return os.str();
}

int conv_out_size(int in, int k, int stride, int padding, int dilation) {
  return (in + 2 * padding - dilation * (k - 1) - 1) / stride + 1;
}

int worker_count() {
  static int cached = [] {
    unsigned hw = std::thread::hardware_concurrency();
    int n = hw == 0 ? 1 : static_cast<int>(hw);
    if (const char* env = std::getenv("AFPNKIT_THREADS")) {
      int cap = std::atoi(env);
      if (cap >= 1 && cap < n) n = cap;
    }
    return n;
  }();
  return cached;
}

namespace {

// Runs fn(i) for i in [0, count) across workers. Each index is handled by
// exactly one worker, so results do not depend on the partitioning.
void parallel_for(int count, const std::function<void(int)>& fn) {
  int workers = std::min(worker_count(), count);
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&, t] {
      for (int i = t; i < count; i += workers) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

Tensor conv2d(const Tensor& input, const ConvSpec& spec) {
  const Tensor& k = spec.kernel;
  if (k.h() != k.w()) {
    throw std::invalid_argument("conv kernel must be square, got " +
                                k.shape_str());
  }
  if (k.c() != input.c()) {
    std::ostringstream os;
    os << "conv input channels mismatch: input " << input.shape_str()
       << " vs kernel " << k.shape_str();
    throw std::invalid_argument(os.str());
  }
  if (spec.stride < 1 || spec.dilation < 1 || spec.padding < 0) {
    throw std::invalid_argument("conv spec requires stride >= 1, dilation >= 1, padding >= 0");
  }
  if (!spec.bias.empty() && static_cast<int>(spec.bias.size()) != k.n()) {
    std::ostringstream os;
    os << "conv bias length " << spec.bias.size() << " does not match "
       << k.n() << " output channels";
    throw std::invalid_argument(os.str());
  }
  const int ks = k.h();
  const int oh = conv_out_size(input.h(), ks, spec.stride, spec.padding, spec.dilation);
  const int ow = conv_out_size(input.w(), ks, spec.stride, spec.padding, spec.dilation);
  if (oh < 1 || ow < 1) {
    std::ostringstream os;
    os << "conv output size " << oh << "x" << ow << " for input "
       << input.shape_str() << " is degenerate";
    throw std::invalid_argument(os.str());
  }

  Tensor out(input.n(), k.n(), oh, ow);
  const int stride = spec.stride, pad = spec.padding, dil = spec.dilation;
  const int ih = input.h(), iw = input.w();

  parallel_for(input.n() * k.n(), [&](int job) {
    const int n = job / k.n();
    const int co = job % k.n();
    const float bias = spec.bias.empty() ? 0.0f : spec.bias[co];
    float* plane = out.row(n, co, 0);
    std::fill(plane, plane + static_cast<std::size_t>(oh) * ow, bias);
    for (int ci = 0; ci < input.c(); ++ci) {
      for (int ky = 0; ky < ks; ++ky) {
        for (int kx = 0; kx < ks; ++kx) {
          const float wgt = k.at(co, ci, ky, kx);
          if (wgt == 0.0f) continue;
          const int off_x = kx * dil - pad;
          // valid output column range: 0 <= oy*stride + off <= iw-1
          int lo = 0, hi = ow;
          if (off_x < 0) lo = (-off_x + stride - 1) / stride;
          if (off_x + (ow - 1) * stride >= iw) hi = (iw - 1 - off_x) / stride + 1;
          if (lo >= hi) continue;
          for (int oy = 0; oy < oh; ++oy) {
            const int iy = oy * stride + ky * dil - pad;
            if (iy < 0 || iy >= ih) continue;
            const float* in_row = input.row(n, ci, iy);
            float* out_row = out.row(n, co, oy);
            if (stride == 1) {
              const float* src = in_row + off_x + lo;
              for (int ox = lo; ox < hi; ++ox) out_row[ox] += wgt * *src++;
            } else {
              for (int ox = lo; ox < hi; ++ox)
                out_row[ox] += wgt * in_row[ox * stride + off_x];
            }
          }
        }
      }
    }
  });
  return out;
}

Tensor adaptive_avg_pool(const Tensor& input, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1 || out_h > input.h() || out_w > input.w()) {
    std::ostringstream os;
    os << "adaptive_avg_pool output " << out_h << "x" << out_w
       << " must be within input " << input.shape_str();
    throw std::invalid_argument(os.str());
  }
  Tensor out(input.n(), input.c(), out_h, out_w);
  const int h = input.h(), w = input.w();
  for (int n = 0; n < input.n(); ++n) {
    for (int c = 0; c < input.c(); ++c) {
      for (int i = 0; i < out_h; ++i) {
        const int y0 = (i * h) / out_h;
        const int y1 = ((i + 1) * h + out_h - 1) / out_h;  // ceil
        for (int j = 0; j < out_w; ++j) {
          const int x0 = (j * w) / out_w;
          const int x1 = ((j + 1) * w + out_w - 1) / out_w;
          double acc = 0.0;
          for (int y = y0; y < y1; ++y) {
            const float* row = input.row(n, c, y);
            for (int x = x0; x < x1; ++x) acc += row[x];
          }
          out.at(n, c, i, j) =
              static_cast<float>(acc / ((y1 - y0) * (x1 - x0)));
        }
      }
    }
  }
  return out;
}

Tensor bilinear_upsample(const Tensor& input, int out_h, int out_w) {
  if (out_h < input.h() || out_w < input.w()) {
    std::ostringstream os;
    os << "bilinear_upsample cannot downsample " << input.shape_str()
       << " to " << out_h << "x" << out_w;
    throw std::invalid_argument(os.str());
  }
  const int h = input.h(), w = input.w();
  Tensor out(input.n(), input.c(), out_h, out_w);

  // Precompute per-axis source indices and weights.
  const double sy = static_cast<double>(h) / out_h;
  const double sx = static_cast<double>(w) / out_w;
  std::vector<int> y0(out_h), y1(out_h);
  std::vector<float> wy(out_h);
  for (int i = 0; i < out_h; ++i) {
    double src = (i + 0.5) * sy - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(h - 1));
    y0[i] = static_cast<int>(src);
    y1[i] = std::min(y0[i] + 1, h - 1);
    wy[i] = static_cast<float>(src - y0[i]);
  }
  std::vector<int> x0(out_w), x1(out_w);
  std::vector<float> wx(out_w);
  for (int j = 0; j < out_w; ++j) {
    double src = (j + 0.5) * sx - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(w - 1));
    x0[j] = static_cast<int>(src);
    x1[j] = std::min(x0[j] + 1, w - 1);
    wx[j] = static_cast<float>(src - x0[j]);
  }

  for (int n = 0; n < input.n(); ++n) {
    for (int c = 0; c < input.c(); ++c) {
      for (int i = 0; i < out_h; ++i) {
        const float* top = input.row(n, c, y0[i]);
        const float* bot = input.row(n, c, y1[i]);
        float* dst = out.row(n, c, i);
        const float fy = wy[i];
        for (int j = 0; j < out_w; ++j) {
          const float fx = wx[j];
          const float a = top[x0[j]] + fx * (top[x1[j]] - top[x0[j]]);
          const float b = bot[x0[j]] + fx * (bot[x1[j]] - bot[x0[j]]);
          dst[j] = a + fy * (b - a);
        }
      }
    }
  }
  return out;
}

Tensor concat_channels(const std::vector<Tensor>& inputs) {
  if (inputs.empty()) {
    throw std::invalid_argument("concat_channels requires at least one input");
  }
  int total_c = 0;
  for (const auto& t : inputs) {
    if (t.n() != inputs[0].n() || t.h() != inputs[0].h() ||
        t.w() != inputs[0].w()) {
      std::ostringstream os;
      os << "concat_channels spatial mismatch: " << inputs[0].shape_str()
         << " vs " << t.shape_str();
      throw std::invalid_argument(os.str());
    }
    total_c += t.c();
  }
  Tensor out(inputs[0].n(), total_c, inputs[0].h(), inputs[0].w());
  const std::size_t plane = static_cast<std::size_t>(out.h()) * out.w();
  for (int n = 0; n < out.n(); ++n) {
    int co = 0;
    for (const auto& t : inputs) {
      for (int c = 0; c < t.c(); ++c, ++co) {
        std::copy(t.row(n, c, 0), t.row(n, c, 0) + plane, out.row(n, co, 0));
      }
    }
  }
  return out;
}

namespace {

void check_broadcastable(const Tensor& a, const Tensor& b) {
  const bool same = a.same_shape(b);
  const bool bcast = b.c() == 1 && a.n() == b.n() && a.h() == b.h() &&
                     a.w() == b.w();
  if (!same && !bcast) {
    std::ostringstream os;
    os << "shapes " << a.shape_str() << " and " << b.shape_str()
       << " are neither equal nor channel-broadcastable";
    throw std::invalid_argument(os.str());
  }
}

}  // namespace

Tensor elementwise(EwKind kind, const Tensor& a, const Tensor* b, float scalar) {
  Tensor out = a;
  switch (kind) {
    case EwKind::Relu:
      for (auto& v : out.data()) v = std::max(0.0f, v);
      return out;
    case EwKind::Sigmoid:
      for (auto& v : out.data()) v = 1.0f / (1.0f + std::exp(-v));
      return out;
    case EwKind::Scale:
      for (auto& v : out.data()) v *= scalar;
      return out;
    case EwKind::Add:
    case EwKind::Hadamard:
      break;
  }
  if (b == nullptr) {
    throw std::invalid_argument("binary elementwise op requires a second operand");
  }
  check_broadcastable(a, *b);
  const bool bcast = !a.same_shape(*b);
  const std::size_t plane = static_cast<std::size_t>(a.h()) * a.w();
  for (int n = 0; n < a.n(); ++n) {
    for (int c = 0; c < a.c(); ++c) {
      float* dst = out.row(n, c, 0);
      const float* src = bcast ? b->row(n, 0, 0) : b->row(n, c, 0);
      if (kind == EwKind::Add) {
        for (std::size_t i = 0; i < plane; ++i) dst[i] += src[i];
      } else {
        for (std::size_t i = 0; i < plane; ++i) dst[i] *= src[i];
      }
    }
  }
  return out;
}

Tensor ew_add(const Tensor& a, const Tensor& b) { return elementwise(EwKind::Add, a, &b); }
Tensor ew_hadamard(const Tensor& a, const Tensor& b) { return elementwise(EwKind::Hadamard, a, &b); }
Tensor ew_relu(const Tensor& a) { return elementwise(EwKind::Relu, a); }
Tensor ew_sigmoid(const Tensor& a) { return elementwise(EwKind::Sigmoid, a); }
Tensor ew_scale(const Tensor& a, float s) { return elementwise(EwKind::Scale, a, nullptr, s); }

Tensor mean_over(const std::vector<Tensor>& inputs) {
  if (inputs.empty()) {
    throw std::invalid_argument("mean_over requires at least one input");
  }
  for (const auto& t : inputs) {
    if (!t.same_shape(inputs[0])) {
      std::ostringstream os;
      os << "mean_over shape mismatch: " << inputs[0].shape_str() << " vs "
         << t.shape_str();
      throw std::invalid_argument(os.str());
    }
  }
  // Accumulate in double and divide once: the mean of identical inputs is
  // then bit-exact, and mixed inputs lose nothing to float summation order.
  Tensor out = inputs[0];
  const double n = static_cast<double>(inputs.size());
  auto& dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    double acc = dst[i];
    for (std::size_t k = 1; k < inputs.size(); ++k) acc += inputs[k].data()[i];
    dst[i] = static_cast<float>(acc / n);
  }
  return out;
}

std::vector<double> finite_diff_grad(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> x, double eps) {
  if (eps <= 0.0) throw std::invalid_argument("finite_diff_grad requires eps > 0");
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + eps;
    const double fp = f(x);
    x[i] = orig - eps;
    const double fm = f(x);
    x[i] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw std::runtime_error("finite_diff_grad: function value is not finite");
    }
    grad[i] = (fp - fm) / (2.0 * eps);
  }
  return grad;
}

}  // namespace afpnkit
