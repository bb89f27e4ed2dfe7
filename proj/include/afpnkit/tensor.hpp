#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace afpnkit {

/// Dense rank-4 tensor (batch, channels, height, width), row-major float32.
/// All operations on tensors are value-semantic: inputs are never mutated.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int n, int c, int h, int w, float fill = 0.0f);

  static Tensor from_data(int n, int c, int h, int w, std::vector<float> data);

  int n() const { return n_; }
  int c() const { return c_; }
  int h() const { return h_; }
  int w() const { return w_; }
  std::size_t size() const { return data_.size(); }

  float& at(int n, int c, int y, int x) {
    return data_[((static_cast<std::size_t>(n) * c_ + c) * h_ + y) * w_ + x];
  }
  float at(int n, int c, int y, int x) const {
    return data_[((static_cast<std::size_t>(n) * c_ + c) * h_ + y) * w_ + x];
  }

  float* row(int n, int c, int y) {
    return data_.data() + ((static_cast<std::size_t>(n) * c_ + c) * h_ + y) * w_;
  }
  const float* row(int n, int c, int y) const {
    return data_.data() + ((static_cast<std::size_t>(n) * c_ + c) * h_ + y) * w_;
  }

  const std::vector<float>& data() const { return data_; }
  std::vector<float>& data() { return data_; }

  bool same_shape(const Tensor& o) const {
    return n_ == o.n_ && c_ == o.c_ && h_ == o.h_ && w_ == o.w_;
  }

  std::string shape_str() const;

 private:
  int n_ = 0, c_ = 0, h_ = 0, w_ = 0;
  std::vector<float> data_;
};

/// 2-d convolution parameters. The kernel tensor is laid out
/// (out_channels, in_channels, k, k).
struct ConvSpec {
  Tensor kernel;
  std::vector<float> bias;  // length out_channels; empty means all-zero
  int stride = 1;
  int padding = 0;
  int dilation = 1;
};

/// Spatial size produced by a convolution along one axis.
int conv_out_size(int in, int k, int stride, int padding, int dilation);

/// Cross-correlation with zero padding and dilation, bias added per
/// output channel. Throws std::invalid_argument on shape mismatch,
/// naming both shapes.
Tensor conv2d(const Tensor& input, const ConvSpec& spec);

/// Adaptive average pooling: output cell (i, j) is the mean of the input
/// window [floor(i*h/oh), ceil((i+1)*h/oh)) x [floor(j*w/ow), ceil((j+1)*w/ow)).
Tensor adaptive_avg_pool(const Tensor& input, int out_h, int out_w);

/// Bilinear upsampling, align-corners-false: source coordinate is
/// (dst + 0.5) * scale - 0.5, clamped to the valid range. Requested
/// output must not be smaller than the input.
Tensor bilinear_upsample(const Tensor& input, int out_h, int out_w);

/// Concatenate along the channel axis; all inputs must share n, h, w.
Tensor concat_channels(const std::vector<Tensor>& inputs);

enum class EwKind { Add, Hadamard, Relu, Sigmoid, Scale };

/// Pointwise ops. Binary kinds accept equal shapes or a single-channel b
/// broadcast across a's channels. Scale multiplies by a scalar.
Tensor elementwise(EwKind kind, const Tensor& a, const Tensor* b = nullptr,
                   float scalar = 0.0f);

Tensor ew_add(const Tensor& a, const Tensor& b);
Tensor ew_hadamard(const Tensor& a, const Tensor& b);
Tensor ew_relu(const Tensor& a);
Tensor ew_sigmoid(const Tensor& a);
Tensor ew_scale(const Tensor& a, float s);

/// Elementwise mean over a non-empty sequence of same-shape tensors.
Tensor mean_over(const std::vector<Tensor>& inputs);

/// Central-difference gradient oracle:
/// g_i = (f(x + eps*e_i) - f(x - eps*e_i)) / (2*eps).
/// Throws if f returns a non-finite value.
std::vector<double> finite_diff_grad(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> x, double eps);

/// Worker count used by the conv inner loops: min(AFPNKIT_THREADS if set,
/// hardware concurrency). Partitioning never changes results.
int worker_count();

}  // namespace afpnkit
