#pragma once

#include <array>
#include <optional>
#include <string>

#include "afpnkit/tensor.hpp"
#include "afpnkit/weights.hpp"

namespace afpnkit {

/// Adaptive attention module parameters. The three pooling coefficients
/// must be strictly increasing within [0.1, 0.5].
struct AAMConfig {
  std::array<double, 3> betas = {0.1, 0.3, 0.5};
  int mid_channels = 256;

  void validate() const;
};

enum class FEMMode { Train, Infer };

/// Feature enhancement module parameters: three parallel 3x3 dilated
/// convolutions, each followed by a frozen batch-norm affine and ReLU.
/// Padding equals the dilation so spatial size is preserved. Train mode
/// averages the branches; infer mode runs a single configured branch.
struct FEMConfig {
  int kernel = 3;
  std::array<int, 3> dilations = {1, 3, 5};
  FEMMode mode = FEMMode::Train;
  int infer_branch = 1;  // middle (d = 3) branch by default
  double bn_eps = 1e-5;

  void validate() const;
};

struct NeckConfig {
  std::array<int, 4> in_channels = {64, 128, 256, 512};  // C2..C5
  int width = 256;                                       // pyramid channels
  AAMConfig aam;
  FEMConfig fem;

  void validate() const;
};

/// Intermediates of one AAM pass, exposed for verification.
struct AamTrace {
  std::array<Tensor, 3> pooled;     // adaptive pooling of C5 per beta
  std::array<Tensor, 3> contexts;   // after the 1x1 channel projection
  std::array<Tensor, 3> upsampled;  // back at C5's spatial size
  Tensor attention;                 // 3-channel sigmoid weight map
  Tensor weighted_sum;              // sum of weighted contexts (M6 - M5)
};

/// Pooled size for one axis: round(beta * dim), floored at 1.
int aam_pooled_size(double beta, int dim);

/// Aggregates multi-scale context from c5 into m5, producing M6.
/// Weight names are rooted at `prefix`: "<prefix>.context{0,1,2}.conv",
/// "<prefix>.attn.conv1" (1x1), "<prefix>.attn.conv2" (3x3, 3 outputs).
Tensor aam_forward(const Tensor& c5, const Tensor& m5, const AAMConfig& cfg,
                   const WeightStore& weights,
                   const std::string& prefix = "aam",
                   AamTrace* trace = nullptr);

/// Multi-branch dilated-conv enhancement. Weight names per branch b:
/// "<prefix>.branch{b}.conv.{kernel,bias}" and
/// "<prefix>.branch{b}.bn.{gamma,beta,mean,var}".
Tensor fem_forward(const Tensor& x, const FEMConfig& cfg,
                   const WeightStore& weights,
                   const std::string& prefix = "fem");

/// Top-down pyramid: M5 = 1x1 lateral of C5, M6 = AAM(C5, M5), P5 = M6,
/// then each lower level adds its lateral to the upsampled upper output
/// and runs the FEM. Inputs must halve spatially level to level.
/// Returns {P2, P3, P4, P5}.
std::array<Tensor, 4> affpn_forward(const Tensor& c2, const Tensor& c3,
                                    const Tensor& c4, const Tensor& c5,
                                    const NeckConfig& cfg,
                                    const WeightStore& weights);

/// Receptive field of a dilated convolution: d*(k-1)+1 for the first
/// layer, d*(k-1)+r_prev when stacked on a previous field.
int effective_receptive_field(int k, int d,
                              std::optional<int> r_prev = std::nullopt);

enum class WeightInit { Zero, Random };

/// Synthesizes a complete weight store for affpn_forward under `cfg`.
/// Random init draws from N(0, scale) with a seeded generator.
WeightStore make_neck_weights(const NeckConfig& cfg, WeightInit init,
                              std::uint64_t seed = 0, double scale = 0.05);

}  // namespace afpnkit
