#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "afpnkit/box.hpp"
#include "afpnkit/rng.hpp"
#include "afpnkit/tensor.hpp"

namespace afpnkit {

/// The fifteen augmentation operations, in controller head order.
enum class AugKind : int {
  TranslateX = 0,
  TranslateY,
  Shear,
  Rotate,
  Zoom,
  Brightness,
  Contrast,
  ColorJitter,
  Noise,
  Blur,
  Erasing,
  CutMix,
  Mixup,
  SnapMix,
  Mosaic,
};

inline constexpr int kNumAugKinds = 15;
inline constexpr int kNumMagLevels = 11;   // D
inline constexpr int kNumProbLevels = 10;  // P

/// Stable snake_case identifier used in policy files ("translate_x", ...).
const char* kind_name(AugKind k);
AugKind kind_from_name(const std::string& name);  // throws on unknown names

struct LabeledBox {
  BBox box;
  int class_id = 0;
  double weight = 1.0;  // mixing provenance; multiplied on each mixing op
};

/// One image with its annotations. Pixel values live in [0, 1] and are
/// re-clamped after every operation. label_weights is an optional
/// per-class distribution (empty map = absent) that mixing operations
/// blend and renormalize to sum 1.
struct Sample {
  Tensor image;  // (1, 3, H, W)
  std::vector<LabeledBox> boxes;
  std::map<int, double> label_weights;
};

/// One slot of a sub-policy: which op, how likely, how strong.
/// probability = prob_level / 9 so levels 0 and 9 reach exactly 0 and 1;
/// magnitude = mag_level / 10 mapped linearly into the op's range.
struct AugOpSpec {
  AugKind kind = AugKind::TranslateX;
  int prob_level = 0;  // 0..9
  int mag_level = 0;   // 0..10

  void validate() const;
  double probability() const { return prob_level / 9.0; }
};

struct SubPolicy {
  std::array<AugOpSpec, 2> ops;
};

struct Policy {
  std::array<SubPolicy, 5> subs;
};

/// Mapped magnitude for a level. Documented ranges:
///   translate_x/y  signed fraction of width/height, +-0.25
///   shear          signed horizontal factor, +-0.3
///   rotate         signed degrees, +-30
///   zoom           scale factor in [0.5, 1.5] (level 5 = 1.0)
///   brightness     signed additive offset, +-0.3
///   contrast       factor in [0.5, 1.5] about mid-gray
///   color_jitter   per-channel gain half-range in [0, 0.3]
///   noise          gaussian sigma in [0, 0.1]
///   blur           box-filter radius in [0, 3] (rounded)
///   erasing        zeroed-rectangle area fraction in [0, 0.2]
///   cutmix         pasted-patch area fraction in [0, 0.5]
///   mixup          pool-image blend weight in [0, 0.5]
///   snapmix        target-patch area fraction in [0, 0.5]
///   mosaic         quadrant split jitter fraction in [0, 0.25]
double op_magnitude(AugKind kind, int mag_level);

/// Applies `spec` to `s` with probability prob_level/9. The gate consumes
/// exactly one uniform draw; a skipped op performs no further draws and
/// returns the input unchanged. Mixing ops read partners from `pool`
/// (>= 3 samples for mosaic, >= 1 for cutmix/mixup/snapmix) and throw
/// std::invalid_argument when the pool is missing or too small.
Sample apply_op(const Sample& s, const AugOpSpec& spec, Rng& rng,
                const std::vector<Sample>* pool = nullptr);

/// The two ops in order, second fed with the first's output.
Sample apply_subpolicy(const Sample& s, const SubPolicy& sub, Rng& rng,
                       const std::vector<Sample>* pool = nullptr);

/// Uniformly picks one of the five sub-policies, then applies it.
Sample apply_policy(const Sample& s, const Policy& p, Rng& rng,
                    const std::vector<Sample>* pool = nullptr);

/// Policy interchange format: a JSON array of 5 sub-policies, each an
/// array of 2 records {"kind": string, "prob_level": 0..9, "mag_level":
/// 0..10}.
Policy policy_from_json_text(const std::string& text);
std::string policy_to_json_text(const Policy& p);
Policy load_policy(const std::string& path);
void save_policy(const std::string& path, const Policy& p);

/// Bilinear resize in either direction (point-sampled, align-corners
/// false); used by the compositing ops, exposed for the CLI.
Tensor resize_bilinear(const Tensor& img, int out_h, int out_w);

}  // namespace afpnkit
