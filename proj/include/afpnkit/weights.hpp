#pragma once

#include <map>
#include <string>
#include <vector>

#include "afpnkit/tensor.hpp"

namespace afpnkit {

/// Named parameter tensors, read-only once loaded.
///
/// Container format: a JSON manifest mapping each name to
/// {shape, dtype:"f32", offset, length} plus a "blob" entry naming a
/// sibling file of little-endian raw float32 values. Offsets and lengths
/// are element counts, not bytes. Manifest order is irrelevant.
class WeightStore {
 public:
  void put(const std::string& name, Tensor t);

  bool contains(const std::string& name) const;

  /// Throws std::out_of_range naming the tensor when absent.
  const Tensor& get(const std::string& name) const;

  /// Flat row-major values of a named tensor, for bias vectors.
  std::vector<float> get_vector(const std::string& name) const;

  std::vector<std::string> names() const;
  std::size_t count() const { return tensors_.size(); }

  /// Writes `<path>` (manifest) and the blob file it references.
  /// The blob defaults to the manifest path with a ".bin" suffix.
  void save(const std::string& manifest_path) const;

  static WeightStore load(const std::string& manifest_path);

 private:
  std::map<std::string, Tensor> tensors_;
};

}  // namespace afpnkit
