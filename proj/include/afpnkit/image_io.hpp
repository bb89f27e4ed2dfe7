#pragma once

#include <string>

#include "afpnkit/tensor.hpp"

namespace afpnkit {

/// Reads a binary 8-bit PPM (P6, maxval 255) into a 1x3xHxW tensor with
/// values v/255. Throws std::runtime_error on malformed input.
Tensor read_ppm(const std::string& path);

/// Writes a 1x3xHxW tensor as binary PPM, mapping each value through
/// round(clamp(v, 0, 1) * 255).
void write_ppm(const std::string& path, const Tensor& img);

}  // namespace afpnkit
