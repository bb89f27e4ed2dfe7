#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

namespace afpnkit {

/// Seeded random source with portable draw semantics.
///
/// std::mt19937_64 itself is fully specified by the standard, but the
/// <random> distributions are not, so the mapping from raw engine output
/// to uniform/normal variates is done here. Identical seeds therefore
/// produce identical artifacts on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Rejection-free modulo is fine here: n is
  /// always tiny compared to 2^64, the bias is on the order of n/2^64.
  std::uint64_t uniform_int(std::uint64_t n) { return engine_() % n; }

  /// Standard normal via Box-Muller.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  /// Derive an independent stream, e.g. one per worker.
  Rng split() { return Rng(engine_() ^ 0x9e3779b97f4a7c15ull); }

  /// Full engine state, round-trippable through a checkpoint file.
  std::string state() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
  }

  void set_state(const std::string& s) {
    std::istringstream is(s);
    is >> engine_;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace afpnkit
