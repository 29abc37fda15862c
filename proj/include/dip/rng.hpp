#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace dip {

/// Seedable random source. Wraps std::mt19937_64 and implements every
/// distribution in-library, so a (seed, call sequence) pair reproduces the
/// identical stream on any platform; standard-library distributions are
/// implementation-defined and would break that contract.
///
/// Draw accounting, for reproducibility reasoning:
///   uniform()              1 engine step
///   normal()               2 uniforms (Box-Muller, no cached spare)
///   gamma(shape >= 1)      variable (Marsaglia-Tsang rejection)
///   gamma(shape <  1)      gamma(shape+1) draws plus 1 uniform (power boost)
///   beta(a, b)             gamma(a) then gamma(b)
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), eng_(seed) {}

  std::uint64_t seed() const { return seed_; }

  /// Independent child stream derived from (construction seed, stream index).
  /// Deriving the same index twice yields the same stream; replica-parallel
  /// code uses derive(replica) so results do not depend on execution order.
  Rng derive(std::uint64_t stream) const { return Rng(mix(seed_, stream)); }

  std::uint64_t next_u64() { return eng_(); }

  /// Uniform on [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  /// Uniform on (0, 1]; safe under log().
  double uniform_open() { return 1.0 - uniform(); }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  /// Uniform index in {0, ..., n-1}.
  std::size_t uniform_index(std::size_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
    std::size_t i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return i < n ? i : n - 1;
  }

  /// Standard normal via Box-Muller. Always consumes exactly two uniforms.
  double normal() {
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Gamma(shape, 1). Marsaglia-Tsang for shape >= 1; for shape < 1 the
  /// boosted draw gamma(shape+1) * U^(1/shape). Tiny shapes may underflow to
  /// zero; callers that normalize vectors of small-shape draws should use
  /// log_gamma_draw instead.
  double gamma(double shape) {
    check_shape(shape);
    if (shape < 1.0) {
      const double g = gamma(shape + 1.0);
      const double u = uniform_open();
      return g * std::pow(u, 1.0 / shape);
    }
    return gamma_mt(shape);
  }

  /// log of a Gamma(shape, 1) draw; exact in log space for small shapes.
  double log_gamma_draw(double shape) {
    check_shape(shape);
    if (shape < 1.0) {
      const double lg = std::log(gamma_mt(shape + 1.0));
      const double u = uniform_open();
      return lg + std::log(u) / shape;
    }
    return std::log(gamma_mt(shape));
  }

  double beta(double a, double b) {
    const double x = gamma(a);
    const double y = gamma(b);
    if (x == 0.0 && y == 0.0) return 0.5;
    return x / (x + y);
  }

 private:
  static void check_shape(double shape) {
    if (!(shape > 0.0) || !std::isfinite(shape))
      throw std::invalid_argument("gamma: shape must be positive and finite");
  }

  // Marsaglia & Tsang (2000), valid for shape >= 1.
  double gamma_mt(double shape) {
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_open();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  // splitmix64 finalizer over seed + golden-ratio multiples of the stream id.
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::mt19937_64 eng_;
};

/// Weights proportional to independent Gamma(shapes[i], 1) draws, normalized
/// to sum to one. Works in log space so very small shapes keep their relative
/// scale instead of underflowing jointly.
inline std::vector<double> normalized_gamma_weights(
    std::span<const double> shapes, Rng& rng) {
  if (shapes.empty())
    throw std::invalid_argument("normalized_gamma_weights: empty shape list");
  std::vector<double> logs(shapes.size());
  for (std::size_t i = 0; i < shapes.size(); ++i)
    logs[i] = rng.log_gamma_draw(shapes[i]);
  double mx = logs[0];
  for (double l : logs) mx = std::max(mx, l);
  std::vector<double> w(shapes.size());
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = std::exp(logs[i] - mx);
    total += w[i];
  }
  for (double& x : w) x /= total;
  return w;
}

/// Kahan-compensated accumulator; keeps reductions order-robust.
class CompensatedSum {
 public:
  void add(double x) {
    const double y = x - c_;
    const double t = s_ + y;
    c_ = (t - s_) - y;
    s_ = t;
  }
  double value() const { return s_; }

 private:
  double s_ = 0.0;
  double c_ = 0.0;
};

}  // namespace dip
