#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace lungmix {

/// splitmix64 finalizer; used to derive independent per-record streams.
std::uint64_t mix64(std::uint64_t x);

/// Seed for stream `index` under `master_seed`. Independent of scheduling order.
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index);

/// Seeded random stream. The engine (mt19937_64) and every conversion below are
/// fully specified, so a given seed yields the same values on every platform.
class Rng {
 public:
  using engine_type = std::mt19937_64;
  using result_type = engine_type::result_type;

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on (0, 1], 53-bit resolution.
  double uniform();
  /// Uniform integer in [0, n). n must be positive.
  std::size_t below(std::size_t n);
  bool coin() { return (engine_() >> 63) != 0; }
  /// Beta(alpha, beta) variate.
  double beta(double alpha, double beta);

  Rng split(std::uint64_t index) { return Rng(derive_seed(engine_(), index)); }

  // UniformRandomBitGenerator interface, so library distributions accept Rng.
  static constexpr result_type min() { return engine_type::min(); }
  static constexpr result_type max() { return engine_type::max(); }
  result_type operator()() { return engine_(); }

 private:
  engine_type engine_;
};

}  // namespace lungmix
