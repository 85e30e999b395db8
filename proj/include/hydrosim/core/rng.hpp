#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <string_view>

namespace hydrosim {

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  return h;
}

}  // namespace detail

/// Counter-based generator: output i is a pure function of (key, i).
/// Satisfies UniformRandomBitGenerator so it plugs into <random>
/// distributions.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  constexpr explicit CounterRng(std::uint64_t key) : key_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() {
    return detail::splitmix64(key_ ^ detail::splitmix64(counter_++));
  }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Derives independent streams from a master seed by (label, index).
/// Adding a new label never changes the draws of existing labels.
class RngFactory {
 public:
  explicit RngFactory(std::uint64_t seed) : seed_(seed) {}

  CounterRng stream(std::string_view label, std::uint64_t index = 0) const {
    const std::uint64_t k1 = detail::splitmix64(seed_ ^ detail::fnv1a(label));
    return CounterRng(detail::splitmix64(k1 + 0xD1B54A32D192ED03ull * (index + 1)));
  }

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
};

/// Uniform double in [0, 1) from any URBG.
template <class Rng>
double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

/// Zero-mean normal draw; sigma <= 0 gives exactly 0 without drawing.
template <class Rng>
double gaussian(Rng& rng, double sigma) {
  if (!(sigma > 0.0)) return 0.0;
  return std::normal_distribution<double>(0.0, sigma)(rng);
}

}  // namespace hydrosim
