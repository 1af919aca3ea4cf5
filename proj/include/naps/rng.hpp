#pragma once

// Counter-based deterministic random numbers ("splitmix64-counter-v1").
//
// Every draw is a pure function of (key, index): out(i) = mix(key + (i+1)*P)
// where mix is the splitmix64 finalizer and P the 64-bit golden-ratio
// constant. Random access by index means parallel consumers can draw
// non-overlapping values without shared state, which is what makes
// byte-identical output across thread counts possible. std::* distributions
// are deliberately not used anywhere: their output is implementation-defined
// and would break reproducibility across standard libraries.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace naps::rng {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// splitmix64 finalizer (Stafford mix13 variant used by splitmix64).
constexpr std::uint64_t mix(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

// Independent stream key for (key, stream). Both steps are bijective in each
// argument, so distinct streams under one key never alias.
constexpr std::uint64_t derive(std::uint64_t key, std::uint64_t stream) {
  return mix((key ^ mix(stream + kGolden)) + kGolden);
}

// Top 53 bits as a double in [0, 1).
constexpr double to_unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

struct CounterRng {
  std::uint64_t key = 0;
  std::uint64_t counter = 0;

  explicit constexpr CounterRng(std::uint64_t k) : key(k) {}

  // Random access; does not advance the counter.
  constexpr std::uint64_t bits_at(std::uint64_t index) const {
    return mix(key + (index + 1) * kGolden);
  }
  constexpr double unit_at(std::uint64_t index) const {
    return to_unit(bits_at(index));
  }

  // Sequential draws consume indices counter, counter+1, ...
  constexpr std::uint64_t next_bits() { return bits_at(counter++); }
  constexpr double next_unit() { return to_unit(next_bits()); }

  // Integer in [0, bound) by rejection-free scaling (bias < 2^-53 * bound,
  // negligible at library scales; bound must be >= 1).
  std::uint64_t next_below(std::uint64_t bound) {
    return static_cast<std::uint64_t>(next_unit() * static_cast<double>(bound));
  }

  // Standard Gaussian pair via Box-Muller; consumes exactly two uniforms at
  // (index, index+1). The first uniform is shifted into (0,1) so log is safe.
  std::pair<double, double> gauss_pair_at(std::uint64_t index) const {
    double u1 = static_cast<double>((bits_at(index) >> 11) + 1) * 0x1.0p-53;
    double u2 = to_unit(bits_at(index + 1));
    double r = std::sqrt(-2.0 * std::log(u1));
    double t = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(t), r * std::sin(t)};
  }
};

}  // namespace naps::rng
