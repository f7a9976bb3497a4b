#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace seatq {

// All randomness in the toolkit flows through std::mt19937_64, whose output
// sequence is fixed by the standard. The std distributions are not (their
// algorithms are implementation-defined), so the few conversions we need are
// written out here to keep scripts identical across standard libraries.
using Engine = std::mt19937_64;

// SplitMix64 finalizer. Used to derive independent substream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Substream seed for (seed, a, b): mix64(mix64(mix64(seed) ^ a) ^ b).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                                    std::uint64_t b = 0) {
  return mix64(mix64(mix64(seed) ^ a) ^ b);
}

// Uniform on [0, 1) from the top 53 bits of one draw.
inline double uniform_unit(Engine& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform on the open interval (0, 1) from the top 52 bits of one draw,
// offset by half a step. Every value is exactly representable.
inline double uniform_open_unit(Engine& rng) {
  return (static_cast<double>(rng() >> 12) + 0.5) * 0x1.0p-52;
}

// Exponential with the given mean by inversion: -mean * log(1 - u), u in [0,1).
inline double exponential(Engine& rng, double mean) {
  return -mean * std::log1p(-uniform_unit(rng));
}

// Bernoulli(p) as u < p with u in [0,1); p = 0 never fires, p = 1 always does.
inline bool bernoulli(Engine& rng, double p) { return uniform_unit(rng) < p; }

// Standard normal by Box-Muller, two draws per sample (the sine branch is
// discarded so each call consumes a fixed number of draws).
inline double standard_normal(Engine& rng) {
  const double u1 = uniform_open_unit(rng);
  const double u2 = uniform_unit(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

// Uniform integer in [0, n) by rejection on the top bits. n > 0.
inline std::uint64_t uniform_index(Engine& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

}  // namespace seatq
