#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <string_view>

namespace gepop {

/// All stochastic components draw from a single mt19937_64 stream per run.
/// The helpers below avoid std::uniform_*_distribution on purpose: their
/// output is implementation-defined, and run outputs must be reproducible
/// bit-for-bit across standard libraries.
using Rng = std::mt19937_64;

/// Uniform double in [0, 1), 53-bit resolution.
inline double unit_real(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n). Rejection sampling, no modulo bias.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  // values below 2^64 mod n are rejected so every residue is equally likely
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t r = rng();
    if (r >= threshold) return r % n;
  }
}

/// Uniform double in [lo, hi).
inline double uniform_real(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * unit_real(rng);
}

/// FNV-1a over a byte string. Used to derive per-run seeds from run
/// coordinates; stable across platforms and releases.
inline std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace gepop
