#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace bsweyl {

/// Per-shard deterministic generator: the stream depends only on (seed, shard).
inline std::mt19937_64 shard_rng(std::uint64_t seed, std::uint64_t shard) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(shard), static_cast<std::uint32_t>(shard >> 32), 0x5eedu};
  return std::mt19937_64(seq);
}

/// Radical inverse of i in the given base.
double radical_inverse(std::uint64_t i, unsigned base);

/// Halton point number i in [0,1)^dim, Cranley-Patterson rotated by shift
/// (shift may be empty for the plain sequence).
void halton_point(std::uint64_t i, const std::vector<double>& shift, std::vector<double>& out);

unsigned nth_prime(unsigned k);

}  // namespace bsweyl
