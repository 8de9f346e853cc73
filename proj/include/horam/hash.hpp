#pragma once

#include <cstdint>
#include <random>

#include "errors.hpp"

namespace horam {

/// Signed logical address. Positive values are real cells, negative values
/// are dummy items.
using LogicalKey = std::int64_t;

inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Keyed pseudorandom function on 64-bit words.
inline constexpr std::uint64_t keyed_prf(std::uint64_t seed, std::uint64_t x) {
  return mix64(mix64(x ^ seed) + seed * 0x9e3779b97f4a7c15ULL);
}

/// Maps a uniform 64-bit word onto [0, range).
inline constexpr std::uint64_t reduce_range(std::uint64_t word, std::uint64_t range) {
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(word) * range) >> 64);
}

struct SeedPair {
  std::uint64_t first = 0;
  std::uint64_t second = 0;
  bool operator==(const SeedPair&) const = default;
};

/// The two cuckoo hash functions h1, h2 over [0, range_m).
class HashPair {
 public:
  HashPair() = default;
  HashPair(SeedPair seeds, std::uint64_t range_m) : seeds_(seeds), range_m_(range_m) {
    if (range_m == 0) throw ParameterError("hash range must be positive");
  }

  std::uint64_t h1(LogicalKey x) const {
    return reduce_range(keyed_prf(seeds_.first, static_cast<std::uint64_t>(x)), range_m_);
  }
  std::uint64_t h2(LogicalKey x) const {
    return reduce_range(keyed_prf(seeds_.second, static_cast<std::uint64_t>(x)), range_m_);
  }

  std::uint64_t range() const { return range_m_; }
  SeedPair seeds() const { return seeds_; }

 private:
  SeedPair seeds_{};
  std::uint64_t range_m_ = 1;
};

/// Deterministic source of fresh seeds.
class SeedSource {
 public:
  explicit SeedSource(std::uint64_t seed) : rng_(seed) {}
  SeedPair next_pair() { return {rng_(), rng_()}; }
  std::uint64_t next() { return rng_(); }
  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

}  // namespace horam
