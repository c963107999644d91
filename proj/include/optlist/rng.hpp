#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace optlist {

// splitmix64 finalizer; full avalanche over 64 bits.
inline constexpr std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ull;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBull;
  x ^= x >> 31;
  return x;
}

// Counter-based splittable RNG key: 256 bits of state, children derived by
// hashing the parent state with an integer (or string) path label. Same
// (state, path) always yields the same child; draws are pure functions of
// (state, counter), so streams are reproducible regardless of thread count.
class RngKey {
 public:
  RngKey() = default;

  static RngKey from_seed(std::uint64_t seed);

  RngKey child(std::uint64_t label) const;
  RngKey child(std::string_view label) const;

  // i-th 64-bit draw of this key's stream.
  std::uint64_t at(std::uint64_t i) const;

  std::uint64_t word(int i) const { return s_[i]; }

  bool operator==(const RngKey& other) const { return s_ == other.s_; }

 private:
  std::array<std::uint64_t, 4> s_{};
};

// Stateful cursor over one key's counter stream. Cheap to construct; not
// shared across threads (each worker derives its own key instead).
class Rng {
 public:
  explicit Rng(RngKey key) : key_(key) {}

  std::uint64_t next_u64() { return key_.at(ctr_++); }

  // [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  double log_uniform(double lo, double hi);
  // Standard normal via Box-Muller (pairs cached). libm sin/cos may differ
  // in the last ulp across platforms; tolerated and documented.
  double normal();
  // Inclusive range; bias below 2^-64 via 128-bit multiply reduction.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  bool bernoulli(double p);

 private:
  RngKey key_;
  std::uint64_t ctr_ = 0;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

// exp(Uniform(ln lo, ln hi)) evaluated on the key's first draws.
// Throws UsageError unless 0 < lo <= hi.
double log_uniform(RngKey key, double lo, double hi);

// FNV-1a over bytes; used for path labels and content hashes.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace optlist
