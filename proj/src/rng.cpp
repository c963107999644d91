#include "optlist/rng.hpp"

#include <cmath>

#include "optlist/errors.hpp"

namespace optlist {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;
constexpr std::uint64_t kWordSalt[4] = {
    0x8CB92BA72F3D8DD7ull, 0xD1B54A32D192ED03ull, 0xA24BAED4963EE407ull,
    0x9FB21C651E98DF25ull};
}  // namespace

RngKey RngKey::from_seed(std::uint64_t seed) {
  RngKey k;
  for (int i = 0; i < 4; ++i) {
    k.s_[i] = mix64(seed + kGolden * static_cast<std::uint64_t>(i + 1));
  }
  return k;
}

RngKey RngKey::child(std::uint64_t label) const {
  RngKey k;
  for (int i = 0; i < 4; ++i) {
    k.s_[i] = mix64(s_[i] ^ mix64(label + kWordSalt[i]));
  }
  // Cross-mix so every output word depends on every parent word.
  k.s_[0] = mix64(k.s_[0] + k.s_[3]);
  k.s_[1] = mix64(k.s_[1] + k.s_[0]);
  k.s_[2] = mix64(k.s_[2] + k.s_[1]);
  k.s_[3] = mix64(k.s_[3] + k.s_[2]);
  return k;
}

RngKey RngKey::child(std::string_view label) const {
  return child(fnv1a64(label));
}

std::uint64_t RngKey::at(std::uint64_t i) const {
  const std::uint64_t a = mix64(s_[0] + i * kGolden);
  const std::uint64_t b = mix64(s_[1] ^ (i * kWordSalt[1] + kWordSalt[0]));
  return mix64(a + (b ^ s_[2])) + s_[3];
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
  if (hi < lo) throw UsageError("uniform: hi < lo");
  return lo + uniform() * (hi - lo);
}

double Rng::log_uniform(double lo, double hi) {
  if (lo <= 0.0 || hi < lo) throw UsageError("log_uniform: need 0 < lo <= hi");
  if (lo == hi) {
    next_u64();  // keep the stream position consistent
    return lo;
  }
  const double u = uniform();
  return std::exp(std::log(lo) + u * (std::log(hi) - std::log(lo)));
}

double Rng::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  // Box-Muller; u1 in (0,1] so the log is finite.
  const double u1 =
      (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * 3.141592653589793238462643383279502884 * u2;
  cached_normal_ = r * std::sin(theta);
  has_cached_normal_ = true;
  return r * std::cos(theta);
}

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
  if (hi < lo) throw UsageError("uniform_int: hi < lo");
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  const std::uint64_t x = next_u64();
  const std::uint64_t r = static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(x) * span) >> 64);
  return lo + static_cast<std::int64_t>(r);
}

bool Rng::bernoulli(double p) { return uniform() < p; }

double log_uniform(RngKey key, double lo, double hi) {
  Rng rng(key);
  return rng.log_uniform(lo, hi);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

}  // namespace optlist
