#include <algorithm>
#include <cmath>
#include <vector>

#include <doctest.h>

#include "optlist/errors.hpp"
#include "optlist/rng.hpp"

using namespace optlist;

namespace {

// Kolmogorov-Smirnov distance of samples against U(0, 1).
double ks_against_uniform(std::vector<double> samples) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double cdf = samples[i];
    d = std::max(d, std::abs(cdf - static_cast<double>(i) / n));
    d = std::max(d, std::abs(cdf - static_cast<double>(i + 1) / n));
  }
  return d;
}

}  // namespace

TEST_CASE("key derivation is deterministic") {
  const RngKey a = RngKey::from_seed(42).child("alpha").child(7);
  const RngKey b = RngKey::from_seed(42).child("alpha").child(7);
  CHECK(a == b);
  for (int i = 0; i < 16; ++i) {
    CHECK(a.at(i) == b.at(i));
  }
  CHECK_FALSE(RngKey::from_seed(42).child(1) == RngKey::from_seed(42).child(2));
}

TEST_CASE("distinct child paths give independent uniform streams") {
  const RngKey parent = RngKey::from_seed(123);
  const int n = 100000;
  std::vector<double> u1(n), u2(n);
  Rng r1(parent.child("stream_a"));
  Rng r2(parent.child("stream_b"));
  for (int i = 0; i < n; ++i) {
    u1[i] = r1.uniform();
    u2[i] = r2.uniform();
  }
  CHECK(ks_against_uniform(u1) < 0.02);
  CHECK(ks_against_uniform(u2) < 0.02);
  double corr = 0.0;
  for (int i = 0; i < n; ++i) corr += (u1[i] - 0.5) * (u2[i] - 0.5);
  corr /= n * (1.0 / 12.0);
  CHECK(std::abs(corr) < 0.02);
}

TEST_CASE("log_uniform degenerate range returns lo exactly") {
  CHECK(log_uniform(RngKey::from_seed(0), 3.0, 3.0) == 3.0);
}

TEST_CASE("log_uniform stays in range") {
  const RngKey key = RngKey::from_seed(7);
  for (int i = 0; i < 1000; ++i) {
    const double v = log_uniform(key.child(i), 1e-8, 10.0);
    CHECK(v >= 1e-8);
    CHECK(v <= 10.0);
  }
}

TEST_CASE("log_uniform rejects invalid ranges") {
  CHECK_THROWS_AS(log_uniform(RngKey::from_seed(1), 0.0, 1.0), UsageError);
  CHECK_THROWS_AS(log_uniform(RngKey::from_seed(1), -1.0, 1.0), UsageError);
  CHECK_THROWS_AS(log_uniform(RngKey::from_seed(1), 2.0, 1.0), UsageError);
}

TEST_CASE("log_uniform fixed-seed golden value") {
  const double v = log_uniform(RngKey::from_seed(1001).child("golden"),
                               1e-3, 1e3);
  // Frozen from the first run of this generator; guards the draw path
  // against accidental reordering.
  CHECK(v == doctest::Approx(0.0089582409073918558).epsilon(1e-15));
}

TEST_CASE("log_uniform ln-CDF matches uniform within KS 0.02") {
  const RngKey key = RngKey::from_seed(99).child("ks");
  Rng rng(key);
  const double lo = 1e-8, hi = 10.0;
  const int n = 100000;
  std::vector<double> unit(n);
  for (int i = 0; i < n; ++i) {
    const double v = rng.log_uniform(lo, hi);
    unit[i] = (std::log(v) - std::log(lo)) / (std::log(hi) - std::log(lo));
  }
  CHECK(ks_against_uniform(unit) < 0.02);
}

TEST_CASE("normal draws have sane moments") {
  Rng rng(RngKey::from_seed(5).child("normal"));
  const int n = 100000;
  double mean = 0.0, var = 0.0;
  std::vector<double> xs(n);
  for (int i = 0; i < n; ++i) {
    xs[i] = rng.normal();
    mean += xs[i];
  }
  mean /= n;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= n - 1;
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(var - 1.0) < 0.03);
}

TEST_CASE("uniform_int covers its inclusive range") {
  Rng rng(RngKey::from_seed(17));
  std::vector<int> counts(5, 0);
  for (int i = 0; i < 5000; ++i) {
    const auto v = rng.uniform_int(2, 6);
    REQUIRE(v >= 2);
    REQUIRE(v <= 6);
    counts[static_cast<std::size_t>(v - 2)]++;
  }
  for (int c : counts) CHECK(c > 800);
}
