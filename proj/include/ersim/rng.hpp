#pragma once

#include <cstdint>
#include <string_view>

namespace ersim {

// Counter-based generator: the n-th draw of stream `key` is mix(key, n).
// Only integer arithmetic is used for the raw stream, so the u64 sequence is
// identical on every platform. Real-valued variates go through <cmath>.
class CounterRng {
public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform in (0, 1].
  double uniform_open0() { return 1.0 - uniform(); }
  double exponential(double mean);
  double normal(double mean = 0.0, double sigma = 1.0);
  std::uint64_t poisson(double mean);
  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  /// Independent child stream identified by a fixed label.
  CounterRng split(std::string_view label) const;

private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t mix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view bytes);
/// Seed for a labelled sub-module stream.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label);

}  // namespace ersim
