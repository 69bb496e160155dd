#include "ersim/rng.hpp"

#include <cmath>
#include <numbers>

namespace ersim {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) {
  return mix64(seed ^ mix64(fnv1a64(label)));
}

std::uint64_t CounterRng::next_u64() {
  const std::uint64_t c = counter_++;
  return mix64(key_ ^ mix64(c * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL));
}

double CounterRng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double CounterRng::exponential(double mean) {
  return -mean * std::log(uniform_open0());
}

double CounterRng::normal(double mean, double sigma) {
  if (has_spare_) {
    has_spare_ = false;
    return mean + sigma * spare_normal_;
  }
  const double r = std::sqrt(-2.0 * std::log(uniform_open0()));
  const double a = 2.0 * std::numbers::pi * uniform();
  spare_normal_ = r * std::sin(a);
  has_spare_ = true;
  return mean + sigma * r * std::cos(a);
}

std::uint64_t CounterRng::poisson(double mean) {
  if (!(mean > 0.0)) return 0;
  // Sum of Poisson(<=8) chunks, each drawn by inversion.
  std::uint64_t total = 0;
  double remaining = mean;
  while (remaining > 0.0) {
    const double mu = remaining > 8.0 ? 8.0 : remaining;
    remaining -= mu;
    const double u = uniform();
    double p = std::exp(-mu);
    double cdf = p;
    std::uint64_t k = 0;
    while (u >= cdf && k < 200) {
      ++k;
      p *= mu / static_cast<double>(k);
      cdf += p;
    }
    total += k;
  }
  return total;
}

CounterRng CounterRng::split(std::string_view label) const {
  return CounterRng(derive_seed(key_, label));
}

}  // namespace ersim
