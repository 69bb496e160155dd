#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "ersim/errors.hpp"
#include "ersim/levels.hpp"
#include "ersim/rng.hpp"

using namespace ersim::levels;

namespace {

LevelSystem two_level(double tau) {
  LevelSystem s = LevelSystem::nominal_preset();
  s.levels[T].lifetime = tau;
  s.ladder_promotion = {{G, T, 1.0}};
  return s;
}

double total(const Populations& p) { return std::accumulate(p.begin(), p.end(), 0.0); }

}  // namespace

TEST_CASE("presets validate and carry the configured lifetimes") {
  const auto a = LevelSystem::nominal_preset();
  CHECK_NOTHROW(a.validate());
  CHECK(a.levels[H].lifetime == doctest::Approx(164e-6));
  CHECK(a.levels[R].lifetime == doctest::Approx(310e-6));
  CHECK(a.levels[N1].lifetime == doctest::Approx(700e-6));
  CHECK(*a.levels[H].emission_wavelength == 518.0);
  const auto b = LevelSystem::alternate_preset();
  CHECK(b.levels[R].lifetime == doctest::Approx(380e-6));
  CHECK(b.levels[N1].lifetime == doctest::Approx(712e-6));
  CHECK(level_from_label("N1") == N1);
  CHECK_FALSE(level_from_label("X").has_value());
}

TEST_CASE("level system validation") {
  auto s = LevelSystem::nominal_preset();
  s.branching[R][G] = 0.5;
  CHECK_THROWS_AS(s.validate(), ersim::DomainError);
  s = LevelSystem::nominal_preset();
  s.ladder_promotion.push_back({G, N1, 0.5});
  CHECK_THROWS_AS(s.validate(), ersim::DomainError);
  s = LevelSystem::nominal_preset();
  s.levels[G].lifetime = 1.0;
  CHECK_THROWS_AS(s.validate(), ersim::DomainError);
}

TEST_CASE("free decay of the telecom level") {
  const auto s = LevelSystem::nominal_preset();
  const double tau = s.levels[T].lifetime;
  const auto traj = integrate_populations(s, {}, tau, s.levels[H].lifetime / 50.0, {0.0, 1.0, 0.0, 0.0, 0.0});
  CHECK(traj.time.back() == doctest::Approx(tau));
  CHECK(std::abs(traj.populations.back()[T] - std::exp(-1.0)) < 1e-4);
}

TEST_CASE("two-level steady state") {
  const double tau = 1.2e-3;
  const auto s = two_level(tau);
  ExcitationSpec exc;
  exc.cross_section = 5e-17;
  exc.photon_flux = 3e19;
  const double rate = exc.excitation_rate();
  const double step = std::min({tau, 1.0 / rate, s.levels[H].lifetime}) / 50.0;
  const auto traj = integrate_populations(s, exc, 40.0 * tau, step);
  CHECK(std::abs(traj.populations.back()[T] - rate / (rate + 1.0 / tau)) < 1e-4);
}

TEST_CASE("without decay or pump populations are frozen") {
  auto s = LevelSystem::nominal_preset();
  for (auto& lv : s.levels) lv.lifetime = kInfiniteLifetime;
  const Populations start{0.2, 0.3, 0.1, 0.25, 0.15};
  const auto traj = integrate_populations(s, {}, 1.0, 0.01, start);
  for (std::size_t i = 0; i < kLevelCount; ++i) CHECK(traj.populations.back()[i] == start[i]);
}

TEST_CASE("oversized step is rejected") {
  const auto s = LevelSystem::nominal_preset();
  CHECK_THROWS_AS(integrate_populations(s, {}, 1e-3, 10e-6), ersim::ConfigError);
  CHECK_NOTHROW(integrate_populations(s, {}, 1e-3, 164e-6 / 50.0));
  ExcitationSpec hot;
  hot.cross_section = 5e-17;
  hot.photon_flux = 1e22;  // 1/(sigma phi) = 2 us
  CHECK_THROWS_AS(integrate_populations(s, hot, 1e-4, 1e-6), ersim::ConfigError);
}

TEST_CASE("conservation, positivity and step-halving convergence under pumping") {
  ersim::CounterRng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    auto s = LevelSystem::nominal_preset();
    for (auto& p : s.ladder_promotion) p.probability = rng.uniform();
    ExcitationSpec exc;
    exc.cross_section = 5e-17;
    exc.photon_flux = std::pow(10.0, 18.0 + 2.5 * rng.uniform());
    double fastest = 164e-6;
    fastest = std::min(fastest, 1.0 / exc.excitation_rate());
    const double step = fastest / 50.0;
    const double duration = 400.0 * step;
    const auto a = integrate_populations(s, exc, duration, step);
    const auto b = integrate_populations(s, exc, duration, step / 2.0);
    for (const auto& p : a.populations) {
      REQUIRE(std::abs(total(p) - 1.0) < 1e-8);
      for (double v : p) REQUIRE(v > -1e-10);
    }
    for (std::size_t i = 0; i < kLevelCount; ++i)
      REQUIRE(std::abs(a.populations.back()[i] - b.populations.back()[i]) < 1e-6);
  }
}

TEST_CASE("trajectory CSV layout") {
  const auto s = LevelSystem::nominal_preset();
  const auto traj = integrate_populations(s, {}, 1e-5, 1e-6, {0.0, 1.0, 0.0, 0.0, 0.0});
  std::ostringstream out;
  write_trajectory_csv(out, traj);
  const std::string text = out.str();
  CHECK(text.rfind("time_s,n_G,n_T,n_N1,n_R,n_H\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == static_cast<long>(traj.time.size() + 1));
}

TEST_CASE("saturation law") {
  const double phi_sat = saturation_flux(5e-17, 1.2e-3);
  CHECK(phi_sat == doctest::Approx(1.6667e19).epsilon(1e-4));
  CHECK(2e19 / phi_sat < 1.25);

  const double phi[] = {phi_sat};
  CHECK(saturation_curve(5e-17, 1.2e-3, phi, 7.0)[0] == 3.5);

  const double phi_ln = saturation_flux(6e-20, 1.2e-3);
  CHECK(phi_ln == doctest::Approx(1.4e22).epsilon(0.01));
  CHECK(phi_ln > 1e22);

  // P_sat at 1534 nm from the saturation flux.
  CHECK(flux_to_intensity(2e19, 1534.0) == doctest::Approx(2.59).epsilon(0.01));

  std::vector<double> grid;
  for (int i = 0; i <= 400; ++i) grid.push_back(1e17 * std::pow(10.0, i * 0.01));
  const auto r = saturation_curve(5e-17, 1.2e-3, grid);
  for (std::size_t i = 1; i < r.size(); ++i) CHECK(r[i] > r[i - 1]);
  std::vector<double> lin;
  for (int i = 0; i <= 200; ++i) lin.push_back(i * 5e17);
  const auto q = saturation_curve(5e-17, 1.2e-3, lin);
  for (std::size_t i = 1; i + 1 < q.size(); ++i) CHECK(q[i + 1] - 2.0 * q[i] + q[i - 1] < 0.0);
}

TEST_CASE("TRPL decay") {
  const double t[] = {0.0, 0.3e-3, 1.0e-3};
  const auto single = trpl_decay({2.0, 0.0}, {0.3e-3, 1.3e-3}, t);
  CHECK(single[1] / single[0] == doctest::Approx(std::exp(-1.0)));
  const auto both = trpl_decay({0.4, 1.1}, {0.3e-3, 1.3e-3}, t);
  CHECK(both[0] == doctest::Approx(1.5));
  CHECK_THROWS_AS(trpl_decay({1.0, 1.0}, {0.0, 1.0}, t), ersim::DomainError);
}

TEST_CASE("single pulse only reaches the telecom level") {
  auto s = LevelSystem::nominal_preset();
  s.ladder_promotion = {{G, T, 1.0}};
  const auto r = upconversion_sequence(s, 1);
  CHECK(r.yield_at(s, 1534.0) == doctest::Approx(1.0));
  CHECK(r.yield_at(s, 980.0) == 0.0);
  CHECK(r.yield_at(s, 660.0) == 0.0);
  CHECK(r.yield_at(s, 518.0) == 0.0);
}

TEST_CASE("deterministic two-rung ladder yields one 980 nm photon") {
  auto s = LevelSystem::nominal_preset();
  s.ladder_promotion = {{G, T, 1.0}, {T, N1, 1.0}};
  s.branching[N1] = {1.0, 0.0, 0.0, 0.0, 0.0};
  const auto r = upconversion_sequence(s, 2);
  CHECK(r.after_pulses[N1] == doctest::Approx(1.0));
  CHECK(r.yield_at(s, 980.0) == doctest::Approx(1.0));
  CHECK(r.yield_at(s, 1534.0) == doctest::Approx(0.0));
}

TEST_CASE("pulse count bounds") {
  const auto s = LevelSystem::nominal_preset();
  CHECK_THROWS_AS(upconversion_sequence(s, 0), ersim::ConfigError);
  CHECK_THROWS_AS(upconversion_sequence(s, 101), ersim::ConfigError);
}

TEST_CASE("probabilistic ladder matches a Monte-Carlo oracle") {
  const auto s = LevelSystem::nominal_preset();
  const int pulses = 3;
  const auto r = upconversion_sequence(s, pulses);

  // Trial-by-trial simulation of one ion.
  ersim::CounterRng rng(424242);
  const int trials = 1000000;
  Populations sum{}, sum_sq{};
  for (int trial = 0; trial < trials; ++trial) {
    std::size_t level = G;
    for (int p = 0; p < pulses; ++p) {
      const double u = rng.uniform();
      double acc = 0.0;
      for (const auto& pr : s.ladder_promotion) {
        if (pr.from != level) continue;
        acc += pr.probability;
        if (u < acc) {
          level = pr.to;
          break;
        }
      }
    }
    Populations counts{};
    while (level != G) {
      const double u = rng.uniform();
      double acc = 0.0;
      std::size_t next = G;
      for (std::size_t j = 0; j < kLevelCount; ++j) {
        acc += s.branching[level][j];
        if (u < acc) {
          next = j;
          break;
        }
      }
      if (next == G) counts[level] += 1.0;
      level = next;
    }
    for (std::size_t i = 0; i < kLevelCount; ++i) {
      sum[i] += counts[i];
      sum_sq[i] += counts[i] * counts[i];
    }
  }
  for (std::size_t i = 1; i < kLevelCount; ++i) {
    const double mean = sum[i] / trials;
    const double var = sum_sq[i] / trials - mean * mean;
    const double se = std::sqrt(var / trials);
    CHECK(std::abs(r.photons[i] - mean) <= 3.0 * se + 1e-12);
  }
  const double expected_total = r.photons[T] + r.photons[N1] + r.photons[R] + r.photons[H];
  CHECK(expected_total == doctest::Approx(1.0));
}
