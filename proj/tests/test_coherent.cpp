#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "ersim/coherent.hpp"
#include "ersim/errors.hpp"
#include "ersim/rng.hpp"

using namespace ersim::coherent;

namespace {

constexpr double kPi = std::numbers::pi;
const double kOmega = 2.0 * kPi * 660e3;

PulseSequence drive(double duration, double omega) { return {{SegmentKind::drive, duration, omega, std::nullopt}}; }

}  // namespace

TEST_CASE("T1 relaxation of an inverted state") {
  CoherenceParams p;
  p.t1 = 1e-3;
  p.t2 = 2e-3;
  const PulseSequence free_seq{{SegmentKind::free, 1e-3, 0.0, std::nullopt}};
  const auto a = bloch_evolve({0.0, 0.0, 1.0}, p, free_seq, 2e-3 / 50.0);
  CHECK(std::abs(a.final_state.w - (2.0 * std::exp(-1.0) - 1.0)) < 1e-4);

  // Same through the RK4 path: a drive segment with zero Rabi frequency.
  const auto b = bloch_evolve({0.0, 0.0, 1.0}, p, drive(1e-3, 0.0), 2e-3 / 50.0);
  CHECK(std::abs(b.final_state.w - (2.0 * std::exp(-1.0) - 1.0)) < 1e-4);
}

TEST_CASE("undamped resonant drive follows the Rabi formula") {
  CoherenceParams p;
  p.rabi_frequency = kOmega;
  for (double theta : {0.1, 0.5 * kPi, 1.3, kPi, 2.7, 4.0 * kPi, 7.1}) {
    const double tp = theta / kOmega;
    const auto seq = drive(tp, kOmega);
    const auto r = bloch_evolve(BlochVector{}, p, seq, max_step(p, seq));
    CHECK(std::abs(r.final_state.excited_population() - std::pow(std::sin(theta / 2.0), 2)) < 1e-6);
  }
}

TEST_CASE("pi pulse inverts the excited state") {
  CoherenceParams p;
  p.rabi_frequency = kOmega;
  p.t1 = 1.2e-3;
  p.t2 = 568e-6;
  const double tp = pulse_width_for_angle(kOmega, kPi);
  CHECK(rotation_angle(kOmega, tp) == doctest::Approx(kPi));
  const auto seq = drive(tp, kOmega);
  const auto r = bloch_evolve({0.0, 0.0, 1.0}, p, seq, max_step(p, seq));
  CHECK(std::abs(r.final_state.w + 1.0) < 1e-3);
  CHECK(std::abs(r.final_state.u) < 1e-3);
  CHECK(std::abs(r.final_state.v) < 1e-3);
}

TEST_CASE("step and sequence validation") {
  CoherenceParams p;
  p.rabi_frequency = kOmega;
  const auto seq = drive(1e-6, kOmega);
  CHECK_THROWS_AS(bloch_evolve(BlochVector{}, p, seq, 2.0 * max_step(p, seq)), ersim::ConfigError);
  CHECK_THROWS_AS(bloch_evolve(BlochVector{}, p, {}, 1e-9), ersim::ConfigError);
  CHECK_THROWS_AS(bloch_evolve(BlochVector{}, p, drive(0.0, kOmega), 1e-9), ersim::ConfigError);
  CoherenceParams bad;
  bad.t1 = 1e-3;
  bad.t2 = 3e-3;
  CHECK_THROWS_AS(bad.validate(), ersim::DomainError);
}

TEST_CASE("Bloch norm bounds and step-halving convergence") {
  ersim::CounterRng rng(99);
  for (int trial = 0; trial < 40; ++trial) {
    CoherenceParams p;
    p.rabi_frequency = kOmega * (0.5 + rng.uniform());
    p.detuning = kOmega * (rng.uniform() - 0.5) * 0.4;
    const bool damped = trial % 2 == 0;
    if (damped) {
      p.t1 = 2e-6 * (1.0 + rng.uniform());
      p.t2 = p.t1 * (0.2 + 1.8 * rng.uniform());
    }
    PulseSequence seq;
    for (int k = 0; k < 5; ++k) {
      const bool is_drive = k % 2 == 0;
      seq.push_back({is_drive ? SegmentKind::drive : SegmentKind::free, 1e-7 + 1e-6 * rng.uniform(),
                     is_drive ? p.rabi_frequency : 0.0, std::nullopt});
    }
    const double h = max_step(p, seq);
    const auto a = bloch_evolve(BlochVector{}, p, seq, h, true);
    const auto b = bloch_evolve(BlochVector{}, p, seq, h / 2.0);
    for (const auto& s : a.trajectory.states) {
      REQUIRE(s.norm() <= 1.0 + 1e-9);
      if (!damped) REQUIRE(std::abs(s.norm() - 1.0) < 1e-8);
    }
    REQUIRE(std::abs(a.final_state.u - b.final_state.u) < 1e-6);
    REQUIRE(std::abs(a.final_state.v - b.final_state.v) < 1e-6);
    REQUIRE(std::abs(a.final_state.w - b.final_state.w) < 1e-6);
  }
}

TEST_CASE("Rabi signal modes") {
  const double t_quarter[] = {0.5 * kPi / kOmega};
  CHECK(rabi_sine_signal(1.0, kOmega, 0.0, t_quarter)[0] == doctest::Approx(1.0).epsilon(1e-14));

  CoherenceParams p;
  p.rabi_frequency = kOmega;
  std::vector<double> grid;
  for (int k = 0; k < 200; ++k) grid.push_back(k * kPi / (50.0 * kOmega));
  const auto ideal = rabi_bloch_signal(p, grid);
  for (std::size_t i = 0; i < grid.size(); ++i)
    CHECK(std::abs(ideal[i] - std::pow(std::sin(kOmega * grid[i] / 2.0), 2)) < 1e-6);

  const auto sig = rabi_bloch_signal(p, grid, 0.96, 0.02);
  const auto [lo, hi] = std::minmax_element(sig.begin(), sig.end());
  CHECK(std::abs((*hi - *lo) - 0.96) < 1e-6);
}

TEST_CASE("Ramsey envelope") {
  CoherenceParams p;
  p.rabi_frequency = kOmega;
  p.t1 = 1.2e-3;
  p.t2 = 568e-6;
  p.t2_star = 32e-6;
  const double taus[] = {0.0, 32e-6};
  const auto a = ramsey_experiment(p, taus, {});
  CHECK(a[0] == 1.0);
  CHECK(a[1] == doctest::Approx(std::exp(-1.0)));

  std::vector<double> grid;
  for (int k = 0; k <= 30; ++k) grid.push_back(k * 3.2e-6);
  SequenceOptions bloch;
  bloch.mode = SequenceMode::bloch;
  const auto an = ramsey_experiment(p, grid, {});
  const auto bl = ramsey_experiment(p, grid, bloch);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(std::abs(an[i] - bl[i]) < 0.01);
    if (i > 0) {
      CHECK(an[i] < an[i - 1]);
      CHECK(bl[i] < bl[i - 1]);
    }
  }
}

TEST_CASE("Ramsey ensemble dephases with a Gaussian envelope") {
  CoherenceParams p;
  p.rabi_frequency = kOmega;
  p.t2_star = 32e-6;
  SequenceOptions ens;
  ens.mode = SequenceMode::ensemble;
  ens.shots = 4000;
  ens.seed = 7;
  const double taus[] = {0.0, 16e-6, 32e-6, 64e-6};
  const auto r = ramsey_experiment(p, taus, ens);
  for (std::size_t i = 0; i < 4; ++i) {
    const double ref = std::exp(-std::pow(taus[i] / p.t2_star, 2));
    CHECK(std::abs(r[i] - ref) < 0.03);
  }
  CHECK(r[3] < 0.1);
}

TEST_CASE("echo envelope and refocusing") {
  CoherenceParams p;
  p.rabi_frequency = kOmega;
  p.t1 = 1.2e-3;
  p.t2 = 568e-6;
  p.t2_star = 32e-6;
  const double taus[] = {0.0, 568e-6};
  const auto a = echo_experiment(p, taus, {});
  CHECK(a[0] == 1.0);
  CHECK(a[1] == doctest::Approx(std::exp(-1.0)));

  // Pure static inhomogeneity: perfect refocusing for any spread.
  for (double t2s : {10e-6, 32e-6, 100e-6}) {
    CoherenceParams q;
    q.rabi_frequency = kOmega;
    q.t2_star = t2s;
    SequenceOptions ens;
    ens.mode = SequenceMode::ensemble;
    ens.shots = 1000;
    std::vector<double> grid;
    for (int k = 0; k <= 10; ++k) grid.push_back(k * 100e-6);
    for (double amp : echo_experiment(q, grid, ens)) CHECK(std::abs(amp - 1.0) < 0.01);
  }
}

TEST_CASE("projected intrinsic linewidth") {
  CHECK(intrinsic_linewidth(32e-6) == doctest::Approx(9947.18).epsilon(1e-5));
  CHECK(intrinsic_linewidth(568e-6) == doctest::Approx(560.4).epsilon(1e-3));
  CHECK(intrinsic_linewidth(kForever) == 0.0);
  CHECK_THROWS_AS(intrinsic_linewidth(0.0), ersim::DomainError);
}
