#include <cmath>
#include <numbers>
#include <string>

#include "doctest.h"
#include "ersim/config.hpp"
#include "ersim/errors.hpp"
#include "ersim/experiments.hpp"
#include "ersim/presets.hpp"
#include "ersim/rng.hpp"

using namespace ersim::config;

namespace {

std::vector<std::string> problems_of(const std::string& text) {
  try {
    parse(text);
  } catch (const ersim::ValidationError& e) {
    return e.problems();
  }
  return {};
}

bool mentions(const std::vector<std::string>& problems, const std::string& needle) {
  for (const auto& p : problems)
    if (p.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("quantities convert to base units") {
  CHECK(parse_quantity("568 us", Kind::time) == doctest::Approx(568e-6).epsilon(1e-15));
  CHECK(parse_quantity("568us", Kind::time) == doctest::Approx(568e-6).epsilon(1e-15));
  CHECK(parse_quantity("1.2 ms", Kind::time) == doctest::Approx(1.2e-3).epsilon(1e-15));
  CHECK(std::isinf(parse_quantity("inf", Kind::time)));
  CHECK(std::isinf(parse_quantity("inf s", Kind::time)));
  CHECK(parse_quantity("2e19 /cm2/s", Kind::flux) == 2e19);
  CHECK(parse_quantity("2e23 /m2/s", Kind::flux) == doctest::Approx(2e19));
  CHECK(parse_quantity("1 um", Kind::length) == 1000.0);
  CHECK(parse_quantity("250 A", Kind::length) == doctest::Approx(25.0));
  CHECK(parse_quantity("67 MHz", Kind::frequency) == 67e6);
  CHECK(parse_quantity("2pi*660 kHz", Kind::angular_rate) == doctest::Approx(2.0 * std::numbers::pi * 660e3));
  CHECK(parse_quantity("4.9e3 rad/s", Kind::angular_rate) == 4.9e3);
  CHECK(parse_quantity("5e-17 cm2", Kind::area) == 5e-17);
  CHECK(parse_quantity("1e12 /cm2", Kind::dose) == 1e12);
  CHECK(parse_quantity("180 kcps", Kind::rate) == 180e3);
  CHECK(parse_quantity("2%", Kind::number) == doctest::Approx(0.02));
  CHECK(parse_quantity("1e6", Kind::count) == 1e6);

  CHECK_THROWS_AS(parse_quantity("568", Kind::time), ersim::ConfigError);
  CHECK_THROWS_AS(parse_quantity("568 uss", Kind::time), ersim::ConfigError);
  CHECK_THROWS_AS(parse_quantity("660 kHz", Kind::angular_rate), ersim::ConfigError);
  CHECK_THROWS_AS(parse_quantity("2pi*660 rad/s", Kind::angular_rate), ersim::ConfigError);
  CHECK_THROWS_AS(parse_quantity("1.5", Kind::count), ersim::ConfigError);
  CHECK_THROWS_AS(parse_quantity("3 nm", Kind::number), ersim::ConfigError);
  CHECK_THROWS_AS(parse_quantity("nan s", Kind::time), ersim::ConfigError);
  CHECK_THROWS_AS(parse_quantity("0x10 s", Kind::time), ersim::ConfigError);
  CHECK_THROWS_AS(parse_quantity("inf nm", Kind::length), ersim::ConfigError);
  CHECK_THROWS_AS(parse_quantity("ms", Kind::time), ersim::ConfigError);
}

TEST_CASE("parser reads sections, comments and top-level keys") {
  const auto cfg = parse(R"(# echo run
experiment = echo
seed = 18446744073709551615
out = runs/echo   # trailing comment

[coherence]
t2 = 568 us
rabi_frequency = 2pi*660 kHz

[echo]
mode = ensemble
points = 21
)");
  CHECK(cfg.experiment == "echo");
  CHECK(*cfg.seed == 18446744073709551615ULL);
  CHECK(cfg.out == "runs/echo");
  CHECK(cfg.number("coherence", "t2", 0.0) == doctest::Approx(568e-6));
  CHECK(cfg.count("echo", "points", 0) == 21);
  CHECK(cfg.text("echo", "mode", "") == "ensemble");
  CHECK(cfg.number("coherence", "t1", -1.0) == -1.0);
  CHECK_FALSE(cfg.maybe("coherence", "t1").has_value());
}

TEST_CASE("every offending key is reported") {
  const auto p = problems_of(R"(experiment = echo
colour = blue

[coherence]
t2 = 568
t3 = 1 ms
rabi_frequency = 660 kHz

[bogus]
x = 1

[echo]
points = -3
mode = sideways
points = 5
)");
  CHECK(p.size() == 7);
  CHECK(mentions(p, "colour"));
  CHECK(mentions(p, "t2: missing unit"));
  CHECK(mentions(p, "t3: unknown key"));
  CHECK(mentions(p, "rabi_frequency"));
  CHECK(mentions(p, "[bogus]: unknown section"));
  CHECK(mentions(p, "points"));
  CHECK(mentions(p, "sideways"));
  CHECK(mentions(p, "line 5:"));
}

TEST_CASE("range checks") {
  CHECK(mentions(problems_of("[detector]\nefficiency = 1.5\n"), "efficiency"));
  CHECK(mentions(problems_of("[geometry]\npitch = 0 nm\n"), "pitch"));
  CHECK(mentions(problems_of("[upconversion]\npulses = 101\n"), "pulses"));
  CHECK(mentions(problems_of("[detector]\nchannels = 3\n"), "channels"));
  CHECK(mentions(problems_of("seed = -1\n"), "seed"));
  CHECK(mentions(problems_of("seed = 18446744073709551616\n"), "seed"));
  CHECK(mentions(problems_of("experiment = teleport\n"), "teleport"));
  CHECK(problems_of("[levels]\nbranch_R_G = 0.5\npromote_G_T = 1\n").empty());
  CHECK(mentions(problems_of("[levels]\nbranch_R_X = 0.5\n"), "branch_R_X"));
  CHECK(problems_of("[fit]\nmodel = biexp\ninit_tau1 = 3e-4\nfix_B = yes\n").empty());
}

TEST_CASE("semantic validation") {
  auto cfg = parse("experiment = g2\n");
  CHECK_THROWS_AS(validate(cfg), ersim::ValidationError);
  cfg.seed = 1;
  CHECK_NOTHROW(validate(cfg));
  CHECK(is_stochastic(cfg));
  CHECK_FALSE(is_stochastic(parse("experiment = echo\n")));
  CHECK(is_stochastic(parse("experiment = echo\n[echo]\nnoise = 1%\n")));
  CHECK(is_stochastic(parse("experiment = ramsey\n[ramsey]\nmode = ensemble\n")));

  try {
    validate(parse("experiment = fit\n[fit]\nlower_tau9 = 1\n"));
    FAIL("expected a validation error");
  } catch (const ersim::ValidationError& e) {
    CHECK(mentions(e.problems(), "[fit] model: missing"));
    CHECK(mentions(e.problems(), "[fit] input: missing"));
  }
  try {
    validate(parse("experiment = fit\n[fit]\nmodel = single_exp\ninput = x.csv\ninit_tau9 = 1\n"));
    FAIL("expected a validation error");
  } catch (const ersim::ValidationError& e) {
    CHECK(mentions(e.problems(), "tau9"));
  }
}

TEST_CASE("canonical form is a fixed point and drives the digest") {
  const std::string a = R"(experiment = echo
seed = 5
[echo]
noise = 2%
tau_max = 2.5 ms
[coherence]
t2 = 568 us
)";
  const std::string b = R"(seed = 5
experiment = echo

[coherence]
t2   =   0.568 ms    # same value, other unit

[echo]
tau_max = 2500 us
noise = 0.02
)";
  const auto ca = parse(a), cb = parse(b);
  CHECK(canonicalize(ca) == canonicalize(cb));
  CHECK(digest(ca) == digest(cb));
  CHECK(digest(ca).size() == 16);
  const auto again = parse(canonicalize(ca));
  CHECK(canonicalize(again) == canonicalize(ca));
  auto changed = ca;
  changed.seed = 6;
  CHECK(digest(changed) != digest(ca));
}

TEST_CASE("round trip holds for random configurations") {
  ersim::CounterRng rng(99);
  const char* numeric[][2] = {{"coherence", "t2"},         {"coherence", "rabi_frequency"}, {"excitation", "photon_flux"},
                              {"excitation", "cross_section"}, {"geometry", "pitch"},       {"occupancy", "dose"},
                              {"ple", "laser_fwhm"},       {"detector", "dark_rate"},      {"stream", "n_pulses"},
                              {"detector", "efficiency"},  {"trpl", "background"},        {"fit", "init_tau"}};
  for (int trial = 0; trial < 300; ++trial) {
    Config cfg;
    cfg.experiment = "echo";
    if (rng.bernoulli(0.5)) cfg.seed = rng.next_u64();
    for (const auto& kv : numeric) {
      if (rng.bernoulli(0.4)) continue;
      const auto spec = *lookup(kv[0], kv[1]);
      double v;
      if (spec.kind == Kind::count)
        v = std::floor(rng.uniform() * 1e6) + 1.0;
      else if (spec.max <= 1.0)
        v = rng.uniform();
      else
        v = std::exp(rng.normal(0.0, 20.0)) * (spec.min < 0.0 && rng.bernoulli(0.5) ? -1.0 : 1.0);
      cfg.set(kv[0], kv[1], v);
    }
    if (rng.bernoulli(0.5)) cfg.set_text("echo", "mode", "bloch");
    const auto text = canonicalize(cfg);
    const auto back = parse(text);
    REQUIRE(canonicalize(back) == text);
    for (const auto& [sec, entries] : cfg.values)
      for (const auto& [key, e] : entries) CHECK(back.values.at(sec).at(key).number == e.number);
  }
}

TEST_CASE("presets") {
  const std::vector<std::string> expected{"fig1c_g2",   "fig2b_saturation", "fig3_blueprint", "fig3c_g2_sites",
                                          "fig4b_g2",   "fig4c_rabi",       "fig4d_ramsey",   "fig4e_echo",
                                          "fig5_upconversion", "fig5c_ple"};
  const auto all = ersim::presets::all();
  REQUIRE(all.size() == expected.size());
  for (std::size_t i = 0; i < all.size(); ++i) {
    CHECK(all[i].name == expected[i]);
    const auto cfg = ersim::presets::load(all[i].name);
    CHECK_NOTHROW(ersim::run::preflight(cfg));
    CHECK(canonicalize(parse(canonicalize(cfg))) == canonicalize(cfg));
  }
  CHECK(ersim::presets::load("fig4d_ramsey").number("coherence", "t2_star", 0.0) == doctest::Approx(32e-6));
  const auto bp = ersim::presets::load("fig3_blueprint");
  CHECK(bp.number("occupancy", "dose", 0.0) == 1e12);
  CHECK(bp.count("geometry", "cols", 0) == 4);
  CHECK(bp.count("geometry", "rows", 0) == 3);
  CHECK(ersim::presets::find("nope") == nullptr);
  CHECK_THROWS_AS(ersim::presets::load("nope"), ersim::ValidationError);
}

TEST_CASE("level overrides replace whole rows") {
  const auto cfg = parse("[levels]\npreset = alternate\ntau_R = 300 us\nbranch_R_G = 0.5\nbranch_R_T = 0.5\n");
  const auto sys = ersim::run::levels_from(cfg);
  CHECK(sys.levels[ersim::levels::R].lifetime == doctest::Approx(300e-6));
  CHECK(sys.levels[ersim::levels::N1].lifetime == doctest::Approx(712e-6));
  CHECK(sys.branching[ersim::levels::R][ersim::levels::N1] == 0.0);
  CHECK_NOTHROW(sys.validate());
  const auto bad = parse("experiment = upconversion\n[levels]\nbranch_R_G = 0.5\n");
  CHECK_THROWS_AS(ersim::run::preflight(bad), ersim::ValidationError);
}
