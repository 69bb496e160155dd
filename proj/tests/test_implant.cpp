#include <algorithm>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "ersim/errors.hpp"
#include "ersim/implant.hpp"
#include "ersim/rng.hpp"

using namespace ersim::implant;

namespace {

double total_area(const DepthProfile& p) {
  return integrate_piecewise_linear(p.depth, p.ion_density, p.depth.front(), p.depth.back());
}

// Composite Simpson on a callable.
template <class F>
double simpson(F f, double a, double b, int n = 200000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("triangular two-column table") {
  const auto p = load_profile("0 0\n50 1\n100 0\n");
  CHECK(p.depth.size() == 3);
  CHECK(p.ion_density[1] == doctest::Approx(0.02));
  CHECK(total_area(p) == doctest::Approx(1.0).epsilon(1e-12));

  StackSpec half;
  half.hnp_height = 50.0;
  CHECK(retained_fraction(p, half) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("header lines are skipped and comma tables accepted") {
  const auto p = load_profile("# exported profile\ndepth,ions,vac\n0,0,0\n50,1,2\n100,0,0\n");
  CHECK(p.depth.size() == 3);
  CHECK(p.vacancy_density[1] == 2.0);
}

TEST_CASE("SRIM-style Angstrom table is converted to nm") {
  const auto p = load_profile(
      "  DEPTH (Ang.)  Er Ions   Recoils\n"
      "-----------  ----------  ---------\n"
      "1.00E+02  0.00E+00  0.0\n"
      "4.00E+02  3.00E+05  0.5\n"
      "7.00E+02  0.00E+00  0.0\n");
  CHECK(p.depth.front() == doctest::Approx(10.0));
  CHECK(p.depth.back() == doctest::Approx(70.0));
  CHECK(p.vacancy_density[1] == doctest::Approx(5.0));  // per nm
  CHECK(total_area(p) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p.mean_depth() == doctest::Approx(40.0));
}

TEST_CASE("malformed tables") {
  CHECK_THROWS_AS(load_profile("0 0\n100 0\n50 1\n"), ersim::FormatError);
  CHECK_THROWS_AS(load_profile("0 0\n50 -1\n100 0\n"), ersim::FormatError);
  CHECK_THROWS_AS(load_profile("0 1\n"), ersim::FormatError);
  CHECK_THROWS_AS(load_profile("0 0\n50 0\n"), ersim::FormatError);
  CHECK_THROWS_AS(load_profile("0 0\n50 x\n"), ersim::FormatError);
}

TEST_CASE("loaded Gaussian table has the implanted range as its mean") {
  std::ostringstream table;
  table << "depth ion\n";
  for (double d = 0.0; d <= 120.0; d += 0.5)
    table << d << ' ' << std::exp(-0.5 * std::pow((d - 40.0) / 15.0, 2)) << '\n';
  const auto p = load_profile(table.str());

  // Moment integral oracle with Simpson on the continuous density (truncated at 0).
  auto dens = [](double x) { return std::exp(-0.5 * std::pow((x - 40.0) / 15.0, 2)); };
  const double mean_ref =
      simpson([&](double x) { return x * dens(x); }, 0.0, 120.0) / simpson(dens, 0.0, 120.0);
  CHECK(std::abs(p.mean_depth() - mean_ref) < 0.05);
  CHECK(std::abs(p.mean_depth() - 40.0) < 0.5);
}

TEST_CASE("Gaussian surrogate profile") {
  const auto p = gaussian_profile(40.0, 15.0, 0.5);
  CHECK(std::abs(total_area(p) - 1.0) < 1e-6);
  CHECK(p.mean_depth() == doctest::Approx(40.0).epsilon(1e-9));
  const double within = integrate_piecewise_linear(p.depth, p.ion_density, 25.0, 55.0);
  CHECK(std::abs(within - std::erf(1.0 / std::sqrt(2.0))) < 0.01);
  CHECK(p.depth.front() <= 40.0 - 75.0);
  CHECK(p.depth.back() >= 40.0 + 75.0);

  const auto narrow = gaussian_profile(40.0, 0.1, 1.0);
  CHECK(integrate_piecewise_linear(narrow.depth, narrow.ion_density, 39.0, 41.0) >= 0.999);

  CHECK_THROWS_AS(gaussian_profile(40.0, 0.0, 1.0), ersim::DomainError);
}

TEST_CASE("retained fraction") {
  const auto p = gaussian_profile(40.0, 15.0, 0.5);
  StackSpec all;
  all.oxide_thickness = 0.0;
  all.hnp_top_depth = 0.0;
  all.hnp_height = 1000.0;
  // Window covering the whole grid (grid starts at negative depth for this Rp).
  const double covered = integrate_piecewise_linear(p.depth, p.ion_density, p.depth.front(), p.depth.back());
  CHECK(std::abs(covered - 1.0) < 1e-6);

  const auto tri = load_profile("0 0\n50 1\n100 0\n");
  CHECK(std::abs(retained_fraction(tri, all) - 1.0) < 1e-6);

  // Oxide 20 nm, pillar window 30 nm below the interface -> depths [20, 50].
  StackSpec stack;
  stack.oxide_thickness = 20.0;
  stack.hnp_top_depth = 0.0;
  stack.hnp_height = 30.0;
  auto dens = [](double x) { return std::abs(x - 40.0) <= 75.0 ? std::exp(-0.5 * std::pow((x - 40.0) / 15.0, 2)) : 0.0; };
  const double oracle = simpson(dens, 20.0, 50.0) / simpson(dens, -35.0, 115.0);
  CHECK(std::abs(retained_fraction(p, stack) - oracle) < 1e-4);

  StackSpec outside;
  outside.oxide_thickness = 500.0;
  CHECK(retained_fraction(p, outside) == 0.0);
}

TEST_CASE("retained fraction is bounded, monotone and additive") {
  const auto p = gaussian_profile(55.0, 12.0, 0.7);
  ersim::CounterRng rng(77);
  for (int trial = 0; trial < 500; ++trial) {
    StackSpec a;
    a.oxide_thickness = rng.uniform() * 60.0;
    a.hnp_top_depth = rng.uniform() * 20.0;
    a.hnp_height = rng.uniform() * 80.0;
    const double fa = retained_fraction(p, a);
    REQUIRE(fa >= 0.0);
    REQUIRE(fa <= 1.0);

    StackSpec wider = a;
    wider.hnp_height += rng.uniform() * 30.0;
    REQUIRE(retained_fraction(p, wider) >= fa);

    // Adjacent split of the same window.
    StackSpec first = a, second = a;
    const double cut = rng.uniform() * a.hnp_height;
    first.hnp_height = cut;
    second.hnp_top_depth = a.hnp_top_depth + cut;
    second.hnp_height = a.hnp_height - cut;
    REQUIRE(std::abs(retained_fraction(p, first) + retained_fraction(p, second) - fa) < 1e-9);
  }
}

TEST_CASE("vacancy proxy") {
  DepthProfile p = load_profile("0 0 0\n50 1 0\n100 0 0\n");
  CHECK(vacancy_proxy(p, 10.0, 60.0) == 0.0);

  p.vacancy_density.assign(p.depth.size(), 1.0);
  CHECK(vacancy_proxy(p, 20.0, 50.0) == doctest::Approx(30.0).epsilon(1e-12));

  auto q = load_profile("0 1 0\n10 1 4\n35 1 1\n60 1 7\n100 1 0\n");
  auto pw = [](double x) {
    if (x < 10) return 0.4 * x;
    if (x < 35) return 4.0 - 3.0 * (x - 10) / 25.0;
    if (x < 60) return 1.0 + 6.0 * (x - 35) / 25.0;
    return 7.0 - 7.0 * (x - 60) / 40.0;
  };
  const double oracle = simpson(pw, 5.0, 72.0, 2000000);
  CHECK(vacancy_proxy(q, 5.0, 72.0) == doctest::Approx(oracle).epsilon(1e-6));
}

TEST_CASE("save then load reproduces the profile") {
  auto p = gaussian_profile(33.3, 7.7, 0.37);
  for (std::size_t i = 0; i < p.depth.size(); ++i) p.vacancy_density[i] = 0.01 * static_cast<double>(i % 17);
  std::ostringstream out;
  save_profile(out, p);
  const auto q = load_profile(out.str());
  REQUIRE(q.depth.size() == p.depth.size());
  for (std::size_t i = 0; i < p.depth.size(); ++i) {
    CHECK(std::abs(q.depth[i] - p.depth[i]) < 1e-9);
    CHECK(std::abs(q.ion_density[i] - p.ion_density[i]) < 1e-9);
    CHECK(std::abs(q.vacancy_density[i] - p.vacancy_density[i]) < 1e-9);
  }
}
