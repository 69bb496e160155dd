#include <cmath>
#include <numbers>

#include "doctest.h"
#include "ersim/errors.hpp"
#include "ersim/geometry.hpp"
#include "ersim/rng.hpp"

using namespace ersim::geometry;

namespace {

// Exhaustive scan of every lattice site, no bounding-box pruning.
std::size_t brute_force_count(const ArrayGeometry& g, const ExcitationSpot& s) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < g.cols; ++i)
    for (std::size_t j = 0; j < g.rows; ++j) {
      const double dx = static_cast<double>(i) * g.pitch - s.center.x;
      const double dy = static_cast<double>(j) * g.pitch - s.center.y;
      if (std::sqrt(dx * dx + dy * dy) <= 0.5 * s.diameter) ++n;
    }
  return n;
}

ArrayGeometry big_array(double pitch) {
  ArrayGeometry g;
  g.pitch = pitch;
  g.rows = 40;
  g.cols = 40;
  return g;
}

}  // namespace

TEST_CASE("micron spot between lattice sites covers twelve pillars") {
  auto g = big_array(250.0);
  ExcitationSpot s;
  s.diameter = 1000.0;
  s.center = {250.0 * 19.5, 250.0 * 19.5};
  CHECK(hnps_in_spot(g, s) == 12);

  ArrayGeometry a4;  // 4 x 3 array, spot on its center
  a4.pitch = 250.0;
  a4.cols = 4;
  a4.rows = 3;
  s.center = a4.center();
  CHECK(hnps_in_spot(a4, s) == 12);
}

TEST_CASE("sub-pitch spot on a site sees one pillar") {
  auto g = big_array(250.0);
  ExcitationSpot s;
  s.diameter = 100.0;
  s.center = g.site(7, 11);
  CHECK(hnps_in_spot(g, s) == 1);
}

TEST_CASE("760 nm spot on a site matches exhaustive enumeration") {
  auto g = big_array(250.0);
  ExcitationSpot s;
  s.diameter = 760.0;
  s.center = g.site(20, 20);
  CHECK(hnps_in_spot(g, s) == brute_force_count(g, s));
  CHECK(hnps_in_spot(g, s) == 9);
}

TEST_CASE("empty array has no pillars in the spot") {
  ArrayGeometry g;
  g.rows = 0;
  ExcitationSpot s;
  CHECK(hnps_in_spot(g, s) == 0);
}

TEST_CASE("spot count equals exhaustive enumeration for random configurations") {
  ersim::CounterRng rng(20260101);
  for (int trial = 0; trial < 1000; ++trial) {
    ArrayGeometry g;
    g.pitch = 100.0 + 400.0 * rng.uniform();
    g.rows = 1 + static_cast<std::size_t>(rng.uniform() * 15.0);
    g.cols = 1 + static_cast<std::size_t>(rng.uniform() * 15.0);
    g.hnp_inner_radius = 10.0;
    g.critical_dimension = 5.0;
    ExcitationSpot s;
    s.diameter = 50.0 + 2000.0 * rng.uniform();
    s.center = {(rng.uniform() * 1.4 - 0.2) * g.pitch * static_cast<double>(g.cols),
                (rng.uniform() * 1.4 - 0.2) * g.pitch * static_cast<double>(g.rows)};
    REQUIRE(hnps_in_spot(g, s) == brute_force_count(g, s));
  }
}

TEST_CASE("default numerical aperture gives a one micron spot at 1534 nm") {
  CHECK(diffraction_spot_diameter(1534.0) == doctest::Approx(1000.0).epsilon(1e-12));
}

TEST_CASE("geometry validation") {
  ArrayGeometry g;
  CHECK_NOTHROW(g.validate());
  g.pitch = 50.0;  // < 2 * (25 + 4.8)
  CHECK_THROWS_AS(g.validate(), ersim::DomainError);
  g = ArrayGeometry{};
  g.critical_dimension = 0.0;
  CHECK_THROWS_AS(g.validate(), ersim::DomainError);
  ExcitationSpot s;
  s.diameter = 0.0;
  CHECK_THROWS_AS(s.validate(), ersim::DomainError);
}

TEST_CASE("sidewall annulus footprint") {
  ArrayGeometry g;
  g.hnp_inner_radius = 25.0;
  g.critical_dimension = 0.0;
  CHECK(sidewall_capture_area(g) == 0.0);

  g.critical_dimension = 5.0;
  const double area = sidewall_capture_area(g);
  CHECK(area == doctest::Approx(8.639e-12).epsilon(1e-4));

  // Radial midpoint integration of 2 pi r dr over [25, 30] nm.
  const int n = 100000;
  double numeric = 0.0;
  for (int i = 0; i < n; ++i) {
    const double r = 25.0 + (i + 0.5) * 5.0 / n;
    numeric += 2.0 * std::numbers::pi * r * (5.0 / n);
  }
  CHECK(area == doctest::Approx(numeric * 1e-14).epsilon(1e-10));

  ArrayGeometry thick = g;
  thick.critical_dimension = 10.0;
  CHECK(sidewall_capture_area(thick) / area == doctest::Approx(600.0 / 275.0).epsilon(1e-14));
}

TEST_CASE("expected ions and calibration") {
  ArrayGeometry g;
  g.hnp_inner_radius = 25.0;
  g.critical_dimension = 5.0;
  OccupancyModel m;
  m.capture_area_per_hnp = sidewall_capture_area(g);
  m.dose = 0.0;
  CHECK(expected_ions(m, 12) == 0.0);

  m.dose = 1e12;
  const double f = calibrate_loss_factor(m, 12, 1.0);
  CHECK(f == doctest::Approx(0.0096).epsilon(0.01));
  m.retention_fraction = f;
  CHECK(expected_ions(m, 12) == doctest::Approx(1.0).epsilon(1e-12));

  OccupancyModel hi = m;
  hi.dose = 1e14;
  CHECK(expected_ions(hi, 12) / expected_ions(m, 12) == doctest::Approx(100.0).epsilon(1e-14));

  CHECK_THROWS_AS(calibrate_loss_factor(m, 12, 1e6), ersim::DomainError);
  CHECK_THROWS_AS(expected_ions(m, -1), ersim::DomainError);
}

TEST_CASE("expected ions is exactly linear in dose and pillar count") {
  OccupancyModel m;
  m.dose = 3.7e12;
  m.capture_area_per_hnp = 8.639e-12;
  m.retention_fraction = 0.3;
  m.activation_fraction = 0.07;
  const double base = expected_ions(m, 12);
  for (double scale : {2.0, 4.0, 0.5, 1024.0}) {
    OccupancyModel s = m;
    s.dose = m.dose * scale;
    CHECK(expected_ions(s, 12) == base * scale);
    CHECK(expected_ions(m, 12 * scale) == base * scale);
  }
}

TEST_CASE("Poisson occupancy") {
  const auto p = occupancy_pmf(1.0, 50);
  CHECK(p[1] == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  double sum = 0.0;
  for (double v : p) sum += v;
  CHECK(std::abs(sum - 1.0) < 1e-12);

  // Extended-precision factorial oracle.
  const auto q = occupancy_pmf(2.0, 5);
  long double fact = 1.0L;
  for (int k = 0; k <= 5; ++k) {
    if (k > 0) fact *= k;
    const long double ref = std::pow(2.0L, k) * std::exp(-2.0L) / fact;
    CHECK(std::abs(q[static_cast<std::size_t>(k)] - static_cast<double>(ref)) < 1e-15);
  }

  CHECK(occupancy_pmf(0.0, 3)[0] == 1.0);
  CHECK_THROWS_AS(occupancy_pmf(-0.1, 3), ersim::DomainError);
}

TEST_CASE("Poisson pmf normalization across lambda") {
  for (double lambda = 0.0; lambda <= 30.0; lambda += 0.25) {
    const auto p = occupancy_pmf(lambda, 200);
    double sum = 0.0;
    for (double v : p) sum += v;
    REQUIRE(std::abs(sum - 1.0) < 1e-12);
  }
}

TEST_CASE("emitter-number g2 law") {
  CHECK(g2_zero_model(1) == 0.0);
  CHECK(g2_zero_model(2) == 0.5);
  CHECK(g2_zero_model(6) == doctest::Approx(0.8333).epsilon(1e-4));
  CHECK(std::abs(g2_zero_model(6) - 0.84) < 0.01);
  CHECK_THROWS_AS(g2_zero_model(0), ersim::DomainError);
  double prev = -1.0;
  for (std::size_t n = 1; n < 500; ++n) {
    const double g = g2_zero_model(n);
    CHECK(g > prev);
    CHECK(g >= 0.0);
    CHECK(g < 1.0);
    prev = g;
  }
}

TEST_CASE("disc overlap against grid-counting oracle") {
  for (double d : {0.0, 3.0, 7.5, 11.0, 14.9, 20.0}) {
    const double r1 = 10.0, r2 = 5.0;
    const int n = 1200;
    const double h = 30.0 / n;
    double area = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double x = -15.0 + (i + 0.5) * h, y = -15.0 + (j + 0.5) * h;
        if (x * x + y * y <= r1 * r1 && (x - d) * (x - d) + y * y <= r2 * r2) area += h * h;
      }
    CHECK(disc_overlap_area(r1, r2, d) == doctest::Approx(area).epsilon(5e-3).scale(1.0));
  }
}

TEST_CASE("area-weighted membership") {
  ArrayGeometry g;
  g.cols = 4;
  g.rows = 3;
  ExcitationSpot s;
  s.center = g.center();
  s.diameter = 1e5;
  CHECK(effective_hnps_in_spot(g, s, SpotMembership::area_weighted) == doctest::Approx(12.0));
  s.diameter = 1000.0;
  const double w = effective_hnps_in_spot(g, s, SpotMembership::area_weighted);
  CHECK(w <= 12.0);
  CHECK(w > 11.0);
  CHECK(effective_hnps_in_spot(g, s, SpotMembership::center_in_circle) == 12.0);
}
