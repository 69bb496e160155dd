#include "ersim/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "ersim/errors.hpp"

namespace ersim::geometry {

namespace {

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

constexpr double kNm2ToCm2 = 1e-14;

}  // namespace

void ArrayGeometry::validate() const {
  if (!positive_finite(pitch) || !positive_finite(hnp_inner_radius) || !positive_finite(critical_dimension) ||
      !positive_finite(hnp_height)) {
    throw DomainError("array geometry: lengths must be finite and positive");
  }
  if (!(pitch > 2.0 * outer_radius())) {
    throw DomainError("array geometry: pitch must exceed the pillar outer diameter");
  }
}

Point2 ArrayGeometry::site(std::size_t col, std::size_t row) const {
  return {static_cast<double>(col) * pitch, static_cast<double>(row) * pitch};
}

Point2 ArrayGeometry::center() const {
  const double cx = cols > 0 ? 0.5 * static_cast<double>(cols - 1) * pitch : 0.0;
  const double cy = rows > 0 ? 0.5 * static_cast<double>(rows - 1) * pitch : 0.0;
  return {cx, cy};
}

void ExcitationSpot::validate() const {
  if (!positive_finite(diameter)) throw DomainError("excitation spot: diameter must be positive");
  if (!positive_finite(wavelength)) throw DomainError("excitation spot: wavelength must be positive");
}

double diffraction_spot_diameter(double wavelength_nm, double numerical_aperture) {
  if (!(numerical_aperture > 0.0)) throw DomainError("numerical aperture must be positive");
  return 1.22 * wavelength_nm / numerical_aperture;
}

std::size_t hnps_in_spot(const ArrayGeometry& geom, const ExcitationSpot& spot) {
  const double r = 0.5 * spot.diameter;
  const double r2 = r * r;
  if (geom.rows == 0 || geom.cols == 0) return 0;

  // Only the columns/rows inside the bounding box of the spot can qualify.
  auto index_range = [&](double c, std::size_t n) {
    const double lo = std::ceil((c - r) / geom.pitch);
    const double hi = std::floor((c + r) / geom.pitch);
    const double first = std::max(lo, 0.0);
    const double last = std::min(hi, static_cast<double>(n) - 1.0);
    return std::pair<double, double>{first, last};
  };
  const auto [i0, i1] = index_range(spot.center.x, geom.cols);
  const auto [j0, j1] = index_range(spot.center.y, geom.rows);

  std::size_t count = 0;
  for (double i = i0; i <= i1; i += 1.0) {
    for (double j = j0; j <= j1; j += 1.0) {
      const double dx = i * geom.pitch - spot.center.x;
      const double dy = j * geom.pitch - spot.center.y;
      if (dx * dx + dy * dy <= r2) ++count;
    }
  }
  return count;
}

double disc_overlap_area(double r1, double r2, double d) {
  if (r1 <= 0.0 || r2 <= 0.0) return 0.0;
  if (d >= r1 + r2) return 0.0;
  const double rmin = std::min(r1, r2);
  if (d <= std::abs(r1 - r2)) return std::numbers::pi * rmin * rmin;
  const double a1 = std::acos(std::clamp((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1), -1.0, 1.0));
  const double a2 = std::acos(std::clamp((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2), -1.0, 1.0));
  const double k = (-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2);
  return r1 * r1 * a1 + r2 * r2 * a2 - 0.5 * std::sqrt(std::max(k, 0.0));
}

double effective_hnps_in_spot(const ArrayGeometry& geom, const ExcitationSpot& spot, SpotMembership mode) {
  if (mode == SpotMembership::center_in_circle) return static_cast<double>(hnps_in_spot(geom, spot));

  const double rs = 0.5 * spot.diameter;
  const double rp = geom.outer_radius();
  const double footprint = std::numbers::pi * rp * rp;
  double total = 0.0;
  for (std::size_t i = 0; i < geom.cols; ++i) {
    for (std::size_t j = 0; j < geom.rows; ++j) {
      const Point2 p = geom.site(i, j);
      const double d = std::hypot(p.x - spot.center.x, p.y - spot.center.y);
      if (d >= rs + rp) continue;
      total += disc_overlap_area(rs, rp, d) / footprint;
    }
  }
  return total;
}

double sidewall_capture_area(const ArrayGeometry& geom) {
  const double r = geom.hnp_inner_radius;
  const double ro = r + geom.critical_dimension;
  return std::numbers::pi * (ro * ro - r * r) * kNm2ToCm2;
}

void OccupancyModel::validate() const {
  if (!(dose >= 0.0) || !std::isfinite(dose)) throw DomainError("occupancy: dose must be >= 0");
  if (!(capture_area_per_hnp >= 0.0)) throw DomainError("occupancy: capture area must be >= 0");
  if (!(retention_fraction >= 0.0 && retention_fraction <= 1.0))
    throw DomainError("occupancy: retention fraction must lie in [0, 1]");
  if (!(activation_fraction >= 0.0 && activation_fraction <= 1.0))
    throw DomainError("occupancy: activation fraction must lie in [0, 1]");
}

double OccupancyModel::lambda_per_hnp() const {
  return dose * capture_area_per_hnp * retention_fraction * activation_fraction;
}

double expected_ions(const OccupancyModel& model, double n_hnps) {
  if (!(n_hnps >= 0.0)) throw DomainError("expected_ions: pillar count must be >= 0");
  return n_hnps * model.dose * model.capture_area_per_hnp * model.retention_fraction * model.activation_fraction;
}

double calibrate_loss_factor(const OccupancyModel& model, double n_hnps, double target_ions) {
  const double geometric = n_hnps * model.dose * model.capture_area_per_hnp;
  if (!(geometric > 0.0)) throw DomainError("calibrate_loss_factor: zero geometric ion count");
  const double f = target_ions / geometric;
  if (!(f >= 0.0 && f <= 1.0)) {
    throw DomainError("calibrate_loss_factor: target needs a loss factor outside [0, 1] (" + std::to_string(f) + ")");
  }
  return f;
}

std::vector<double> occupancy_pmf(double lambda, std::size_t k_max) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DomainError("occupancy_pmf: lambda must be finite and >= 0");
  std::vector<double> p(k_max + 1, 0.0);
  if (lambda == 0.0) {
    p[0] = 1.0;
    return p;
  }
  const double log_lambda = std::log(lambda);
  for (std::size_t k = 0; k <= k_max; ++k) {
    const double kd = static_cast<double>(k);
    p[k] = std::exp(kd * log_lambda - lambda - std::lgamma(kd + 1.0));
  }
  return p;
}

double g2_zero_model(std::size_t n_emitters) {
  if (n_emitters == 0) throw DomainError("g2_zero_model: needs at least one emitter");
  const double n = static_cast<double>(n_emitters);
  return (n - 1.0) / n;
}

}  // namespace ersim::geometry
