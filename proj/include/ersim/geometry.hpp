#pragma once

#include <cstddef>
#include <vector>

// HNP array geometry, excitation-spot overlap and the dose -> emitter-count
// Poisson blueprint.
namespace ersim::geometry {

struct Point2 {
  double x = 0.0;  // nm
  double y = 0.0;  // nm
};

/// Rectangular HNP lattice. Site (i, j) sits at (i * pitch, j * pitch),
/// i < cols, j < rows. All lengths in nm.
struct ArrayGeometry {
  double pitch = 250.0;
  std::size_t rows = 3;
  std::size_t cols = 4;
  double hnp_inner_radius = 25.0;
  double critical_dimension = 4.8;  // sidewall thickness
  double hnp_height = 100.0;

  /// Throws DomainError if the invariants do not hold.
  void validate() const;
  double outer_radius() const { return hnp_inner_radius + critical_dimension; }
  Point2 site(std::size_t col, std::size_t row) const;
  /// Geometric center of the lattice.
  Point2 center() const;
};

struct ExcitationSpot {
  Point2 center;
  double diameter = 1000.0;    // nm
  double wavelength = 1534.0;  // nm

  void validate() const;
};

/// NA for which 1.22 * lambda / NA is 1000 nm at 1534 nm.
inline constexpr double kDefaultNumericalAperture = 1.22 * 1534.0 / 1000.0;

/// Spot diameter 1.22 * lambda / NA.
double diffraction_spot_diameter(double wavelength_nm, double numerical_aperture = kDefaultNumericalAperture);

enum class SpotMembership {
  center_in_circle,  // pillar counted when its axis lies inside the spot
  area_weighted,     // fractional count = overlap area / pillar footprint
};

std::size_t hnps_in_spot(const ArrayGeometry& geom, const ExcitationSpot& spot);

/// Effective (possibly fractional) pillar count under the chosen membership rule.
double effective_hnps_in_spot(const ArrayGeometry& geom, const ExcitationSpot& spot, SpotMembership mode);

/// Area of the intersection of two discs.
double disc_overlap_area(double r1, double r2, double center_distance);

/// Footprint of the hollow sidewall annulus, cm^2.
double sidewall_capture_area(const ArrayGeometry& geom);

struct OccupancyModel {
  double dose = 1e12;                  // cm^-2
  double capture_area_per_hnp = 0.0;   // cm^2
  double retention_fraction = 1.0;
  double activation_fraction = 1.0;

  void validate() const;
  /// Mean ions per pillar.
  double lambda_per_hnp() const;
};

double expected_ions(const OccupancyModel& model, double n_hnps);

/// retention * activation product that puts `target_ions` in `n_hnps` pillars.
double calibrate_loss_factor(const OccupancyModel& model, double n_hnps, double target_ions);

/// Poisson pmf for k = 0..k_max.
std::vector<double> occupancy_pmf(double lambda, std::size_t k_max);

/// Pulsed g2(0) of N identical independent emitters: (N-1)/N.
double g2_zero_model(std::size_t n_emitters);

}  // namespace ersim::geometry
