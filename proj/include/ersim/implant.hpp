#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

// Implanted-ion depth profiles: ingestion of SRIM-style tables, Gaussian
// surrogate, and overlap integrals against the retained pillar window.
namespace ersim::implant {

/// Ion density is normalized to unit trapezoid area; vacancy density is kept
/// in vacancies per ion per nm.
struct DepthProfile {
  std::vector<double> depth;  // nm, strictly increasing
  std::vector<double> ion_density;
  std::vector<double> vacancy_density;

  void validate() const;
  /// Mean depth of the ion distribution, nm.
  double mean_depth() const;
};

struct StackSpec {
  double oxide_thickness = 0.0;  // nm, sacrificial layer removed after implant
  double hnp_top_depth = 0.0;    // nm below the oxide/HNP interface
  double hnp_height = 100.0;     // nm

  void validate() const;
  double window_begin() const { return oxide_thickness + hnp_top_depth; }
  double window_end() const { return window_begin() + hnp_height; }
};

/// Integral of the piecewise-linear interpolant of `values` over [a, b].
/// Outside the grid the interpolant is zero.
double integrate_piecewise_linear(const std::vector<double>& grid, const std::vector<double>& values, double a,
                                  double b);

/// Parses a whitespace/comma/semicolon separated table. Lines that do not
/// start with a number are skipped. Columns: depth, ion density, optional
/// vacancy density. A header mentioning "Ang" switches depth units to Angstrom.
DepthProfile load_profile(std::string_view text);
DepthProfile load_profile_file(const std::string& path);

/// Writes `depth_nm,ion_density,vacancy_density` with round-trip precision.
void save_profile(std::ostream& out, const DepthProfile& profile);
void save_profile_file(const std::string& path, const DepthProfile& profile);

/// Normal density centered on `range` with straggle `straggle`, sampled on a
/// grid through `range` with spacing `grid_step`, zero beyond 5 straggles,
/// renormalized. Vacancy density is left at zero.
DepthProfile gaussian_profile(double range, double straggle, double grid_step);

/// Fraction of implanted ions landing inside the pillar window once the
/// oxide (and everything stopped in it) is stripped.
double retained_fraction(const DepthProfile& profile, const StackSpec& stack);

/// Vacancies per ion inside [begin, end].
double vacancy_proxy(const DepthProfile& profile, double begin, double end);

}  // namespace ersim::implant
