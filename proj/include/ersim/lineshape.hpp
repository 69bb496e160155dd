#pragma once

#include <span>
#include <vector>

// Homogeneous Lorentzian line seen through a broadened excitation laser.
namespace ersim::fit {

enum class LaserKernel { gaussian, top_hat };

/// Unit-area Lorentzian (FWHM `lorentz_fwhm`) convolved with a unit-area
/// laser kernel (FWHM `laser_fwhm`), evaluated at `detuning`. Either width
/// may be zero. The Gaussian kernel is integrated piecewise-linearly against
/// the exact Lorentzian antiderivative, so very narrow lines stay resolved.
double convolved_profile(double detuning, double lorentz_fwhm, double laser_fwhm,
                         LaserKernel kernel = LaserKernel::gaussian);

/// Peak-normalized spectrum on `grid` centered on `center`.
std::vector<double> lineshape_convolved(std::span<const double> grid, double lorentz_fwhm, double laser_fwhm,
                                        LaserKernel kernel = LaserKernel::gaussian, double center = 0.0);

/// FWHM of the continuous convolved profile (bisection on the half-maximum).
double convolved_fwhm(double lorentz_fwhm, double laser_fwhm, LaserKernel kernel = LaserKernel::gaussian);

/// FWHM of sampled data around its maximum, linear interpolation at the
/// half-maximum crossings. Throws EstimationError if a side never crosses.
double measure_fwhm(std::span<const double> x, std::span<const double> y);

}  // namespace ersim::fit
