#include "ersim/lineshape.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ersim/errors.hpp"

namespace ersim::fit {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kKernelPieces = 600;
constexpr double kKernelHalfSpan = 6.0;  // Gaussian sigmas
const double kFwhmToSigma = 1.0 / (2.0 * std::sqrt(2.0 * std::numbers::ln2));

double lorentzian(double x, double hwhm) { return hwhm / kPi / (x * x + hwhm * hwhm); }

double gaussian(double x, double sigma) {
  return std::exp(-0.5 * (x / sigma) * (x / sigma)) / (sigma * std::sqrt(2.0 * kPi));
}

}  // namespace

double convolved_profile(double x, double lorentz_fwhm, double laser_fwhm, LaserKernel kernel) {
  if (!(lorentz_fwhm >= 0.0 && laser_fwhm >= 0.0)) throw DomainError("convolved_profile: widths must be >= 0");
  if (lorentz_fwhm == 0.0 && laser_fwhm == 0.0) throw DomainError("convolved_profile: both widths are zero");
  const double gamma = 0.5 * lorentz_fwhm;
  if (laser_fwhm == 0.0) return lorentzian(x, gamma);

  if (kernel == LaserKernel::top_hat) {
    const double half = 0.5 * laser_fwhm;
    if (gamma == 0.0) return std::abs(x) <= half ? 1.0 / laser_fwhm : 0.0;
    return (std::atan((x + half) / gamma) - std::atan((x - half) / gamma)) / (kPi * laser_fwhm);
  }

  const double sigma = laser_fwhm * kFwhmToSigma;
  if (gamma == 0.0) return gaussian(x, sigma);

  // Kernel G(s) linear on each piece; integrate G(s) L(x - s) ds exactly.
  const double s_lo = -kKernelHalfSpan * sigma;
  const double h = 2.0 * kKernelHalfSpan * sigma / kKernelPieces;
  double total = 0.0;
  double g0 = gaussian(s_lo, sigma);
  for (int k = 0; k < kKernelPieces; ++k) {
    const double s0 = s_lo + k * h;
    const double g1 = gaussian(s0 + h, sigma);
    const double y0 = x - s0;
    const double y1 = x - s0 - h;
    const double i0 = (std::atan(y0 / gamma) - std::atan(y1 / gamma)) / kPi;
    const double i1 = y0 * i0 - gamma / (2.0 * kPi) * std::log((y0 * y0 + gamma * gamma) / (y1 * y1 + gamma * gamma));
    total += g0 * i0 + (g1 - g0) / h * i1;
    g0 = g1;
  }
  return total;
}

std::vector<double> lineshape_convolved(std::span<const double> grid, double lorentz_fwhm, double laser_fwhm,
                                        LaserKernel kernel, double center) {
  const double peak = convolved_profile(0.0, lorentz_fwhm, laser_fwhm, kernel);
  std::vector<double> out;
  out.reserve(grid.size());
  for (double v : grid) out.push_back(convolved_profile(v - center, lorentz_fwhm, laser_fwhm, kernel) / peak);
  return out;
}

double convolved_fwhm(double lorentz_fwhm, double laser_fwhm, LaserKernel kernel) {
  const double half = 0.5 * convolved_profile(0.0, lorentz_fwhm, laser_fwhm, kernel);
  double lo = 0.0;
  double hi = lorentz_fwhm + laser_fwhm;
  while (convolved_profile(hi, lorentz_fwhm, laser_fwhm, kernel) > half) hi *= 2.0;
  for (int i = 0; i < 200 && hi - lo > 1e-14 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (convolved_profile(mid, lorentz_fwhm, laser_fwhm, kernel) > half ? lo : hi) = mid;
  }
  return lo + hi;  // symmetric profile: 2 * crossing
}

double measure_fwhm(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 3) throw EstimationError("measure_fwhm: need >= 3 matching samples");
  const auto peak_it = std::max_element(y.begin(), y.end());
  const auto ip = static_cast<std::size_t>(peak_it - y.begin());
  const double half = 0.5 * *peak_it;

  auto crossing = [&](std::size_t inside, std::size_t outside) {
    const double t = (y[inside] - half) / (y[inside] - y[outside]);
    return x[inside] + t * (x[outside] - x[inside]);
  };

  std::size_t i = ip;
  while (i > 0 && y[i - 1] > half) --i;
  if (i == 0) throw EstimationError("measure_fwhm: left half-maximum crossing outside the data");
  const double left = crossing(i, i - 1);
  std::size_t j = ip;
  while (j + 1 < y.size() && y[j + 1] > half) ++j;
  if (j + 1 == y.size()) throw EstimationError("measure_fwhm: right half-maximum crossing outside the data");
  const double right = crossing(j, j + 1);
  return right - left;
}

}  // namespace ersim::fit
