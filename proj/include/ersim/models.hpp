#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ersim/coherent.hpp"
#include "ersim/fit.hpp"
#include "ersim/lineshape.hpp"

// Model library for the fit engine.
//
//   single_exp           A exp(-x/tau) + B                       (A, tau, B)
//   biexp                A1 exp(-x/tau1) + A2 exp(-x/tau2) + B    (A1, tau1, A2, tau2, B)
//   rabi_sin             A sin(Omega x) + B                       (A, Omega, B)
//   rabi_bloch           contrast P_e(x; Omega) + offset          (contrast, Omega, offset)
//   saturation           R_inf x / (x + phi_sat)                  (R_inf, phi_sat)
//   lineshape_convolved  A S(x - center; dnu0, W_L) + B            (A, center, lorentz_fwhm, laser_fwhm, B)
//   ramsey_env           A exp(-x/T2_star) + B                    (A, T2_star, B)
//   echo_env             A exp(-x/T2) + B                         (A, T2, B)
//
// rabi_bloch and lineshape_convolved use finite-difference Jacobians; the
// others provide analytic gradients.
namespace ersim::fit {

inline constexpr std::string_view kModelIds[] = {"single_exp", "biexp",    "rabi_sin",   "rabi_bloch",
                                                  "saturation", "lineshape_convolved", "ramsey_env", "echo_env"};

/// Throws DomainError for an unknown id. `bloch_context` supplies T1, T2 and
/// detuning for rabi_bloch; `kernel` applies to lineshape_convolved.
std::shared_ptr<const Model> make_model(std::string_view id, const coherent::CoherenceParams& bloch_context = {},
                                        LaserKernel kernel = LaserKernel::gaussian);

/// Model spec with data-driven starting values and physical bounds
/// (lifetimes, widths and rates positive).
ModelSpec initial_spec(std::shared_ptr<const Model> model, std::span<const double> x, std::span<const double> y);

enum class LifetimeConvention {
  intensity,  // sum A tau^2 / sum A tau
  amplitude,  // sum A tau / sum A
};

double weighted_mean_lifetime(std::span<const double> amplitudes, std::span<const double> lifetimes,
                              LifetimeConvention convention);

/// A1/A2 for a two-component decay whose mean lifetime equals `target`
/// (closed form); DomainError if `target` is not strictly between tau1 and tau2.
double amplitude_ratio_for_mean_lifetime(double tau1, double tau2, double target, LifetimeConvention convention);

}  // namespace ersim::fit
