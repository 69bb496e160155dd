#include "ersim/levels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include <Eigen/Dense>

#include "ersim/errors.hpp"

namespace ersim::levels {

namespace {

constexpr double kPlanck = 6.62607015e-34;
constexpr double kLightSpeed = 2.99792458e8;

using RateMatrix = std::array<std::array<double, kLevelCount>, kLevelCount>;  // d n_i / dt = sum_j K[i][j] n_j

Populations rate_apply(const RateMatrix& k, const Populations& n) {
  Populations out{};
  for (std::size_t i = 0; i < kLevelCount; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < kLevelCount; ++j) s += k[i][j] * n[j];
    out[i] = s;
  }
  return out;
}

Populations axpy(const Populations& x, double a, const Populations& y) {
  Populations out{};
  for (std::size_t i = 0; i < kLevelCount; ++i) out[i] = x[i] + a * y[i];
  return out;
}

LevelSystem base_system(double tau_n1, double tau_r, double tau_h) {
  LevelSystem s;
  s.levels[G] = {"G", std::nullopt, kInfiniteLifetime};
  s.levels[T] = {"T", 1534.0, 1.2e-3};
  s.levels[N1] = {"N1", 980.0, tau_n1};
  s.levels[R] = {"R", 660.0, tau_r};
  s.levels[H] = {"H", 518.0, tau_h};
  // Placeholder branching: radiative return to ground plus multiphonon relaxation one rung down.
  s.branching[T][G] = 1.0;
  s.branching[N1][G] = 0.8;
  s.branching[N1][T] = 0.2;
  s.branching[R][G] = 0.7;
  s.branching[R][N1] = 0.3;
  s.branching[H][G] = 0.6;
  s.branching[H][R] = 0.4;
  s.ladder_promotion = {{G, T, 1.0}, {T, N1, 0.5}, {N1, R, 0.3}, {R, H, 0.3}};
  return s;
}

}  // namespace

LevelSystem LevelSystem::nominal_preset() { return base_system(700e-6, 310e-6, 164e-6); }
LevelSystem LevelSystem::alternate_preset() { return base_system(712e-6, 380e-6, 164e-6); }

std::optional<Level> level_from_label(const std::string& label) {
  static const std::array<const char*, kLevelCount> names{"G", "T", "N1", "R", "H"};
  for (std::size_t i = 0; i < kLevelCount; ++i)
    if (label == names[i]) return static_cast<Level>(i);
  return std::nullopt;
}

void LevelSystem::validate() const {
  if (std::isfinite(levels[G].lifetime)) throw DomainError("level system: ground level must have infinite lifetime");
  for (std::size_t i = 0; i < kLevelCount; ++i) {
    const double tau = levels[i].lifetime;
    if (!(tau > 0.0)) throw DomainError("level system: lifetime of " + levels[i].label + " must be positive");
    double row = 0.0;
    for (std::size_t j = 0; j < kLevelCount; ++j) {
      if (branching[i][j] < 0.0) throw DomainError("level system: negative branching ratio");
      row += branching[i][j];
    }
    if (std::isfinite(tau) && std::abs(row - 1.0) > 1e-9)
      throw DomainError("level system: branching row of " + levels[i].label + " does not sum to 1");
    if (branching[i][i] != 0.0) throw DomainError("level system: self-branching is not allowed");
  }
  Populations outflow{};
  for (const auto& p : ladder_promotion) {
    if (!(p.probability >= 0.0 && p.probability <= 1.0))
      throw DomainError("level system: promotion probability outside [0, 1]");
    if (p.from == p.to) throw DomainError("level system: promotion to the same level");
    outflow[p.from] += p.probability;
  }
  for (std::size_t i = 0; i < kLevelCount; ++i)
    if (outflow[i] > 1.0 + 1e-12) throw DomainError("level system: promotions out of " + levels[i].label + " exceed 1");
}

void ExcitationSpec::validate() const {
  if (!(photon_flux >= 0.0 && cross_section >= 0.0 && pulse_width >= 0.0))
    throw DomainError("excitation: flux, cross section and pulse width must be >= 0");
}

double ExcitationSpec::excitation_probability() const {
  return -std::expm1(-cross_section * photon_flux * pulse_width);
}

Trajectory integrate_populations(const LevelSystem& sys, const ExcitationSpec& exc, double duration, double step,
                                 const Populations& initial) {
  sys.validate();
  exc.validate();
  if (!(duration >= 0.0) || !(step > 0.0)) throw ConfigError("integrate_populations: need duration >= 0 and step > 0");

  double shortest = kInfiniteLifetime;
  for (const auto& lv : sys.levels) shortest = std::min(shortest, lv.lifetime);
  const double pump = exc.excitation_rate();
  if (pump > 0.0) shortest = std::min(shortest, 1.0 / pump);
  if (std::isfinite(shortest) && step > shortest / 50.0)
    throw ConfigError("integrate_populations: step must not exceed 1/50 of the fastest time constant");

  RateMatrix k{};
  for (const auto& p : sys.ladder_promotion) {
    const double rate = pump * p.probability;
    k[p.to][p.from] += rate;
    k[p.from][p.from] -= rate;
  }
  for (std::size_t i = 0; i < kLevelCount; ++i) {
    const double tau = sys.levels[i].lifetime;
    if (!std::isfinite(tau)) continue;
    for (std::size_t j = 0; j < kLevelCount; ++j) k[j][i] += sys.branching[i][j] / tau;
    k[i][i] -= 1.0 / tau;
  }

  const auto n_steps = static_cast<std::size_t>(std::max(0.0, std::ceil(duration / step - 1e-9)));
  const double h = n_steps > 0 ? duration / static_cast<double>(n_steps) : 0.0;

  Trajectory traj;
  traj.time.reserve(n_steps + 1);
  traj.populations.reserve(n_steps + 1);
  Populations n = initial;
  traj.time.push_back(0.0);
  traj.populations.push_back(n);
  for (std::size_t s = 1; s <= n_steps; ++s) {
    const Populations k1 = rate_apply(k, n);
    const Populations k2 = rate_apply(k, axpy(n, 0.5 * h, k1));
    const Populations k3 = rate_apply(k, axpy(n, 0.5 * h, k2));
    const Populations k4 = rate_apply(k, axpy(n, h, k3));
    for (std::size_t i = 0; i < kLevelCount; ++i) n[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    traj.time.push_back(h * static_cast<double>(s));
    traj.populations.push_back(n);
  }
  return traj;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  out << "time_s,n_G,n_T,n_N1,n_R,n_H\n";
  char buf[256];
  for (std::size_t s = 0; s < traj.time.size(); ++s) {
    const auto& p = traj.populations[s];
    std::snprintf(buf, sizeof buf, "%.10g,%.12g,%.12g,%.12g,%.12g,%.12g\n", traj.time[s], p[0], p[1], p[2], p[3], p[4]);
    out << buf;
  }
}

double saturation_flux(double cross_section, double tau_effective) {
  if (!(cross_section > 0.0 && tau_effective > 0.0))
    throw DomainError("saturation_flux: cross section and lifetime must be positive");
  return 1.0 / (cross_section * tau_effective);
}

std::vector<double> saturation_curve(double cross_section, double tau_effective, std::span<const double> flux,
                                     double rate_max) {
  const double phi_sat = saturation_flux(cross_section, tau_effective);
  std::vector<double> out;
  out.reserve(flux.size());
  for (double phi : flux) out.push_back(rate_max * phi / (phi + phi_sat));
  return out;
}

double flux_to_intensity(double photon_flux, double wavelength_nm) {
  return photon_flux * kPlanck * kLightSpeed / (wavelength_nm * 1e-9);
}

std::vector<double> trpl_decay(std::array<double, 2> amplitudes, std::array<double, 2> lifetimes,
                               std::span<const double> time) {
  if (!(lifetimes[0] > 0.0 && lifetimes[1] > 0.0)) throw DomainError("trpl_decay: lifetimes must be positive");
  std::vector<double> out;
  out.reserve(time.size());
  for (double t : time)
    out.push_back(amplitudes[0] * std::exp(-t / lifetimes[0]) + amplitudes[1] * std::exp(-t / lifetimes[1]));
  return out;
}

double UpconversionResult::yield_at(const LevelSystem& sys, double wavelength_nm) const {
  double y = 0.0;
  for (std::size_t i = 0; i < kLevelCount; ++i)
    if (sys.levels[i].emission_wavelength && std::abs(*sys.levels[i].emission_wavelength - wavelength_nm) < 0.5)
      y += photons[i];
  return y;
}

UpconversionResult upconversion_sequence(const LevelSystem& sys, int n_pulses) {
  if (n_pulses < 1 || n_pulses > 100) throw ConfigError("upconversion_sequence: pulse count must lie in [1, 100]");
  sys.validate();

  UpconversionResult res;
  Populations n{1.0, 0.0, 0.0, 0.0, 0.0};
  for (int pulse = 0; pulse < n_pulses; ++pulse) {
    Populations next = n;
    for (const auto& p : sys.ladder_promotion) {
      const double moved = n[p.from] * p.probability;
      next[p.from] -= moved;
      next[p.to] += moved;
    }
    n = next;
  }
  res.after_pulses = n;

  // Expected visits v to each excited level during relaxation: v = x + B^T v,
  // with B the branching among excited levels. Levels that never decay trap.
  constexpr int m = kLevelCount - 1;
  Eigen::Matrix<double, m, m> a = Eigen::Matrix<double, m, m>::Identity();
  Eigen::Matrix<double, m, 1> x;
  for (int i = 0; i < m; ++i) {
    x(i) = n[i + 1];
    if (!std::isfinite(sys.levels[i + 1].lifetime)) continue;
    for (int j = 0; j < m; ++j) a(j, i) -= sys.branching[i + 1][j + 1];
  }
  const Eigen::Matrix<double, m, 1> visits = a.fullPivLu().solve(x);
  for (int i = 0; i < m; ++i) {
    const auto lv = static_cast<std::size_t>(i + 1);
    if (!std::isfinite(sys.levels[lv].lifetime) || !sys.levels[lv].emission_wavelength) continue;
    res.photons[lv] = visits(i) * sys.branching[lv][G];
  }
  return res;
}

}  // namespace ersim::levels
