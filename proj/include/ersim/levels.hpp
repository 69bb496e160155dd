#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

// Five-level Er3+ population dynamics.
namespace ersim::levels {

inline constexpr std::size_t kLevelCount = 5;
inline constexpr double kInfiniteLifetime = std::numeric_limits<double>::infinity();

/// Index into the level arrays. Ground, telecom (4I13/2), 4I11/2, 4F9/2, 2H11/2.
enum Level : std::size_t { G = 0, T = 1, N1 = 2, R = 3, H = 4 };

using Populations = std::array<double, kLevelCount>;
using BranchingMatrix = std::array<std::array<double, kLevelCount>, kLevelCount>;  // [from][to]

struct LevelInfo {
  std::string label;
  std::optional<double> emission_wavelength;  // nm, photon emitted on decay to G
  double lifetime = kInfiniteLifetime;        // s
};

/// Per-pulse promotion from -> to with the given probability.
struct Promotion {
  Level from;
  Level to;
  double probability;
};

struct LevelSystem {
  std::array<LevelInfo, kLevelCount> levels;
  BranchingMatrix branching{};
  std::vector<Promotion> ladder_promotion;

  /// Throws DomainError on a broken invariant.
  void validate() const;

  /// Upconversion lifetimes 164 / 310 / 700 us for H / R / N1.
  static LevelSystem nominal_preset();
  /// Alternate lifetimes 164 / 380 / 712 us.
  static LevelSystem alternate_preset();
};

std::optional<Level> level_from_label(const std::string& label);

struct ExcitationSpec {
  double photon_flux = 0.0;    // cm^-2 s^-1
  double cross_section = 0.0;  // cm^2
  double pulse_width = 0.0;    // s

  void validate() const;
  /// sigma * phi, s^-1.
  double excitation_rate() const { return cross_section * photon_flux; }
  /// Probability that one pulse excites a ground-state emitter.
  double excitation_probability() const;
};

struct Trajectory {
  std::vector<double> time;  // s
  std::vector<Populations> populations;
};

/// Fixed-step RK4 integration of the rate equations. Each promotion channel
/// is pumped continuously at sigma * phi * probability; each level with a
/// finite lifetime decays through its branching row. Throws ConfigError when
/// `step` exceeds min(lifetimes, 1/(sigma phi)) / 50.
Trajectory integrate_populations(const LevelSystem& sys, const ExcitationSpec& exc, double duration, double step,
                                 const Populations& initial = Populations{1.0, 0.0, 0.0, 0.0, 0.0});

void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

/// Half-saturation flux 1 / (sigma tau).
double saturation_flux(double cross_section, double tau_effective);

/// R_inf * phi / (phi + phi_sat) on the given flux grid.
std::vector<double> saturation_curve(double cross_section, double tau_effective, std::span<const double> flux,
                                     double rate_max = 1.0);

/// Intensity phi * h c / lambda in W / cm^2.
double flux_to_intensity(double photon_flux, double wavelength_nm);

/// A1 exp(-t/tau1) + A2 exp(-t/tau2).
std::vector<double> trpl_decay(std::array<double, 2> amplitudes, std::array<double, 2> lifetimes,
                               std::span<const double> time);

struct UpconversionResult {
  Populations after_pulses{};
  /// Expected photons emitted on decays to ground, indexed by originating level.
  Populations photons{};

  /// Expected photons in the channel at `wavelength_nm` (0 if no level emits there).
  double yield_at(const LevelSystem& sys, double wavelength_nm) const;
};

/// Applies the promotion map once per pulse (instantaneous, starting from
/// ground) then lets the system relax completely. n_pulses in [1, 100].
UpconversionResult upconversion_sequence(const LevelSystem& sys, int n_pulses);

}  // namespace ersim::levels
