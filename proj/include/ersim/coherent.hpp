#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

// Two-level optical Bloch dynamics on the telecom transition and the
// Rabi / Ramsey / echo pulse-sequence engine.
namespace ersim::coherent {

inline constexpr double kForever = std::numeric_limits<double>::infinity();

/// (u, v, w) with w = +1 fully excited, w = -1 ground.
struct BlochVector {
  double u = 0.0;
  double v = 0.0;
  double w = -1.0;

  double excited_population() const { return 0.5 * (1.0 + w); }
  double norm() const;
};

struct CoherenceParams {
  double rabi_frequency = 0.0;  // rad/s
  double detuning = 0.0;        // rad/s
  double t1 = kForever;         // s
  double t2 = kForever;         // s
  double t2_star = kForever;    // s

  /// Throws DomainError unless all times > 0 and T2 <= 2 T1.
  void validate() const;
};

enum class SegmentKind { drive, free };

struct Segment {
  SegmentKind kind = SegmentKind::free;
  double duration = 0.0;                // s
  double rabi_frequency = 0.0;          // rad/s, drive segments only
  std::optional<double> t2_override{};  // dephasing time used instead of T2
};

using PulseSequence = std::vector<Segment>;

struct BlochTrajectory {
  std::vector<double> time;
  std::vector<BlochVector> states;
};

struct EvolveResult {
  BlochVector final_state;
  BlochTrajectory trajectory;  // empty unless requested
};

/// Integrates
///   u' = -u/T2 + d v,  v' = -v/T2 - d u + W w,  w' = -(w+1)/T1 - W v
/// with W the segment Rabi frequency (zero in free segments). Drive segments
/// use fixed-step RK4, free segments the exact propagator sampled at the same
/// step. Throws ConfigError when step > min(1/W, T2)/50.
EvolveResult bloch_evolve(const BlochVector& start, const CoherenceParams& params, const PulseSequence& seq,
                          double step, bool record_trajectory = false);

/// Largest admissible step for a sequence.
double max_step(const CoherenceParams& params, const PulseSequence& seq);

double pulse_width_for_angle(double rabi_frequency, double angle);
double rotation_angle(double rabi_frequency, double width);

/// A sin(W t) + B, the sinusoidal Rabi fit form.
std::vector<double> rabi_sine_signal(double amplitude, double rabi_frequency, double offset,
                                      std::span<const double> pulse_widths);

/// offset + contrast * P_e(t_p) from Bloch evolution out of the ground state.
std::vector<double> rabi_bloch_signal(const CoherenceParams& params, std::span<const double> pulse_widths,
                                      double contrast = 1.0, double offset = 0.0);

enum class SequenceMode {
  analytic,  // exponential envelope
  bloch,     // single shot, free-segment dephasing at T2* (Ramsey) or T2 (echo)
  ensemble,  // static Gaussian detuning per shot, homogeneous T2 in free segments
};

struct SequenceOptions {
  SequenceMode mode = SequenceMode::analytic;
  double pulse_width = 0.0;  // pi/2 width for Ramsey, pi width for echo; 0 -> derived from W
  std::size_t shots = 2000;
  std::uint64_t seed = 1;
  double step = 0.0;  // 0 -> max_step
};

/// pi/2 - tau - pi/2.
PulseSequence ramsey_sequence(double rabi_frequency, double pi_half_width, double tau);
/// pi/2 - tau/2 - pi - tau/2 - pi/2.
PulseSequence echo_sequence(double rabi_frequency, double pi_width, double tau);

/// Static-detuning standard deviation giving exp(-(tau/T2*)^2) ensemble decay: sqrt(2)/T2*.
double detuning_spread(double t2_star);

/// Projection amplitude after the Ramsey sequence (final w; 1 at tau = 0 for ideal pulses).
std::vector<double> ramsey_experiment(const CoherenceParams& params, std::span<const double> tau_free,
                                      const SequenceOptions& options);

/// Echo amplitude (-final w, the refocused projection; 1 at tau = 0 for ideal pulses).
std::vector<double> echo_experiment(const CoherenceParams& params, std::span<const double> tau_free,
                                    const SequenceOptions& options);

/// 1 / (pi T), Hz; zero for an infinite coherence time.
double intrinsic_linewidth(double coherence_time);

}  // namespace ersim::coherent
