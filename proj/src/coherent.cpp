#include "ersim/coherent.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ersim/errors.hpp"
#include "ersim/rng.hpp"

namespace ersim::coherent {

namespace {

double inverse(double t) { return std::isfinite(t) ? 1.0 / t : 0.0; }

struct Rates {
  double g1, g2, delta, omega;
};

BlochVector derivative(const BlochVector& s, const Rates& r) {
  return {-s.u * r.g2 + r.delta * s.v, -s.v * r.g2 - r.delta * s.u + r.omega * s.w, -(s.w + 1.0) * r.g1 - r.omega * s.v};
}

BlochVector axpy(const BlochVector& x, double a, const BlochVector& d) {
  return {x.u + a * d.u, x.v + a * d.v, x.w + a * d.w};
}

BlochVector rk4(const BlochVector& s, const Rates& r, double h) {
  const BlochVector k1 = derivative(s, r);
  const BlochVector k2 = derivative(axpy(s, 0.5 * h, k1), r);
  const BlochVector k3 = derivative(axpy(s, 0.5 * h, k2), r);
  const BlochVector k4 = derivative(axpy(s, h, k3), r);
  return {s.u + h / 6.0 * (k1.u + 2.0 * k2.u + 2.0 * k3.u + k4.u),
          s.v + h / 6.0 * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v),
          s.w + h / 6.0 * (k1.w + 2.0 * k2.w + 2.0 * k3.w + k4.w)};
}

BlochVector free_propagate(const BlochVector& s, const Rates& r, double t) {
  const double decay = std::exp(-t * r.g2);
  const double c = std::cos(r.delta * t);
  const double sn = std::sin(r.delta * t);
  return {decay * (s.u * c + s.v * sn), decay * (s.v * c - s.u * sn), -1.0 + (s.w + 1.0) * std::exp(-t * r.g1)};
}

double segment_t2(const CoherenceParams& p, const Segment& seg) { return seg.t2_override.value_or(p.t2); }

}  // namespace

double BlochVector::norm() const { return std::sqrt(u * u + v * v + w * w); }

void CoherenceParams::validate() const {
  if (!(t1 > 0.0 && t2 > 0.0 && t2_star > 0.0)) throw DomainError("coherence: T1, T2, T2* must be positive");
  if (std::isfinite(t1) && std::isfinite(t2) && t2 > 2.0 * t1) throw DomainError("coherence: T2 must not exceed 2 T1");
  if (!std::isfinite(rabi_frequency) || !std::isfinite(detuning))
    throw DomainError("coherence: Rabi frequency and detuning must be finite");
}

double max_step(const CoherenceParams& params, const PulseSequence& seq) {
  double limit = kForever;
  for (const auto& seg : seq) {
    if (seg.kind == SegmentKind::drive && seg.rabi_frequency != 0.0)
      limit = std::min(limit, 1.0 / std::abs(seg.rabi_frequency));
    limit = std::min(limit, segment_t2(params, seg));
  }
  if (!std::isfinite(limit)) {
    double total = 0.0;
    for (const auto& seg : seq) total += seg.duration;
    return total;
  }
  return limit / 50.0;
}

EvolveResult bloch_evolve(const BlochVector& start, const CoherenceParams& params, const PulseSequence& seq,
                          double step, bool record_trajectory) {
  params.validate();
  if (seq.empty()) throw ConfigError("bloch_evolve: empty pulse sequence");
  for (const auto& seg : seq)
    if (!(seg.duration > 0.0)) throw ConfigError("bloch_evolve: segment durations must be positive");
  if (!(step > 0.0)) throw ConfigError("bloch_evolve: step must be positive");
  if (step > max_step(params, seq) * (1.0 + 1e-12))
    throw ConfigError("bloch_evolve: step exceeds min(1/Omega, T2)/50");

  EvolveResult res;
  BlochVector s = start;
  double t = 0.0;
  if (record_trajectory) {
    res.trajectory.time.push_back(t);
    res.trajectory.states.push_back(s);
  }
  for (const auto& seg : seq) {
    const Rates r{inverse(params.t1), inverse(segment_t2(params, seg)), params.detuning,
                  seg.kind == SegmentKind::drive ? seg.rabi_frequency : 0.0};
    const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(seg.duration / step - 1e-9)));
    const double h = seg.duration / static_cast<double>(n);
    if (seg.kind == SegmentKind::free && !record_trajectory) {
      s = free_propagate(s, r, seg.duration);
      t += seg.duration;
      continue;
    }
    const BlochVector seg_start = s;
    for (std::size_t k = 1; k <= n; ++k) {
      s = seg.kind == SegmentKind::drive ? rk4(s, r, h) : free_propagate(seg_start, r, h * static_cast<double>(k));
      if (record_trajectory) {
        res.trajectory.time.push_back(t + h * static_cast<double>(k));
        res.trajectory.states.push_back(s);
      }
    }
    t += seg.duration;
  }
  res.final_state = s;
  return res;
}

double pulse_width_for_angle(double rabi_frequency, double angle) {
  if (rabi_frequency == 0.0) throw DomainError("pulse_width_for_angle: zero Rabi frequency");
  return angle / std::abs(rabi_frequency);
}

double rotation_angle(double rabi_frequency, double width) { return rabi_frequency * width; }

std::vector<double> rabi_sine_signal(double amplitude, double rabi_frequency, double offset,
                                      std::span<const double> pulse_widths) {
  std::vector<double> out;
  out.reserve(pulse_widths.size());
  for (double tp : pulse_widths) out.push_back(amplitude * std::sin(rabi_frequency * tp) + offset);
  return out;
}

std::vector<double> rabi_bloch_signal(const CoherenceParams& params, std::span<const double> pulse_widths,
                                      double contrast, double offset) {
  std::vector<double> out;
  out.reserve(pulse_widths.size());
  for (double tp : pulse_widths) {
    if (!(tp > 0.0)) {
      out.push_back(offset + contrast * BlochVector{}.excited_population());
      continue;
    }
    const PulseSequence seq{{SegmentKind::drive, tp, params.rabi_frequency, std::nullopt}};
    const auto res = bloch_evolve(BlochVector{}, params, seq, max_step(params, seq));
    out.push_back(offset + contrast * res.final_state.excited_population());
  }
  return out;
}

PulseSequence ramsey_sequence(double rabi_frequency, double pi_half_width, double tau) {
  PulseSequence seq;
  seq.push_back({SegmentKind::drive, pi_half_width, rabi_frequency, std::nullopt});
  if (tau > 0.0) seq.push_back({SegmentKind::free, tau, 0.0, std::nullopt});
  seq.push_back({SegmentKind::drive, pi_half_width, rabi_frequency, std::nullopt});
  return seq;
}

PulseSequence echo_sequence(double rabi_frequency, double pi_width, double tau) {
  PulseSequence seq;
  seq.push_back({SegmentKind::drive, 0.5 * pi_width, rabi_frequency, std::nullopt});
  if (tau > 0.0) seq.push_back({SegmentKind::free, 0.5 * tau, 0.0, std::nullopt});
  seq.push_back({SegmentKind::drive, pi_width, rabi_frequency, std::nullopt});
  if (tau > 0.0) seq.push_back({SegmentKind::free, 0.5 * tau, 0.0, std::nullopt});
  seq.push_back({SegmentKind::drive, 0.5 * pi_width, rabi_frequency, std::nullopt});
  return seq;
}

double detuning_spread(double t2_star) {
  if (!(t2_star > 0.0)) throw DomainError("detuning_spread: T2* must be positive");
  return std::isfinite(t2_star) ? std::numbers::sqrt2 / t2_star : 0.0;
}

namespace {

enum class Kind { ramsey, echo };

std::vector<double> run_sequence(Kind kind, const CoherenceParams& params, std::span<const double> taus,
                                 const SequenceOptions& opt) {
  params.validate();
  const double envelope_time = kind == Kind::ramsey ? params.t2_star : params.t2;
  std::vector<double> out;
  out.reserve(taus.size());

  if (opt.mode == SequenceMode::analytic) {
    for (double tau : taus) out.push_back(std::isfinite(envelope_time) ? std::exp(-tau / envelope_time) : 1.0);
    return out;
  }

  const double angle = kind == Kind::ramsey ? std::numbers::pi / 2.0 : std::numbers::pi;
  const double width = opt.pulse_width > 0.0 ? opt.pulse_width : pulse_width_for_angle(params.rabi_frequency, angle);
  const double sign = kind == Kind::ramsey ? 1.0 : -1.0;

  auto build = [&](double tau) {
    PulseSequence seq = kind == Kind::ramsey ? ramsey_sequence(params.rabi_frequency, width, tau)
                                             : echo_sequence(params.rabi_frequency, width, tau);
    if (opt.mode == SequenceMode::bloch && kind == Kind::ramsey)
      for (auto& seg : seq)
        if (seg.kind == SegmentKind::free) seg.t2_override = params.t2_star;
    return seq;
  };

  if (opt.mode == SequenceMode::bloch) {
    for (double tau : taus) {
      const auto seq = build(tau);
      const double h = opt.step > 0.0 ? opt.step : max_step(params, seq);
      out.push_back(sign * bloch_evolve(BlochVector{}, params, seq, h).final_state.w);
    }
    return out;
  }

  // Ensemble: the same detuning draws are reused for every tau.
  if (opt.shots == 0) throw ConfigError("ensemble mode needs at least one shot");
  CounterRng rng(derive_seed(opt.seed, kind == Kind::ramsey ? "ramsey-ensemble" : "echo-ensemble"));
  const double spread = detuning_spread(params.t2_star);
  std::vector<double> detunings(opt.shots);
  for (double& d : detunings) d = params.detuning + rng.normal(0.0, spread);

  for (double tau : taus) {
    const auto seq = build(tau);
    const double h = opt.step > 0.0 ? opt.step : max_step(params, seq);
    double acc = 0.0;
    for (double d : detunings) {
      CoherenceParams shot = params;
      shot.detuning = d;
      acc += bloch_evolve(BlochVector{}, shot, seq, h).final_state.w;
    }
    out.push_back(sign * acc / static_cast<double>(detunings.size()));
  }
  return out;
}

}  // namespace

std::vector<double> ramsey_experiment(const CoherenceParams& params, std::span<const double> tau_free,
                                      const SequenceOptions& options) {
  return run_sequence(Kind::ramsey, params, tau_free, options);
}

std::vector<double> echo_experiment(const CoherenceParams& params, std::span<const double> tau_free,
                                    const SequenceOptions& options) {
  return run_sequence(Kind::echo, params, tau_free, options);
}

double intrinsic_linewidth(double coherence_time) {
  if (!(coherence_time > 0.0)) throw DomainError("intrinsic_linewidth: coherence time must be positive");
  if (!std::isfinite(coherence_time)) return 0.0;
  return 1.0 / (std::numbers::pi * coherence_time);
}

}  // namespace ersim::coherent
