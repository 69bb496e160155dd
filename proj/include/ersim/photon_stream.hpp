#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "ersim/geometry.hpp"
#include "ersim/levels.hpp"

// Timestamped detection events from N emitters under pulsed excitation and
// the pulsed second-order correlation estimator.
namespace ersim::photon {

struct DetectorSpec {
  double efficiency = 1.0;
  double dark_rate = 0.0;     // counts/s per channel
  double dead_time = 0.0;     // s, non-paralyzable, per channel
  double jitter_sigma = 0.0;  // s
  int channels = 2;           // 1: single detector, 2: HBT pair behind a 50:50 splitter

  void validate() const;
};

struct ClickStream {
  std::vector<std::int64_t> timestamps_ps;  // sorted ascending
  std::vector<std::uint8_t> channels;
  std::int64_t pulse_period_ps = 0;
  std::int64_t origin_ps = 0;  // time of pulse 0
  std::int64_t n_pulses = 0;
  int n_channels = 2;

  std::size_t size() const { return timestamps_ps.size(); }
};

struct StreamSpec {
  std::size_t n_emitters = 1;
  levels::ExcitationSpec excitation;
  double lifetime = 1.2e-3;  // s
  DetectorSpec detector;
  std::int64_t n_pulses = 1000;
  double period = 12e-3;         // s
  double background_rate = 0.0;  // detected counts/s, uncorrelated, split evenly across channels
  std::uint64_t seed = 1;
};

/// Per pulse each idle emitter is excited with p = 1 - exp(-sigma phi t_p)
/// and emits after an Exp(lifetime) delay; an emitter still excited from an
/// earlier pulse is skipped. Detection is thinned by efficiency, background
/// and dark counts are Poisson and uniform over the period, jitter is
/// Gaussian, dead time is applied per channel. Same spec -> same stream.
ClickStream simulate_stream(const StreamSpec& spec);

/// Expected detected signal clicks per pulse when every pulse finds the emitters idle.
double mean_signal_clicks_per_pulse(const StreamSpec& spec);

struct G2Histogram {
  int max_k = 20;
  std::vector<double> counts;  // index k + max_k, k in [-max_k, max_k]

  double at(int k) const { return counts[static_cast<std::size_t>(k + max_k)]; }
};

struct G2Estimate {
  G2Histogram histogram;
  double g2_zero = 0.0;
  double uncertainty = 0.0;
  double side_mean = 0.0;
  std::size_t clicks_used = 0;
};

/// Each click is attributed to the pulse at or before it, allowing it to
/// precede the pulse by `lead_fraction` of a period (jitter tolerance).
/// Two-channel streams are cross-correlated; single-channel streams count
/// distinct click pairs. g2(0) = C_0 / mean(C_k, 1 <= |k| <= max_k), side
/// peaks corrected for the finite number of pulse pairs; Poisson errors.
/// Throws EstimationError for fewer than two clicks.
G2Estimate pulsed_g2(const ClickStream& stream, int max_k = 20, double lead_fraction = 0.05);

/// rho^2 (N-1)/N + 2 rho (1-rho) + (1-rho)^2 with rho the signal fraction of clicks.
double g2_with_background(std::size_t n_emitters, double signal_fraction);

/// Signal fraction giving the target g2(0); DomainError if unreachable.
double signal_fraction_for_g2(std::size_t n_emitters, double target_g2);

/// Background rate (counts/s) that dilutes `signal_clicks_per_pulse` to `signal_fraction`.
double background_rate_for_signal_fraction(double signal_clicks_per_pulse, double signal_fraction, double period);

void write_stream_csv(std::ostream& out, const ClickStream& stream);
ClickStream read_stream_csv(std::istream& in);
void write_histogram_csv(std::ostream& out, const G2Histogram& hist);

struct CameraSpec {
  double psf_sigma = 150.0;    // nm
  double pixel_pitch = 100.0;  // nm
  std::size_t width = 32;
  std::size_t height = 32;
};

struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint64_t> counts;  // row-major, y * width + x

  std::uint64_t at(std::size_t x, std::size_t y) const { return counts[y * width + x]; }
  std::uint64_t total() const;
};

/// Splats `photons_per_emitter` Gaussian-PSF photons per emitter onto the
/// pixel grid; pixel (0, 0) covers [0, pitch) x [0, pitch) nm.
Image camera_image(std::span<const geometry::Point2> emitters, const CameraSpec& camera,
                   std::uint64_t photons_per_emitter, std::uint64_t seed);

/// Intensity-weighted centroid in nm.
geometry::Point2 centroid(const Image& image, double pixel_pitch);

/// Pixels strictly above their 8 neighbours and above `min_fraction` of the global maximum.
std::vector<std::pair<std::size_t, std::size_t>> local_maxima(const Image& image, double min_fraction = 0.5);

/// Plain PGM (P2); counts above 65535 are rescaled.
void write_pgm(std::ostream& out, const Image& image);
void write_image_csv(std::ostream& out, const Image& image);

}  // namespace ersim::photon
