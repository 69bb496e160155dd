#include "ersim/photon_stream.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>

#include "ersim/errors.hpp"
#include "ersim/rng.hpp"

namespace ersim::photon {

namespace {

std::int64_t to_ps(double seconds) { return static_cast<std::int64_t>(std::llround(seconds * 1e12)); }

struct Click {
  std::int64_t t;
  std::uint8_t ch;
};

}  // namespace

void DetectorSpec::validate() const {
  if (!(efficiency >= 0.0 && efficiency <= 1.0)) throw DomainError("detector: efficiency must lie in [0, 1]");
  if (!(dark_rate >= 0.0 && dead_time >= 0.0 && jitter_sigma >= 0.0))
    throw DomainError("detector: dark rate, dead time and jitter must be >= 0");
  if (channels != 1 && channels != 2) throw DomainError("detector: one or two channels supported");
}

double mean_signal_clicks_per_pulse(const StreamSpec& spec) {
  return static_cast<double>(spec.n_emitters) * spec.excitation.excitation_probability() * spec.detector.efficiency;
}

ClickStream simulate_stream(const StreamSpec& spec) {
  spec.detector.validate();
  spec.excitation.validate();
  if (!(spec.lifetime > 0.0) || !(spec.period > 0.0) || spec.n_pulses < 0 || !(spec.background_rate >= 0.0))
    throw DomainError("simulate_stream: lifetime and period must be positive, counts non-negative");

  const DetectorSpec& det = spec.detector;
  const std::int64_t period_ps = to_ps(spec.period);
  const double p_exc = spec.excitation.excitation_probability();
  const double per_channel_bg = (spec.background_rate / det.channels + det.dark_rate) * spec.period;

  CounterRng rng(derive_seed(spec.seed, "photon-stream"));
  std::vector<double> busy_until(spec.n_emitters, -1.0);
  std::vector<Click> clicks;
  clicks.reserve(static_cast<std::size_t>(
      static_cast<double>(spec.n_pulses) * (mean_signal_clicks_per_pulse(spec) + det.channels * per_channel_bg) * 1.1 +
      16.0));

  auto jitter = [&]() { return det.jitter_sigma > 0.0 ? to_ps(rng.normal(0.0, det.jitter_sigma)) : 0; };
  auto push = [&](std::int64_t t, std::uint8_t ch) { clicks.push_back({std::max<std::int64_t>(t, 0), ch}); };

  for (std::int64_t pulse = 0; pulse < spec.n_pulses; ++pulse) {
    const std::int64_t t_pulse = pulse * period_ps;
    const double t_pulse_s = static_cast<double>(pulse) * spec.period;
    for (std::size_t e = 0; e < spec.n_emitters; ++e) {
      if (busy_until[e] > t_pulse_s) continue;
      if (!(rng.uniform() < p_exc)) continue;
      const double delay = rng.exponential(spec.lifetime);
      busy_until[e] = t_pulse_s + delay;
      if (!(rng.uniform() < det.efficiency)) continue;
      const std::uint8_t ch = det.channels == 2 && rng.uniform() < 0.5 ? 1 : 0;
      push(t_pulse + to_ps(delay) + jitter(), ch);
    }
    for (int ch = 0; ch < det.channels; ++ch) {
      const std::uint64_t k = rng.poisson(per_channel_bg);
      for (std::uint64_t i = 0; i < k; ++i)
        push(t_pulse + to_ps(rng.uniform() * spec.period) + jitter(), static_cast<std::uint8_t>(ch));
    }
  }

  std::stable_sort(clicks.begin(), clicks.end(),
                   [](const Click& a, const Click& b) { return a.t != b.t ? a.t < b.t : a.ch < b.ch; });

  ClickStream out;
  out.pulse_period_ps = period_ps;
  out.n_pulses = spec.n_pulses;
  out.n_channels = det.channels;
  out.timestamps_ps.reserve(clicks.size());
  out.channels.reserve(clicks.size());
  const std::int64_t dead_ps = to_ps(det.dead_time);
  std::int64_t last[2] = {INT64_MIN, INT64_MIN};
  for (const auto& c : clicks) {
    if (dead_ps > 0 && last[c.ch] != INT64_MIN && c.t - last[c.ch] < dead_ps) continue;
    last[c.ch] = c.t;
    out.timestamps_ps.push_back(c.t);
    out.channels.push_back(c.ch);
  }
  return out;
}

G2Estimate pulsed_g2(const ClickStream& stream, int max_k, double lead_fraction) {
  if (stream.size() < 2) throw EstimationError("pulsed_g2: need at least two clicks");
  if (max_k < 1) throw EstimationError("pulsed_g2: max_k must be >= 1");
  if (stream.pulse_period_ps <= 0) throw EstimationError("pulsed_g2: stream has no pulse period");

  // Fold the sorted stream into per-pulse channel counts, skipping empty pulses.
  struct Bin {
    std::int64_t pulse;
    double n[2];
  };
  std::vector<Bin> bins;
  const std::int64_t lead = static_cast<std::int64_t>(std::llround(lead_fraction * static_cast<double>(stream.pulse_period_ps)));
  std::size_t used = 0;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    const std::int64_t rel = stream.timestamps_ps[i] - stream.origin_ps + lead;
    const std::int64_t idx = rel >= 0 ? rel / stream.pulse_period_ps : -1 - (-rel - 1) / stream.pulse_period_ps;
    if (idx < 0 || idx >= stream.n_pulses) continue;
    if (bins.empty() || bins.back().pulse != idx) bins.push_back({idx, {0.0, 0.0}});
    bins.back().n[stream.n_channels == 2 ? stream.channels[i] : 0] += 1.0;
    ++used;
  }

  G2Estimate est;
  est.histogram.max_k = max_k;
  est.histogram.counts.assign(static_cast<std::size_t>(2 * max_k + 1), 0.0);
  auto& c = est.histogram.counts;
  const auto zero = static_cast<std::size_t>(max_k);
  const bool cross = stream.n_channels == 2;

  for (std::size_t i = 0; i < bins.size(); ++i) {
    const Bin& a = bins[i];
    c[zero] += cross ? a.n[0] * a.n[1] : a.n[0] * (a.n[0] - 1.0);
    for (std::size_t j = i + 1; j < bins.size() && bins[j].pulse - a.pulse <= max_k; ++j) {
      const Bin& b = bins[j];
      const auto k = static_cast<std::size_t>(b.pulse - a.pulse);
      if (cross) {
        c[zero + k] += a.n[0] * b.n[1];
        c[zero - k] += b.n[0] * a.n[1];
      } else {
        c[zero + k] += a.n[0] * b.n[0];
        c[zero - k] += a.n[0] * b.n[0];
      }
    }
  }

  double side_sum = 0.0, side_raw = 0.0;
  int side_bins = 0;
  const double n_pulses = static_cast<double>(stream.n_pulses);
  for (int k = -max_k; k <= max_k; ++k) {
    if (k == 0) continue;
    const double pairs = n_pulses - std::abs(k);
    if (pairs <= 0.0) continue;
    side_sum += est.histogram.at(k) * n_pulses / pairs;
    side_raw += est.histogram.at(k);
    ++side_bins;
  }
  if (side_bins == 0 || !(side_sum > 0.0)) throw EstimationError("pulsed_g2: no coincidences in the side peaks");

  est.side_mean = side_sum / side_bins;
  const double c0 = c[zero];
  est.g2_zero = c0 / est.side_mean;
  const double rel_side = 1.0 / side_raw;
  est.uncertainty = std::sqrt((c0 > 0.0 ? c0 : 1.0) / (est.side_mean * est.side_mean) +
                              est.g2_zero * est.g2_zero * rel_side);
  est.clicks_used = used;
  return est;
}

double g2_with_background(std::size_t n_emitters, double rho) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw DomainError("g2_with_background: signal fraction must lie in [0, 1]");
  const double gs = geometry::g2_zero_model(n_emitters);
  return rho * rho * gs + 2.0 * rho * (1.0 - rho) + (1.0 - rho) * (1.0 - rho);
}

double signal_fraction_for_g2(std::size_t n_emitters, double target_g2) {
  // g2 = 1 - rho^2 (1 - g_s)
  const double gs = geometry::g2_zero_model(n_emitters);
  if (n_emitters == 1 || gs < 1.0) {
    const double rho2 = (1.0 - target_g2) / (1.0 - gs);
    if (!(rho2 >= 0.0 && rho2 <= 1.0))
      throw DomainError("signal_fraction_for_g2: target g2 not reachable with this emitter count");
    return std::sqrt(rho2);
  }
  throw DomainError("signal_fraction_for_g2: degenerate emitter model");
}

double background_rate_for_signal_fraction(double signal_clicks_per_pulse, double rho, double period) {
  if (!(rho > 0.0 && rho <= 1.0)) throw DomainError("background_rate_for_signal_fraction: rho must lie in (0, 1]");
  if (!(period > 0.0)) throw DomainError("background_rate_for_signal_fraction: period must be positive");
  return signal_clicks_per_pulse * (1.0 - rho) / rho / period;
}

void write_stream_csv(std::ostream& out, const ClickStream& s) {
  out << "# period_ps=" << s.pulse_period_ps << "\n# n_pulses=" << s.n_pulses << "\n# origin_ps=" << s.origin_ps
      << "\n# channels=" << s.n_channels << "\ntimestamp_ps,channel\n";
  std::string line;
  for (std::size_t i = 0; i < s.size(); ++i) {
    line = std::to_string(s.timestamps_ps[i]);
    line += ',';
    line += std::to_string(static_cast<int>(s.channels[i]));
    line += '\n';
    out << line;
  }
}

ClickStream read_stream_csv(std::istream& in) {
  ClickStream s;
  std::string line;
  bool have_period = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = line.substr(1, eq - 1);
      key.erase(0, key.find_first_not_of(' '));
      const long long v = std::stoll(line.substr(eq + 1));
      if (key == "period_ps") {
        s.pulse_period_ps = v;
        have_period = true;
      } else if (key == "n_pulses") {
        s.n_pulses = v;
      } else if (key == "origin_ps") {
        s.origin_ps = v;
      } else if (key == "channels") {
        s.n_channels = static_cast<int>(v);
      }
      continue;
    }
    if (line.rfind("timestamp_ps", 0) == 0) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw FormatError("click stream: expected 'timestamp_ps,channel'");
    const long long t = std::stoll(line.substr(0, comma));
    const int ch = std::stoi(line.substr(comma + 1));
    if (t < 0 || ch < 0 || ch > 1) throw FormatError("click stream: bad row '" + line + "'");
    if (!s.timestamps_ps.empty() && t < s.timestamps_ps.back()) throw FormatError("click stream: timestamps not sorted");
    s.timestamps_ps.push_back(t);
    s.channels.push_back(static_cast<std::uint8_t>(ch));
  }
  if (!have_period) throw FormatError("click stream: missing period_ps header");
  return s;
}

void write_histogram_csv(std::ostream& out, const G2Histogram& hist) {
  out << "k,counts\n";
  for (int k = -hist.max_k; k <= hist.max_k; ++k) out << k << ',' << static_cast<long long>(hist.at(k)) << '\n';
}

std::uint64_t Image::total() const { return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}); }

Image camera_image(std::span<const geometry::Point2> emitters, const CameraSpec& camera,
                   std::uint64_t photons_per_emitter, std::uint64_t seed) {
  if (!(camera.pixel_pitch > 0.0)) throw DomainError("camera_image: pixel pitch must be positive");
  if (!(camera.psf_sigma >= 0.0)) throw DomainError("camera_image: PSF width must be >= 0");
  Image img;
  img.width = camera.width;
  img.height = camera.height;
  img.counts.assign(camera.width * camera.height, 0);
  CounterRng rng(derive_seed(seed, "camera"));
  for (const auto& e : emitters) {
    for (std::uint64_t i = 0; i < photons_per_emitter; ++i) {
      const double x = e.x + rng.normal(0.0, camera.psf_sigma);
      const double y = e.y + rng.normal(0.0, camera.psf_sigma);
      const double px = std::floor(x / camera.pixel_pitch);
      const double py = std::floor(y / camera.pixel_pitch);
      if (px < 0.0 || py < 0.0 || px >= static_cast<double>(img.width) || py >= static_cast<double>(img.height)) continue;
      ++img.counts[static_cast<std::size_t>(py) * img.width + static_cast<std::size_t>(px)];
    }
  }
  return img;
}

geometry::Point2 centroid(const Image& image, double pixel_pitch) {
  double sx = 0.0, sy = 0.0, s = 0.0;
  for (std::size_t y = 0; y < image.height; ++y)
    for (std::size_t x = 0; x < image.width; ++x) {
      const double c = static_cast<double>(image.at(x, y));
      sx += c * (static_cast<double>(x) + 0.5);
      sy += c * (static_cast<double>(y) + 0.5);
      s += c;
    }
  if (s == 0.0) throw EstimationError("centroid: empty image");
  return {sx / s * pixel_pitch, sy / s * pixel_pitch};
}

std::vector<std::pair<std::size_t, std::size_t>> local_maxima(const Image& image, double min_fraction) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  if (image.counts.empty()) return out;
  const double peak = static_cast<double>(*std::max_element(image.counts.begin(), image.counts.end()));
  if (peak == 0.0) return out;
  for (std::size_t y = 0; y < image.height; ++y)
    for (std::size_t x = 0; x < image.width; ++x) {
      const auto c = image.at(x, y);
      if (static_cast<double>(c) < min_fraction * peak) continue;
      bool is_max = true;
      for (int dy = -1; dy <= 1 && is_max; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const auto nx = static_cast<long>(x) + dx, ny = static_cast<long>(y) + dy;
          if (nx < 0 || ny < 0 || nx >= static_cast<long>(image.width) || ny >= static_cast<long>(image.height)) continue;
          if (image.at(static_cast<std::size_t>(nx), static_cast<std::size_t>(ny)) >= c) {
            is_max = false;
            break;
          }
        }
      if (is_max) out.emplace_back(x, y);
    }
  return out;
}

void write_pgm(std::ostream& out, const Image& image) {
  const std::uint64_t peak = image.counts.empty() ? 0 : *std::max_element(image.counts.begin(), image.counts.end());
  const std::uint64_t maxval = std::clamp<std::uint64_t>(peak, 1, 65535);
  out << "P2\n" << image.width << ' ' << image.height << '\n' << maxval << '\n';
  for (std::size_t y = 0; y < image.height; ++y) {
    for (std::size_t x = 0; x < image.width; ++x) {
      std::uint64_t v = image.at(x, y);
      if (peak > 65535) v = v * 65535 / peak;
      out << v << (x + 1 == image.width ? '\n' : ' ');
    }
  }
}

void write_image_csv(std::ostream& out, const Image& image) {
  for (std::size_t y = 0; y < image.height; ++y)
    for (std::size_t x = 0; x < image.width; ++x) out << image.at(x, y) << (x + 1 == image.width ? '\n' : ',');
}

}  // namespace ersim::photon
