#include "ersim/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "ersim/errors.hpp"
#include "ersim/fit.hpp"
#include "ersim/lineshape.hpp"
#include "ersim/models.hpp"
#include "ersim/rng.hpp"
#include "json.hpp"

namespace ersim::run {

namespace fs = std::filesystem;
using config::Config;
using json = nlohmann::ordered_json;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  return v;
}

std::vector<double> logspace(double a, double b, std::size_t n) {
  auto v = linspace(std::log(a), std::log(b), n);
  for (double& x : v) x = std::exp(x);
  return v;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

class Csv {
public:
  Csv(const fs::path& path, std::initializer_list<const char*> header) : out_(path, std::ios::binary) {
    if (!out_) throw ConfigError("cannot write " + path.string());
    bool first = true;
    for (const char* h : header) {
      out_ << (first ? "" : ",") << h;
      first = false;
    }
    out_ << '\n';
  }
  void row(std::initializer_list<double> values) {
    bool first = true;
    for (double v : values) {
      out_ << (first ? "" : ",") << fmt(v);
      first = false;
    }
    out_ << '\n';
  }

private:
  std::ofstream out_;
};

// Additive Gaussian noise with sigma = level * max|y|.
std::vector<double> add_noise(const std::vector<double>& y, double level, std::uint64_t seed, std::string_view label) {
  std::vector<double> out = y;
  if (level <= 0.0 || y.empty()) return out;
  double peak = 0.0;
  for (double v : y) peak = std::max(peak, std::abs(v));
  CounterRng rng(derive_seed(seed, label));
  for (double& v : out) v += rng.normal(0.0, level * peak);
  return out;
}

json fit_json(const fit::FitResult& r) {
  json j;
  j["model_id"] = r.model_id;
  json est = json::object(), err = json::object();
  for (std::size_t i = 0; i < r.names.size(); ++i) {
    est[r.names[i]] = r.estimates[i];
    err[r.names[i]] = r.errors[i];
  }
  j["estimates"] = est;
  j["errors"] = err;
  j["residual_norm"] = r.residual_norm;
  j["converged"] = r.converged;
  j["reliable"] = r.converged;
  j["iterations"] = r.iterations;
  j["message"] = r.message;
  return j;
}

struct Context {
  const Config& cfg;
  fs::path dir;
  RunReport& report;
  std::uint64_t seed;

  fs::path file(const std::string& name) {
    report.outputs.push_back(name);
    return dir / name;
  }
  void put(const std::string& key, double value) { report.summary.emplace_back(key, value); }
  void note_fit(const fit::FitResult& r, const std::string& name, json extra = json::object()) {
    json j = fit_json(r);
    for (auto& [k, v] : extra.items()) j[k] = v;
    std::ofstream(file(name), std::ios::binary) << j.dump(2) << '\n';
    if (!r.converged) {
      report.fit_converged = false;
      report.fit_message = r.message;
    }
  }
};

fit::FitResult fit_with(const Config& cfg, fit::ModelSpec spec, const std::vector<double>& x, const std::vector<double>& y) {
  fit::FitOptions opt;
  opt.max_iterations = static_cast<int>(cfg.count("fit", "max_iterations", 200));
  opt.relative_tolerance = cfg.number("fit", "tolerance", 1e-8);
  return fit::fit(spec, x, y, {}, opt);
}

// ---- recipes ----

void blueprint(Context& c) {
  const auto geom = geometry_from(c.cfg);
  const auto spot = spot_from(c.cfg, geom);
  const auto occ = occupancy_from(c.cfg, geom);
  const bool area = c.cfg.text("spot", "membership", "center") == "area";
  const double n = area ? geometry::effective_hnps_in_spot(geom, spot, geometry::SpotMembership::area_weighted)
                        : static_cast<double>(geometry::hnps_in_spot(geom, spot));
  const double lambda = occ.lambda_per_hnp();

  Csv sites(c.file("sites.csv"), {"col", "row", "x_nm", "y_nm", "in_spot"});
  for (std::size_t j = 0; j < geom.rows; ++j)
    for (std::size_t i = 0; i < geom.cols; ++i) {
      const auto p = geom.site(i, j);
      const double d = std::hypot(p.x - spot.center.x, p.y - spot.center.y);
      sites.row({static_cast<double>(i), static_cast<double>(j), p.x, p.y, d <= 0.5 * spot.diameter ? 1.0 : 0.0});
    }

  const std::size_t k_max = c.cfg.count("occupancy", "k_max", 20);
  const auto per_hnp = geometry::occupancy_pmf(lambda, k_max);
  const auto in_spot = geometry::occupancy_pmf(lambda * n, k_max);
  Csv pmf(c.file("occupancy_pmf.csv"), {"k", "p_per_hnp", "p_in_spot"});
  for (std::size_t k = 0; k <= k_max; ++k) pmf.row({static_cast<double>(k), per_hnp[k], in_spot[k]});

  Csv g2(c.file("g2_vs_emitters.csv"), {"n_emitters", "g2_zero"});
  for (std::size_t m = 1; m <= 10; ++m) g2.row({static_cast<double>(m), geometry::g2_zero_model(m)});

  c.put("spot_diameter_nm", spot.diameter);
  c.put("hnps_in_spot", n);
  c.put("capture_area_cm2", occ.capture_area_per_hnp);
  c.put("retention_fraction", occ.retention_fraction);
  c.put("lambda_per_hnp", lambda);
  c.put("expected_ions_in_spot", geometry::expected_ions(occ, n));
  c.put("p_empty_hnp", per_hnp[0]);
  c.put("p_single_hnp", k_max >= 1 ? per_hnp[1] : 0.0);
  if (const auto target = c.cfg.maybe("occupancy", "target_ions"))
    c.put("loss_factor", geometry::calibrate_loss_factor(occ, n, *target));
}

void implant_run(Context& c) {
  const auto profile = profile_from(c.cfg);
  const auto stack = stack_from(c.cfg);
  {
    std::ofstream out(c.file("profile.csv"), std::ios::binary);
    implant::save_profile(out, profile);
  }
  c.put("mean_depth_nm", profile.mean_depth());
  c.put("window_begin_nm", stack.window_begin());
  c.put("window_end_nm", stack.window_end());
  c.put("retained_fraction", implant::retained_fraction(profile, stack));
  c.put("vacancy_proxy", implant::vacancy_proxy(profile, stack.window_begin(), stack.window_end()));
}

void saturation(Context& c) {
  const auto exc = excitation_from(c.cfg);
  const auto sys = levels_from(c.cfg);
  const double tau = c.cfg.number("saturation", "tau_effective", sys.levels[levels::T].lifetime);
  const double rate_max = c.cfg.number("saturation", "rate_max", 1e4);
  const auto flux = logspace(c.cfg.number("saturation", "flux_min", 1e17), c.cfg.number("saturation", "flux_max", 1e21),
                             c.cfg.count("saturation", "points", 41));
  const auto clean = levels::saturation_curve(exc.cross_section, tau, flux, rate_max);
  const auto measured = add_noise(clean, c.cfg.number("saturation", "noise", 0.0), c.seed, "saturation-noise");

  const auto model = fit::make_model("saturation");
  const auto r = fit_with(c.cfg, fit::initial_spec(model, flux, measured), flux, measured);
  std::vector<double> fitted(flux.size());
  model->evaluate(flux, r.estimates, fitted);

  const double wavelength = c.cfg.number("excitation", "wavelength", 1534.0);
  Csv csv(c.file("saturation.csv"), {"photon_flux_cm2s", "intensity_w_cm2", "rate_model", "rate_measured", "rate_fit"});
  for (std::size_t i = 0; i < flux.size(); ++i)
    csv.row({flux[i], levels::flux_to_intensity(flux[i], wavelength), clean[i], measured[i], fitted[i]});

  const double phi_sat = levels::saturation_flux(exc.cross_section, tau);
  c.put("phi_sat_model", phi_sat);
  c.put("p_sat_w_cm2", levels::flux_to_intensity(phi_sat, wavelength));
  c.put("phi_sat_fit", r.estimate("phi_sat"));
  c.put("phi_sat_fit_error", r.error("phi_sat"));
  c.put("r_inf_fit", r.estimate("R_inf"));
  c.note_fit(r, "saturation_fit.json");
}

void trpl(Context& c) {
  const double t1 = c.cfg.number("trpl", "tau1", 0.3e-3);
  const double t2 = c.cfg.number("trpl", "tau2", 1.3e-3);
  const double target = c.cfg.number("trpl", "mean_lifetime", 1.2e-3);
  const auto conv = c.cfg.text("trpl", "convention", "intensity") == "amplitude" ? fit::LifetimeConvention::amplitude
                                                                                 : fit::LifetimeConvention::intensity;
  const double ratio = fit::amplitude_ratio_for_mean_lifetime(t1, t2, target, conv);
  const std::array<double, 2> amps{ratio / (1.0 + ratio), 1.0 / (1.0 + ratio)};
  const auto t = linspace(0.0, c.cfg.number("trpl", "duration", 5.0 * std::max(t1, t2)), c.cfg.count("trpl", "points", 1000));
  auto clean = levels::trpl_decay(amps, {t1, t2}, t);
  const double bg = c.cfg.number("trpl", "background", 0.0);
  for (double& v : clean) v += bg;
  const auto measured = add_noise(clean, c.cfg.number("trpl", "noise", 0.0), c.seed, "trpl-noise");

  const auto model = fit::make_model("biexp");
  const auto r = fit_with(c.cfg, fit::initial_spec(model, t, measured), t, measured);
  std::vector<double> fitted(t.size());
  model->evaluate(t, r.estimates, fitted);
  Csv csv(c.file("trpl.csv"), {"time_s", "model", "measured", "fit"});
  for (std::size_t i = 0; i < t.size(); ++i) csv.row({t[i], clean[i], measured[i], fitted[i]});

  // report the shorter component as tau1
  double a1 = r.estimate("A1"), f1 = r.estimate("tau1"), a2 = r.estimate("A2"), f2 = r.estimate("tau2");
  if (f1 > f2) {
    std::swap(a1, a2);
    std::swap(f1, f2);
  }
  c.put("amplitude_ratio", ratio);
  c.put("tau1_fit", f1);
  c.put("tau2_fit", f2);
  json extra = json::object();
  if (a1 > 0.0 && a2 > 0.0) {
    const std::vector<double> a{a1, a2}, f{f1, f2};
    const double mi = fit::weighted_mean_lifetime(a, f, fit::LifetimeConvention::intensity);
    const double ma = fit::weighted_mean_lifetime(a, f, fit::LifetimeConvention::amplitude);
    c.put("mean_lifetime_intensity", mi);
    c.put("mean_lifetime_amplitude", ma);
    extra["mean_lifetime"] = {{"intensity", mi}, {"amplitude", ma}};
  }
  c.note_fit(r, "trpl_fit.json", extra);
}

void rabi(Context& c) {
  const auto coh = coherence_from(c.cfg);
  const double omega = coh.rabi_frequency;
  const bool sine_mode = c.cfg.text("rabi", "mode", "bloch") == "sine";
  const auto tp = linspace(0.0, c.cfg.number("rabi", "width_max", 5.0 * 2.0 * kPi / omega), c.cfg.count("rabi", "points", 200));
  std::vector<double> clean;
  if (sine_mode)
    clean = coherent::rabi_sine_signal(c.cfg.number("rabi", "amplitude", 0.48), omega, c.cfg.number("rabi", "offset", 0.5), tp);
  else
    clean = coherent::rabi_bloch_signal(coh, tp, c.cfg.number("rabi", "contrast", 0.96), c.cfg.number("rabi", "offset", 0.02));
  const auto measured = add_noise(clean, c.cfg.number("rabi", "noise", 0.0), c.seed, "rabi-noise");

  const auto model = fit::make_model(sine_mode ? "rabi_sin" : "rabi_bloch", coh);
  const auto r = fit_with(c.cfg, fit::initial_spec(model, tp, measured), tp, measured);
  std::vector<double> fitted(tp.size());
  model->evaluate(tp, r.estimates, fitted);
  Csv csv(c.file("rabi.csv"), {"pulse_width_s", "model", "measured", "fit"});
  for (std::size_t i = 0; i < tp.size(); ++i) csv.row({tp[i], clean[i], measured[i], fitted[i]});

  const auto [lo, hi] = std::minmax_element(clean.begin(), clean.end());
  c.put("omega_configured", omega);
  c.put("omega_fit", r.estimate("Omega"));
  c.put("omega_fit_error", r.error("Omega"));
  c.put("pi_pulse_width", kPi / r.estimate("Omega"));
  c.put("signal_contrast", *hi - *lo);
  c.note_fit(r, "rabi_fit.json");
}

void sequence(Context& c, bool echo) {
  const std::string sec = echo ? "echo" : "ramsey";
  const auto coh = coherence_from(c.cfg);
  const double t_env = echo ? coh.t2 : coh.t2_star;
  coherent::SequenceOptions opt;
  const auto mode = c.cfg.text(sec, "mode", "analytic");
  opt.mode = mode == "bloch" ? coherent::SequenceMode::bloch
             : mode == "ensemble" ? coherent::SequenceMode::ensemble
                                  : coherent::SequenceMode::analytic;
  opt.pulse_width = c.cfg.number(sec, echo ? "pi_width" : "pi_half_width", 0.0);
  opt.shots = c.cfg.count(sec, "shots", 2000);
  opt.seed = c.seed;
  const double tau_max = c.cfg.number(sec, "tau_max", std::isfinite(t_env) ? 4.0 * t_env : 1e-3);
  const auto tau = linspace(0.0, tau_max, c.cfg.count(sec, "points", 41));
  const auto clean = echo ? coherent::echo_experiment(coh, tau, opt) : coherent::ramsey_experiment(coh, tau, opt);
  const auto measured = add_noise(clean, c.cfg.number(sec, "noise", 0.0), c.seed, sec + "-noise");

  const auto model = fit::make_model(echo ? "echo_env" : "ramsey_env");
  const auto r = fit_with(c.cfg, fit::initial_spec(model, tau, measured), tau, measured);
  std::vector<double> fitted(tau.size());
  model->evaluate(tau, r.estimates, fitted);
  Csv csv(c.file(sec + ".csv"), {"tau_s", "model", "measured", "fit"});
  for (std::size_t i = 0; i < tau.size(); ++i) csv.row({tau[i], clean[i], measured[i], fitted[i]});

  const std::string name = echo ? "T2" : "T2_star";
  c.put(name + "_configured", t_env);
  c.put(name + "_fit", r.estimate(name));
  c.put(name + "_fit_error", r.error(name));
  c.put("amplitude_fit", r.estimate("A"));
  c.note_fit(r, sec + "_fit.json");
}

void g2(Context& c) {
  auto spec = stream_from(c.cfg);
  const double signal = photon::mean_signal_clicks_per_pulse(spec);
  if (const auto target = c.cfg.maybe("stream", "target_g2")) {
    const double rho = photon::signal_fraction_for_g2(spec.n_emitters, *target);
    spec.background_rate = photon::background_rate_for_signal_fraction(signal, rho, spec.period);
  }
  const double bg_per_pulse = (spec.background_rate + spec.detector.dark_rate * spec.detector.channels) * spec.period;
  const double rho = signal + bg_per_pulse > 0.0 ? signal / (signal + bg_per_pulse) : 0.0;

  const auto stream = photon::simulate_stream(spec);
  const auto est = photon::pulsed_g2(stream, static_cast<int>(c.cfg.count("stream", "max_k", 20)));
  {
    std::ofstream out(c.file("g2_histogram.csv"), std::ios::binary);
    photon::write_histogram_csv(out, est.histogram);
  }
  if (c.cfg.text("stream", "write_clicks", "no") == "yes") {
    std::ofstream out(c.file("clicks.csv"), std::ios::binary);
    photon::write_stream_csv(out, stream);
  }
  c.put("n_emitters", static_cast<double>(spec.n_emitters));
  c.put("n_pulses", static_cast<double>(spec.n_pulses));
  c.put("clicks", static_cast<double>(stream.size()));
  c.put("background_rate", spec.background_rate);
  c.put("signal_fraction", rho);
  c.put("g2_expected", photon::g2_with_background(spec.n_emitters, rho));
  c.put("g2_zero", est.g2_zero);
  c.put("g2_uncertainty", est.uncertainty);
}

void upconversion(Context& c) {
  const auto sys = levels_from(c.cfg);
  const int pulses = static_cast<int>(c.cfg.count("upconversion", "pulses", 10));
  Csv csv(c.file("upconversion.csv"), {"pulses", "photons_1534", "photons_980", "photons_660", "photons_518", "n_G",
                                       "n_T", "n_N1", "n_R", "n_H"});
  levels::UpconversionResult last;
  for (int n = 1; n <= pulses; ++n) {
    last = levels::upconversion_sequence(sys, n);
    const auto& p = last.after_pulses;
    csv.row({static_cast<double>(n), last.yield_at(sys, 1534), last.yield_at(sys, 980), last.yield_at(sys, 660),
             last.yield_at(sys, 518), p[0], p[1], p[2], p[3], p[4]});
  }
  double total = 0.0;
  for (double v : last.photons) total += v;
  c.put("pulses", pulses);
  for (double w : {1534.0, 980.0, 660.0, 518.0}) c.put("photons_" + fmt(w), last.yield_at(sys, w));
  c.put("visible_fraction", total > 0.0 ? (last.yield_at(sys, 660) + last.yield_at(sys, 518)) / total : 0.0);

  const double duration = c.cfg.number("upconversion", "duration", 0.0);
  if (duration > 0.0) {
    const auto exc = excitation_from(c.cfg);
    double shortest = exc.excitation_rate() > 0.0 ? 1.0 / exc.excitation_rate() : levels::kInfiniteLifetime;
    for (const auto& lv : sys.levels) shortest = std::min(shortest, lv.lifetime);
    const double step = c.cfg.number("upconversion", "step", std::isfinite(shortest) ? shortest / 50.0 : duration / 1000.0);
    const auto traj = levels::integrate_populations(sys, exc, duration, step);
    std::ofstream out(c.file("trajectory.csv"), std::ios::binary);
    levels::write_trajectory_csv(out, traj);
    for (std::size_t i = 0; i < levels::kLevelCount; ++i)
      c.put("final_n_" + sys.levels[i].label, traj.populations.back()[i]);
  }
}

void ple(Context& c) {
  const double dnu = c.cfg.has("ple", "lorentz_fwhm") ? c.cfg.number("ple", "lorentz_fwhm", 0.0)
                                                        : coherent::intrinsic_linewidth(c.cfg.number("ple", "coherence_time", 32e-6));
  const double wl = c.cfg.number("ple", "laser_fwhm", 67e6);
  const auto kernel = c.cfg.text("ple", "kernel", "gaussian") == "top_hat" ? fit::LaserKernel::top_hat : fit::LaserKernel::gaussian;
  const double span = c.cfg.number("ple", "span", 12.0 * std::max(dnu, wl));
  const auto nu = linspace(-0.5 * span, 0.5 * span, c.cfg.count("ple", "points", 401));
  const auto clean = fit::lineshape_convolved(nu, dnu, wl, kernel);
  const auto measured = add_noise(clean, c.cfg.number("ple", "noise", 0.0), c.seed, "ple-noise");

  const auto model = fit::make_model("lineshape_convolved", {}, kernel);
  auto spec = fit::initial_spec(model, nu, measured);
  // Only the dominant width is identifiable; the other is held at its configured value.
  auto& held = spec.parameter(wl > 0.0 ? "lorentz_fwhm" : "laser_fwhm");
  held.initial = wl > 0.0 ? dnu : 0.0;
  held.fixed = true;
  if (wl == 0.0) spec.parameter("lorentz_fwhm").initial = std::max(spec.parameter("laser_fwhm").scale, dnu * 0.5);
  const auto r = fit_with(c.cfg, spec, nu, measured);
  std::vector<double> fitted(nu.size());
  model->evaluate(nu, r.estimates, fitted);
  Csv csv(c.file("ple.csv"), {"detuning_hz", "model", "measured", "fit"});
  for (std::size_t i = 0; i < nu.size(); ++i) csv.row({nu[i], clean[i], measured[i], fitted[i]});

  c.put("lorentz_fwhm_hz", dnu);
  c.put("laser_fwhm_hz", wl);
  c.put("model_fwhm_hz", fit::convolved_fwhm(dnu, wl, kernel));
  c.put("measured_fwhm_hz", fit::measure_fwhm(nu, measured));
  c.put("fitted_laser_fwhm_hz", r.estimate("laser_fwhm"));
  c.put("fitted_lorentz_fwhm_hz", r.estimate("lorentz_fwhm"));
  c.put("fitted_fwhm_hz", fit::convolved_fwhm(r.estimate("lorentz_fwhm"), r.estimate("laser_fwhm"), kernel));
  c.note_fit(r, "ple_fit.json");
}

void image(Context& c) {
  const auto geom = geometry_from(c.cfg);
  const auto spot = spot_from(c.cfg, geom);
  const auto occ = occupancy_from(c.cfg, geom);
  photon::CameraSpec cam;
  cam.psf_sigma = c.cfg.number("image", "psf_sigma", cam.psf_sigma);
  cam.pixel_pitch = c.cfg.number("image", "pixel_pitch", cam.pixel_pitch);
  cam.width = c.cfg.count("image", "width", cam.width);
  cam.height = c.cfg.count("image", "height", cam.height);
  const bool poisson = c.cfg.text("image", "occupancy", "poisson") == "poisson";
  const double lambda = occ.lambda_per_hnp();

  // Camera frame: spot center at the middle of the field of view.
  const double ox = 0.5 * cam.pixel_pitch * static_cast<double>(cam.width) - spot.center.x;
  const double oy = 0.5 * cam.pixel_pitch * static_cast<double>(cam.height) - spot.center.y;
  CounterRng rng(derive_seed(c.seed, "image-occupancy"));
  std::vector<geometry::Point2> emitters;
  Csv sites(c.file("emitters.csv"), {"col", "row", "x_nm", "y_nm", "ions"});
  for (std::size_t j = 0; j < geom.rows; ++j)
    for (std::size_t i = 0; i < geom.cols; ++i) {
      const auto p = geom.site(i, j);
      if (std::hypot(p.x - spot.center.x, p.y - spot.center.y) > 0.5 * spot.diameter) continue;
      const auto k = poisson ? rng.poisson(lambda) : 1;
      sites.row({static_cast<double>(i), static_cast<double>(j), p.x, p.y, static_cast<double>(k)});
      for (std::uint64_t e = 0; e < k; ++e) emitters.push_back({p.x + ox, p.y + oy});
    }
  const auto img = photon::camera_image(emitters, cam, c.cfg.count("image", "photons_per_emitter", 2000), c.seed);
  {
    std::ofstream out(c.file("image.pgm"), std::ios::binary);
    photon::write_pgm(out, img);
  }
  {
    std::ofstream out(c.file("image.csv"), std::ios::binary);
    photon::write_image_csv(out, img);
  }
  c.put("emitters", static_cast<double>(emitters.size()));
  c.put("total_counts", static_cast<double>(img.total()));
  c.put("local_maxima", static_cast<double>(photon::local_maxima(img, c.cfg.number("image", "min_fraction", 0.5)).size()));
  if (img.total() > 0) {
    const auto cen = photon::centroid(img, cam.pixel_pitch);
    c.put("centroid_x_nm", cen.x - ox);
    c.put("centroid_y_nm", cen.y - oy);
  }
}

std::vector<std::vector<double>> read_columns(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError({"[fit] input: cannot read '" + path + "'"});
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    for (char& ch : line)
      if (ch == ',' || ch == ';' || ch == '\t' || ch == '\r') ch = ' ';
    std::istringstream ss(line);
    std::string tok;
    std::vector<double> row;
    bool numeric = true;
    while (ss >> tok) {
      char* end = nullptr;
      const double v = std::strtod(tok.c_str(), &end);
      if (*end != '\0') {
        numeric = false;
        break;
      }
      row.push_back(v);
    }
    if (row.empty() && !numeric) continue;  // header or comment
    if (!numeric) throw FormatError(path + ":" + std::to_string(line_no) + ": non-numeric field");
    if (!row.empty()) rows.push_back(std::move(row));
  }
  return rows;
}

void fit_run(Context& c) {
  const std::string input = c.cfg.text("fit", "input", "");
  const auto rows = read_columns(input);
  const auto xc = c.cfg.count("fit", "x_column", 0), yc = c.cfg.count("fit", "y_column", 1);
  const bool weighted = c.cfg.has("fit", "weight_column");
  const auto wc = c.cfg.count("fit", "weight_column", 0);
  std::vector<double> x, y, w;
  for (const auto& r : rows) {
    const std::size_t need = std::max({xc, yc, weighted ? wc : 0}) + 1;
    if (r.size() < need) throw FormatError(input + ": row with " + std::to_string(r.size()) + " columns, need " + std::to_string(need));
    x.push_back(r[xc]);
    y.push_back(r[yc]);
    if (weighted) w.push_back(r[wc]);
  }
  const auto kernel = c.cfg.text("fit", "kernel", "gaussian") == "top_hat" ? fit::LaserKernel::top_hat : fit::LaserKernel::gaussian;
  const auto model = fit::make_model(c.cfg.text("fit", "model", ""), coherence_from(c.cfg), kernel);
  auto spec = fit::initial_spec(model, x, y);
  for (auto& p : spec.parameters) {
    if (const auto v = c.cfg.maybe("fit", "lower_" + p.name)) p.lower = *v;
    if (const auto v = c.cfg.maybe("fit", "upper_" + p.name)) p.upper = *v;
    if (const auto v = c.cfg.maybe("fit", "init_" + p.name)) p.initial = *v;
    if (c.cfg.text("fit", "fix_" + p.name, "no") == "yes") p.fixed = true;
  }
  try {
    spec.validate();
  } catch (const DomainError& e) {
    throw ValidationError({std::string("[fit] ") + e.what()});
  }
  fit::FitOptions opt;
  opt.max_iterations = static_cast<int>(c.cfg.count("fit", "max_iterations", 200));
  opt.relative_tolerance = c.cfg.number("fit", "tolerance", 1e-8);
  const auto r = fit::fit(spec, x, y, w, opt);
  std::vector<double> fitted(x.size());
  model->evaluate(x, r.estimates, fitted);
  Csv csv(c.file("fit_curve.csv"), {"x", "y", "fit", "residual"});
  for (std::size_t i = 0; i < x.size(); ++i) csv.row({x[i], y[i], fitted[i], y[i] - fitted[i]});
  for (std::size_t i = 0; i < r.names.size(); ++i) {
    c.put(r.names[i], r.estimates[i]);
    c.put(r.names[i] + "_error", r.errors[i]);
  }
  c.put("residual_norm", r.residual_norm);
  c.put("iterations", r.iterations);
  json extra = json::object();
  if (r.model_id == "biexp" && r.estimate("A1") > 0.0 && r.estimate("A2") > 0.0) {
    const std::vector<double> a{r.estimate("A1"), r.estimate("A2")}, t{r.estimate("tau1"), r.estimate("tau2")};
    const double mi = fit::weighted_mean_lifetime(a, t, fit::LifetimeConvention::intensity);
    const double ma = fit::weighted_mean_lifetime(a, t, fit::LifetimeConvention::amplitude);
    extra["mean_lifetime"] = {{"intensity", mi}, {"amplitude", ma}};
    c.put("mean_lifetime_intensity", mi);
    c.put("mean_lifetime_amplitude", ma);
  }
  c.note_fit(r, "fit_result.json", extra);
}

}  // namespace

double RunReport::value(std::string_view key) const {
  for (const auto& [k, v] : summary)
    if (k == key) return v;
  throw DomainError("report: no summary value '" + std::string(key) + "'");
}

geometry::ArrayGeometry geometry_from(const Config& cfg) {
  geometry::ArrayGeometry g;
  g.pitch = cfg.number("geometry", "pitch", g.pitch);
  g.rows = cfg.count("geometry", "rows", g.rows);
  g.cols = cfg.count("geometry", "cols", g.cols);
  g.hnp_inner_radius = cfg.number("geometry", "hnp_inner_radius", g.hnp_inner_radius);
  g.critical_dimension = cfg.number("geometry", "critical_dimension", g.critical_dimension);
  g.hnp_height = cfg.number("geometry", "hnp_height", g.hnp_height);
  return g;
}

geometry::ExcitationSpot spot_from(const Config& cfg, const geometry::ArrayGeometry& geom) {
  geometry::ExcitationSpot s;
  s.wavelength = cfg.number("spot", "wavelength", s.wavelength);
  if (const auto na = cfg.maybe("spot", "numerical_aperture"))
    s.diameter = geometry::diffraction_spot_diameter(s.wavelength, *na);
  else
    s.diameter = cfg.number("spot", "diameter", s.diameter);
  const auto c = geom.center();
  s.center = {cfg.number("spot", "center_x", c.x), cfg.number("spot", "center_y", c.y)};
  return s;
}

implant::DepthProfile profile_from(const Config& cfg) {
  if (cfg.has("profile", "file")) return implant::load_profile_file(cfg.text("profile", "file", ""));
  return implant::gaussian_profile(cfg.number("profile", "range", 30.0), cfg.number("profile", "straggle", 10.0),
                                   cfg.number("profile", "step", 0.5));
}

implant::StackSpec stack_from(const Config& cfg) {
  implant::StackSpec s;
  s.oxide_thickness = cfg.number("profile", "oxide_thickness", s.oxide_thickness);
  s.hnp_top_depth = cfg.number("profile", "hnp_top_depth", s.hnp_top_depth);
  s.hnp_height = cfg.number("geometry", "hnp_height", s.hnp_height);
  return s;
}

geometry::OccupancyModel occupancy_from(const Config& cfg, const geometry::ArrayGeometry& geom) {
  geometry::OccupancyModel m;
  m.dose = cfg.number("occupancy", "dose", m.dose);
  m.capture_area_per_hnp = cfg.number("occupancy", "capture_area", geometry::sidewall_capture_area(geom));
  if (const auto r = cfg.maybe("occupancy", "retention"))
    m.retention_fraction = *r;
  else if (cfg.has_section("profile"))
    m.retention_fraction = implant::retained_fraction(profile_from(cfg), stack_from(cfg));
  m.activation_fraction = cfg.number("occupancy", "activation", m.activation_fraction);
  return m;
}

levels::LevelSystem levels_from(const Config& cfg) {
  auto sys = cfg.text("levels", "preset", "nominal") == "alternate" ? levels::LevelSystem::alternate_preset()
                                                                    : levels::LevelSystem::nominal_preset();
  const std::pair<const char*, levels::Level> taus[] = {
      {"tau_T", levels::T}, {"tau_N1", levels::N1}, {"tau_R", levels::R}, {"tau_H", levels::H}};
  for (const auto& [key, lv] : taus)
    if (const auto v = cfg.maybe("levels", key)) sys.levels[lv].lifetime = *v;

  const auto* sec = cfg.section("levels");
  if (!sec) return sys;
  std::array<bool, levels::kLevelCount> row_cleared{};
  bool ladder_cleared = false;
  for (const auto& [key, e] : *sec) {
    const bool branch = key.rfind("branch_", 0) == 0;
    const bool promote = key.rfind("promote_", 0) == 0;
    if (!branch && !promote) continue;
    const std::string rest = key.substr(branch ? 7 : 8);
    const auto sep = rest.find('_');
    const auto from = levels::level_from_label(rest.substr(0, sep));
    const auto to = levels::level_from_label(rest.substr(sep + 1));
    if (!from || !to) continue;
    if (branch) {
      if (!row_cleared[*from]) {
        sys.branching[*from].fill(0.0);
        row_cleared[*from] = true;
      }
      sys.branching[*from][*to] = e.number;
    } else {
      if (!ladder_cleared) {
        sys.ladder_promotion.clear();
        ladder_cleared = true;
      }
      if (e.number > 0.0) sys.ladder_promotion.push_back({*from, *to, e.number});
    }
  }
  return sys;
}

levels::ExcitationSpec excitation_from(const Config& cfg) {
  levels::ExcitationSpec e;
  e.cross_section = cfg.number("excitation", "cross_section", 5e-17);
  e.photon_flux = cfg.number("excitation", "photon_flux", 2e19);
  e.pulse_width = cfg.number("excitation", "pulse_width", 1e-3);
  return e;
}

coherent::CoherenceParams coherence_from(const Config& cfg) {
  coherent::CoherenceParams p;
  p.rabi_frequency = cfg.number("coherence", "rabi_frequency", 2.0 * kPi * 660e3);
  p.detuning = cfg.number("coherence", "detuning", 0.0);
  p.t1 = cfg.number("coherence", "t1", p.t1);
  p.t2 = cfg.number("coherence", "t2", p.t2);
  p.t2_star = cfg.number("coherence", "t2_star", p.t2_star);
  return p;
}

photon::StreamSpec stream_from(const Config& cfg) {
  photon::StreamSpec s;
  s.n_emitters = cfg.count("stream", "n_emitters", 1);
  s.excitation = excitation_from(cfg);
  s.lifetime = cfg.number("stream", "lifetime", s.lifetime);
  s.detector.efficiency = cfg.number("detector", "efficiency", s.detector.efficiency);
  s.detector.dark_rate = cfg.number("detector", "dark_rate", s.detector.dark_rate);
  s.detector.dead_time = cfg.number("detector", "dead_time", s.detector.dead_time);
  s.detector.jitter_sigma = cfg.number("detector", "jitter", s.detector.jitter_sigma);
  s.detector.channels = static_cast<int>(cfg.count("detector", "channels", 2));
  s.n_pulses = static_cast<std::int64_t>(cfg.count("stream", "n_pulses", 200000));
  s.period = cfg.number("stream", "period", s.period);
  s.background_rate = cfg.number("stream", "background_rate", 0.0);
  s.seed = cfg.seed.value_or(0);
  return s;
}

void preflight(const Config& cfg) {
  std::vector<std::string> problems;
  try {
    config::validate(cfg);
  } catch (const ValidationError& e) {
    problems = e.problems();
  }
  const std::string& x = cfg.experiment;
  auto check = [&](const char* what, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      problems.push_back(std::string(what) + ": " + e.what());
    }
  };
  if (x == "blueprint" || x == "image") {
    check("[geometry]", [&] { geometry_from(cfg).validate(); });
    check("[spot]", [&] { spot_from(cfg, geometry_from(cfg)).validate(); });
    check("[occupancy]", [&] { occupancy_from(cfg, geometry_from(cfg)).validate(); });
  }
  if (x == "implant") {
    check("[profile]", [&] { profile_from(cfg).validate(); });
    check("[profile]", [&] { stack_from(cfg).validate(); });
  }
  if (x == "saturation" || x == "upconversion" || x == "g2") {
    check("[levels]", [&] { levels_from(cfg).validate(); });
    check("[excitation]", [&] { excitation_from(cfg).validate(); });
  }
  if (x == "saturation" && !(excitation_from(cfg).cross_section > 0.0))
    problems.emplace_back("[excitation] cross_section: must be positive for a saturation curve");
  if (x == "rabi" || x == "ramsey" || x == "echo" || (x == "fit" && cfg.text("fit", "model", "") == "rabi_bloch")) {
    const auto coh = coherence_from(cfg);
    check("[coherence]", [&] { coh.validate(); });
    const bool needs_omega = x == "rabi" || (x != "fit" && cfg.text(x, "mode", "analytic") != "analytic");
    if (needs_omega && !(coh.rabi_frequency > 0.0))
      problems.emplace_back("[coherence] rabi_frequency: must be positive");
    if (x == "ramsey" && !std::isfinite(coh.t2_star) && !cfg.has("ramsey", "tau_max"))
      problems.emplace_back("[ramsey] tau_max: required when t2_star is infinite");
    if (x == "echo" && !std::isfinite(coh.t2) && !cfg.has("echo", "tau_max"))
      problems.emplace_back("[echo] tau_max: required when t2 is infinite");
  }
  if (x == "g2") {
    const auto s = stream_from(cfg);
    check("[detector]", [&] { s.detector.validate(); });
    if (cfg.has("stream", "target_g2") && cfg.has("stream", "background_rate"))
      problems.emplace_back("[stream] target_g2: give either target_g2 or background_rate, not both");
    if (const auto t = cfg.maybe("stream", "target_g2"))
      check("[stream] target_g2", [&] { photon::signal_fraction_for_g2(s.n_emitters, *t); });
  }
  if (x == "ple") {
    const double wl = cfg.number("ple", "laser_fwhm", 67e6);
    const double dnu = cfg.has("ple", "lorentz_fwhm") ? cfg.number("ple", "lorentz_fwhm", 0.0) : 1.0;
    if (wl == 0.0 && dnu == 0.0) problems.emplace_back("[ple] laser_fwhm: both widths are zero");
  }
  if (x == "trpl") {
    check("[trpl]", [&] {
      const auto conv = cfg.text("trpl", "convention", "intensity") == "amplitude" ? fit::LifetimeConvention::amplitude
                                                                                   : fit::LifetimeConvention::intensity;
      fit::amplitude_ratio_for_mean_lifetime(cfg.number("trpl", "tau1", 0.3e-3), cfg.number("trpl", "tau2", 1.3e-3),
                                             cfg.number("trpl", "mean_lifetime", 1.2e-3), conv);
    });
  }
  if (!problems.empty()) throw ValidationError(std::move(problems));
}

RunReport run(const Config& cfg, const fs::path& out_dir) {
  preflight(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + out_dir.string() + ": " + ec.message());

  RunReport report;
  report.config_digest = config::digest(cfg);
  report.toolkit_version = ERSIM_VERSION;
  report.experiment = cfg.experiment;
  report.seed = cfg.seed.value_or(0);
  Context c{cfg, out_dir, report, report.seed};
  std::ofstream(c.file("config.canonical"), std::ios::binary) << config::canonicalize(cfg);

  const std::string& x = cfg.experiment;
  if (x == "blueprint") blueprint(c);
  else if (x == "implant") implant_run(c);
  else if (x == "saturation") saturation(c);
  else if (x == "trpl") trpl(c);
  else if (x == "rabi") rabi(c);
  else if (x == "ramsey") sequence(c, false);
  else if (x == "echo") sequence(c, true);
  else if (x == "g2") g2(c);
  else if (x == "upconversion") upconversion(c);
  else if (x == "ple") ple(c);
  else if (x == "image") image(c);
  else if (x == "fit") fit_run(c);
  else throw ValidationError({"experiment: unknown experiment '" + x + "'"});

  report.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report.outputs.push_back("report.json");
  std::ofstream(out_dir / "report.json", std::ios::binary) << report_json(report) << '\n';
  return report;
}

std::string report_json(const RunReport& r) {
  json j;
  j["config_digest"] = r.config_digest;
  j["toolkit_version"] = r.toolkit_version;
  j["experiment"] = r.experiment;
  j["seed"] = r.seed;
  j["outputs"] = r.outputs;
  json s = json::object();
  for (const auto& [k, v] : r.summary) s[k] = v;
  j["summary"] = s;
  j["fit_converged"] = r.fit_converged;
  if (!r.fit_message.empty()) j["fit_message"] = r.fit_message;
  j["wall_clock_s"] = r.wall_clock_s;
  return j.dump(2);
}

}  // namespace ersim::run
