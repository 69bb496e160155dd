#include "ersim/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "ersim/errors.hpp"
#include "ersim/rng.hpp"

namespace ersim::config {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNoMin = -1e308;
constexpr double kNoMax = kInf;

struct Row {
  const char* section;
  const char* key;
  Kind kind;
  double min = kNoMin;
  double max = kNoMax;
  bool min_exclusive = false;
  std::vector<std::string> choices = {};
};

const std::vector<std::string> kYesNo{"yes", "no"};
const std::vector<std::string> kExperimentIds{"blueprint", "implant", "saturation", "trpl", "rabi", "ramsey",
                                              "echo",      "g2",      "upconversion", "ple", "image", "fit"};
const std::vector<std::string> kLevelLabels{"G", "T", "N1", "R", "H"};
const std::vector<std::string> kFitModels{"single_exp", "biexp",    "rabi_sin",   "rabi_bloch",
                                          "saturation", "lineshape_convolved", "ramsey_env", "echo_env"};

Row positive(const char* s, const char* k, Kind kind) { return {s, k, kind, 0.0, kNoMax, true}; }
Row nonneg(const char* s, const char* k, Kind kind) { return {s, k, kind, 0.0, kNoMax, false}; }
Row unit_interval(const char* s, const char* k) { return {s, k, Kind::number, 0.0, 1.0, false}; }
Row any(const char* s, const char* k, Kind kind) { return {s, k, kind}; }
Row counted(const char* s, const char* k, double lo, double hi = kNoMax) { return {s, k, Kind::count, lo, hi, false}; }
Row choice(const char* s, const char* k, std::vector<std::string> c) {
  return {s, k, Kind::choice, kNoMin, kNoMax, false, std::move(c)};
}

const std::vector<Row>& schema() {
  static const std::vector<Row> rows = {
      positive("geometry", "pitch", Kind::length),
      counted("geometry", "rows", 1),
      counted("geometry", "cols", 1),
      nonneg("geometry", "hnp_inner_radius", Kind::length),
      positive("geometry", "critical_dimension", Kind::length),
      positive("geometry", "hnp_height", Kind::length),

      positive("spot", "diameter", Kind::length),
      positive("spot", "wavelength", Kind::length),
      positive("spot", "numerical_aperture", Kind::number),
      any("spot", "center_x", Kind::length),
      any("spot", "center_y", Kind::length),
      choice("spot", "membership", {"center", "area"}),

      nonneg("occupancy", "dose", Kind::dose),
      nonneg("occupancy", "capture_area", Kind::area),
      unit_interval("occupancy", "retention"),
      unit_interval("occupancy", "activation"),
      nonneg("occupancy", "target_ions", Kind::number),
      counted("occupancy", "k_max", 1, 1000),

      any("profile", "file", Kind::text),
      any("profile", "range", Kind::length),
      positive("profile", "straggle", Kind::length),
      positive("profile", "step", Kind::length),
      nonneg("profile", "oxide_thickness", Kind::length),
      nonneg("profile", "hnp_top_depth", Kind::length),

      choice("levels", "preset", {"nominal", "alternate"}),
      positive("levels", "tau_T", Kind::time),
      positive("levels", "tau_N1", Kind::time),
      positive("levels", "tau_R", Kind::time),
      positive("levels", "tau_H", Kind::time),

      nonneg("excitation", "cross_section", Kind::area),
      nonneg("excitation", "photon_flux", Kind::flux),
      nonneg("excitation", "pulse_width", Kind::time),
      positive("excitation", "wavelength", Kind::length),

      positive("saturation", "tau_effective", Kind::time),
      positive("saturation", "flux_min", Kind::flux),
      positive("saturation", "flux_max", Kind::flux),
      counted("saturation", "points", 3, 1e6),
      positive("saturation", "rate_max", Kind::rate),
      nonneg("saturation", "noise", Kind::number),

      positive("trpl", "tau1", Kind::time),
      positive("trpl", "tau2", Kind::time),
      positive("trpl", "mean_lifetime", Kind::time),
      choice("trpl", "convention", {"intensity", "amplitude"}),
      positive("trpl", "duration", Kind::time),
      counted("trpl", "points", 6, 1e7),
      nonneg("trpl", "noise", Kind::number),
      any("trpl", "background", Kind::number),

      nonneg("coherence", "rabi_frequency", Kind::angular_rate),
      any("coherence", "detuning", Kind::angular_rate),
      positive("coherence", "t1", Kind::time),
      positive("coherence", "t2", Kind::time),
      positive("coherence", "t2_star", Kind::time),

      choice("rabi", "mode", {"sine", "bloch"}),
      positive("rabi", "width_max", Kind::time),
      counted("rabi", "points", 4, 1e6),
      any("rabi", "amplitude", Kind::number),
      any("rabi", "offset", Kind::number),
      any("rabi", "contrast", Kind::number),
      nonneg("rabi", "noise", Kind::number),

      choice("ramsey", "mode", {"analytic", "bloch", "ensemble"}),
      positive("ramsey", "tau_max", Kind::time),
      counted("ramsey", "points", 4, 1e6),
      counted("ramsey", "shots", 1, 1e7),
      nonneg("ramsey", "pi_half_width", Kind::time),
      nonneg("ramsey", "noise", Kind::number),

      choice("echo", "mode", {"analytic", "bloch", "ensemble"}),
      positive("echo", "tau_max", Kind::time),
      counted("echo", "points", 4, 1e6),
      counted("echo", "shots", 1, 1e7),
      nonneg("echo", "pi_width", Kind::time),
      nonneg("echo", "noise", Kind::number),

      unit_interval("detector", "efficiency"),
      nonneg("detector", "dark_rate", Kind::rate),
      nonneg("detector", "dead_time", Kind::time),
      nonneg("detector", "jitter", Kind::time),
      counted("detector", "channels", 1, 2),

      counted("stream", "n_emitters", 1, 1e6),
      counted("stream", "n_pulses", 1, 1e9),
      positive("stream", "period", Kind::time),
      positive("stream", "lifetime", Kind::time),
      nonneg("stream", "background_rate", Kind::rate),
      unit_interval("stream", "target_g2"),
      counted("stream", "max_k", 1, 10000),
      choice("stream", "write_clicks", kYesNo),

      counted("upconversion", "pulses", 1, 100),
      nonneg("upconversion", "duration", Kind::time),
      positive("upconversion", "step", Kind::time),

      nonneg("ple", "lorentz_fwhm", Kind::frequency),
      positive("ple", "coherence_time", Kind::time),
      nonneg("ple", "laser_fwhm", Kind::frequency),
      positive("ple", "span", Kind::frequency),
      counted("ple", "points", 5, 1e6),
      choice("ple", "kernel", {"gaussian", "top_hat"}),
      nonneg("ple", "noise", Kind::number),

      positive("image", "psf_sigma", Kind::length),
      positive("image", "pixel_pitch", Kind::length),
      counted("image", "width", 3, 4096),
      counted("image", "height", 3, 4096),
      counted("image", "photons_per_emitter", 0),
      unit_interval("image", "min_fraction"),
      choice("image", "occupancy", {"poisson", "all"}),

      choice("fit", "model", kFitModels),
      any("fit", "input", Kind::text),
      counted("fit", "x_column", 0, 1000),
      counted("fit", "y_column", 0, 1000),
      counted("fit", "weight_column", 0, 1000),
      choice("fit", "kernel", {"gaussian", "top_hat"}),
      counted("fit", "max_iterations", 1, 1e6),
      positive("fit", "tolerance", Kind::number),
  };
  return rows;
}

struct UnitDef {
  const char* name;
  double factor;
};

const std::vector<UnitDef>& units(Kind kind) {
  static const std::vector<UnitDef> time{{"s", 1.0}, {"ms", 1e-3}, {"us", 1e-6}, {"µs", 1e-6},
                                         {"ns", 1e-9}, {"ps", 1e-12}, {"min", 60.0}};
  static const std::vector<UnitDef> length{{"nm", 1.0}, {"A", 0.1}, {"um", 1e3}, {"µm", 1e3},
                                           {"mm", 1e6}, {"cm", 1e7}, {"m", 1e9}};
  static const std::vector<UnitDef> frequency{{"Hz", 1.0}, {"kHz", 1e3}, {"MHz", 1e6}, {"GHz", 1e9}, {"THz", 1e12}};
  static const std::vector<UnitDef> angular{{"rad/s", 1.0}, {"krad/s", 1e3}, {"Mrad/s", 1e6}};
  static const std::vector<UnitDef> flux{{"/cm2/s", 1.0}, {"/m2/s", 1e-4}};
  static const std::vector<UnitDef> area{{"cm2", 1.0}, {"m2", 1e4}, {"um2", 1e-8}, {"nm2", 1e-14}};
  static const std::vector<UnitDef> dose{{"/cm2", 1.0}, {"/m2", 1e-4}};
  static const std::vector<UnitDef> rate{{"/s", 1.0}, {"Hz", 1.0}, {"cps", 1.0}, {"kcps", 1e3}, {"Mcps", 1e6}};
  static const std::vector<UnitDef> none{};
  switch (kind) {
    case Kind::time: return time;
    case Kind::length: return length;
    case Kind::frequency: return frequency;
    case Kind::angular_rate: return angular;
    case Kind::flux: return flux;
    case Kind::area: return area;
    case Kind::dose: return dose;
    case Kind::rate: return rate;
    default: return none;
  }
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Leading number of `s`; returns characters consumed (0 if none).
std::size_t read_number(const std::string& s, double& value) {
  if (s.rfind("inf", 0) == 0 || s.rfind("+inf", 0) == 0) {
    value = kInf;
    return s[0] == '+' ? 4 : 3;
  }
  const char* begin = s.c_str();
  char* end = nullptr;
  value = std::strtod(begin, &end);
  const auto n = static_cast<std::size_t>(end - begin);
  // strtod accepts "nan" and hex; only plain decimals are allowed here
  if (n > 0 && (std::isnan(value) || s.find_first_of("xXnN") < n)) return 0;
  return n;
}

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
  });
}

std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Entry make_entry(std::string_view raw, const KeySpec& spec) {
  Entry e;
  e.kind = spec.kind;
  const std::string v = trim(raw);
  if (spec.kind == Kind::text) {
    if (v.empty()) throw ConfigError("empty value");
    e.text = v;
    return e;
  }
  if (spec.kind == Kind::choice) {
    if (std::find(spec.choices.begin(), spec.choices.end(), v) == spec.choices.end()) {
      std::string all;
      for (const auto& c : spec.choices) all += (all.empty() ? "" : "|") + c;
      throw ConfigError("'" + v + "' is not one of " + all);
    }
    e.text = v;
    return e;
  }
  e.number = parse_quantity(v, spec.kind);
  const bool below = spec.min_exclusive ? !(e.number > spec.min) : !(e.number >= spec.min);
  if (below || !(e.number <= spec.max)) {
    std::string range = std::string(spec.min_exclusive ? "(" : "[") + (spec.min <= kNoMin ? "-inf" : format_number(spec.min)) +
                        ", " + (spec.max >= kNoMax ? "inf" : format_number(spec.max)) + "]";
    throw ConfigError("value " + format_number(e.number) + " " + std::string(base_unit(spec.kind)) + " outside " + range);
  }
  return e;
}

bool stochastic_noise(const Config& cfg, const std::string& section) { return cfg.number(section, "noise", 0.0) > 0.0; }

}  // namespace

std::string_view base_unit(Kind kind) {
  switch (kind) {
    case Kind::time: return "s";
    case Kind::length: return "nm";
    case Kind::frequency: return "Hz";
    case Kind::angular_rate: return "rad/s";
    case Kind::flux: return "/cm2/s";
    case Kind::area: return "cm2";
    case Kind::dose: return "/cm2";
    case Kind::rate: return "/s";
    default: return "";
  }
}

double parse_quantity(std::string_view text, Kind kind) {
  std::string s = trim(text);
  if (s.empty()) throw ConfigError("empty value");
  double twopi = 1.0;
  if (kind == Kind::angular_rate && s.rfind("2pi*", 0) == 0) {
    twopi = 2.0 * std::numbers::pi;
    s = trim(s.substr(4));
  }
  double value = 0.0;
  const std::size_t n = read_number(s, value);
  if (n == 0) throw ConfigError("'" + std::string(text) + "' does not start with a number");
  if (std::isinf(value) && kind != Kind::time) throw ConfigError("only times may be infinite");
  const std::string unit = trim(s.substr(n));

  switch (kind) {
    case Kind::count: {
      if (!unit.empty()) throw ConfigError("count takes no unit, got '" + unit + "'");
      if (!(value >= 0.0) || value != std::floor(value) || value > 9007199254740992.0)
        throw ConfigError("'" + s + "' is not a non-negative integer");
      return value;
    }
    case Kind::number:
      if (unit.empty()) return value;
      if (unit == "%") return value / 100.0;
      throw ConfigError("dimensionless value takes no unit, got '" + unit + "'");
    case Kind::text:
    case Kind::choice: throw ConfigError("not a quantity");
    default: break;
  }

  if (unit.empty()) {
    if (std::isinf(value) && kind == Kind::time) return value;
    throw ConfigError("missing unit (expected e.g. '" + std::string(base_unit(kind)) + "')");
  }
  if (kind == Kind::angular_rate) {
    if (twopi != 1.0) {
      for (const auto& u : units(Kind::frequency))
        if (unit == u.name) return twopi * value * u.factor;
      throw ConfigError("'2pi*' must be followed by a frequency in Hz, kHz, MHz or GHz");
    }
    for (const auto& u : units(Kind::frequency))
      if (unit == u.name)
        throw ConfigError("angular rate given in " + unit + "; write '2pi*<value> " + unit + "' or use rad/s");
  }
  for (const auto& u : units(kind))
    if (unit == u.name) return value * u.factor;
  std::string known;
  for (const auto& u : units(kind)) known += (known.empty() ? "" : ", ") + std::string(u.name);
  throw ConfigError("unknown unit '" + unit + "' (expected one of " + known + ")");
}

std::optional<KeySpec> lookup(std::string_view section, std::string_view key) {
  for (const auto& r : schema())
    if (section == r.section && key == r.key) return KeySpec{r.kind, r.min, r.max, r.min_exclusive, r.choices};

  if (section == "levels") {
    for (const char* prefix : {"branch_", "promote_"}) {
      const std::string_view p(prefix);
      if (key.substr(0, p.size()) != p) continue;
      const std::string rest(key.substr(p.size()));
      const auto sep = rest.find('_');
      if (sep == std::string::npos) return std::nullopt;
      const std::string from = rest.substr(0, sep), to = rest.substr(sep + 1);
      const bool ok = std::find(kLevelLabels.begin(), kLevelLabels.end(), from) != kLevelLabels.end() &&
                      std::find(kLevelLabels.begin(), kLevelLabels.end(), to) != kLevelLabels.end();
      if (!ok) return std::nullopt;
      return KeySpec{Kind::number, 0.0, 1.0, false, {}};
    }
  }
  if (section == "fit") {
    for (const char* prefix : {"init_", "lower_", "upper_"}) {
      const std::string_view p(prefix);
      if (key.size() > p.size() && key.substr(0, p.size()) == p) return KeySpec{Kind::number, kNoMin, kNoMax, false, {}};
    }
    if (key.size() > 4 && key.substr(0, 4) == "fix_") return KeySpec{Kind::choice, kNoMin, kNoMax, false, kYesNo};
  }
  return std::nullopt;
}

std::vector<std::string> sections() {
  std::vector<std::string> out;
  for (const auto& r : schema())
    if (out.empty() || out.back() != r.section) out.emplace_back(r.section);
  return out;
}

bool Config::has(const std::string& sec, const std::string& key) const {
  const auto it = values.find(sec);
  return it != values.end() && it->second.count(key) > 0;
}

const std::map<std::string, Entry>* Config::section(const std::string& name) const {
  const auto it = values.find(name);
  return it == values.end() ? nullptr : &it->second;
}

std::optional<double> Config::maybe(const std::string& sec, const std::string& key) const {
  if (!has(sec, key)) return std::nullopt;
  return values.at(sec).at(key).number;
}

double Config::number(const std::string& sec, const std::string& key, double fallback) const {
  return maybe(sec, key).value_or(fallback);
}

std::size_t Config::count(const std::string& sec, const std::string& key, std::size_t fallback) const {
  const auto v = maybe(sec, key);
  return v ? static_cast<std::size_t>(*v) : fallback;
}

std::string Config::text(const std::string& sec, const std::string& key, const std::string& fallback) const {
  if (!has(sec, key)) return fallback;
  return values.at(sec).at(key).text;
}

void Config::set(const std::string& sec, const std::string& key, double value) {
  const auto spec = lookup(sec, key);
  if (!spec) throw ValidationError({"[" + sec + "] " + key + ": unknown key"});
  if (spec->kind == Kind::text || spec->kind == Kind::choice)
    throw ValidationError({"[" + sec + "] " + key + ": not a numeric key"});
  try {
    auto e = make_entry(format_number(value) + (spec->kind == Kind::number || spec->kind == Kind::count
                                                    ? ""
                                                    : " " + std::string(base_unit(spec->kind))),
                        *spec);
    values[sec][key] = std::move(e);
  } catch (const ConfigError& err) {
    throw ValidationError({"[" + sec + "] " + key + ": " + err.what()});
  }
}

void Config::set_text(const std::string& sec, const std::string& key, const std::string& value) {
  const auto spec = lookup(sec, key);
  if (!spec || !(spec->kind == Kind::text || spec->kind == Kind::choice))
    throw ValidationError({"[" + sec + "] " + key + ": not a text key"});
  try {
    values[sec][key] = make_entry(value, *spec);
  } catch (const ConfigError& err) {
    throw ValidationError({"[" + sec + "] " + key + ": " + err.what()});
  }
}

Config parse(std::string_view text) {
  Config cfg;
  std::vector<std::string> problems;
  std::string section;
  bool section_ok = true;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(raw.substr(0, hash));
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";

    if (line.front() == '[') {
      if (line.back() != ']') {
        problems.push_back(where + "malformed section header '" + line + "'");
        section_ok = false;
        continue;
      }
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      const auto all = sections();
      section_ok = std::find(all.begin(), all.end(), section) != all.end();
      if (!section_ok) problems.push_back(where + "[" + section + "]: unknown section");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      problems.push_back(where + "expected 'key = value'");
      continue;
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (!is_identifier(key)) {
      problems.push_back(where + "invalid key '" + key + "'");
      continue;
    }

    if (section.empty()) {
      if (key == "experiment") {
        if (std::find(kExperimentIds.begin(), kExperimentIds.end(), value) == kExperimentIds.end())
          problems.push_back(where + "experiment: unknown experiment '" + value + "'");
        else if (!cfg.experiment.empty())
          problems.push_back(where + "experiment: duplicate key");
        else
          cfg.experiment = value;
      } else if (key == "seed") {
        const char* b = value.c_str();
        char* e = nullptr;
        errno = 0;
        const unsigned long long s = std::strtoull(b, &e, 10);
        if (value.empty() || *e != '\0' || errno == ERANGE || value.front() == '-')
          problems.push_back(where + "seed: '" + value + "' is not a 64-bit unsigned integer");
        else if (cfg.seed)
          problems.push_back(where + "seed: duplicate key");
        else
          cfg.seed = static_cast<std::uint64_t>(s);
      } else if (key == "out") {
        if (value.empty())
          problems.push_back(where + "out: empty value");
        else
          cfg.out = value;
      } else {
        problems.push_back(where + key + ": unknown top-level key");
      }
      continue;
    }
    if (!section_ok) continue;
    const auto spec = lookup(section, key);
    if (!spec) {
      problems.push_back(where + "[" + section + "] " + key + ": unknown key");
      continue;
    }
    if (cfg.has(section, key)) {
      problems.push_back(where + "[" + section + "] " + key + ": duplicate key");
      continue;
    }
    try {
      Entry e = make_entry(value, *spec);
      e.line = line_no;
      cfg.values[section][key] = std::move(e);
    } catch (const ConfigError& err) {
      problems.push_back(where + "[" + section + "] " + key + ": " + err.what());
    }
  }
  if (!problems.empty()) throw ValidationError(std::move(problems));
  return cfg;
}

Config load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError({"cannot read config file '" + path + "'"});
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

bool is_stochastic(const Config& cfg) {
  const std::string& x = cfg.experiment;
  if (x == "g2" || x == "image") return true;
  if (x == "ramsey" || x == "echo")
    return cfg.text(x, "mode", "analytic") == "ensemble" || stochastic_noise(cfg, x);
  if (x == "saturation" || x == "trpl" || x == "rabi" || x == "ple") return stochastic_noise(cfg, x);
  return false;
}

void validate(const Config& cfg) {
  std::vector<std::string> problems;
  if (cfg.experiment.empty()) problems.emplace_back("experiment: missing");
  if (is_stochastic(cfg) && !cfg.seed) problems.emplace_back("seed: required for the stochastic experiment '" + cfg.experiment + "'");
  if (cfg.experiment == "fit") {
    if (!cfg.has("fit", "model")) problems.emplace_back("[fit] model: missing");
    if (!cfg.has("fit", "input")) problems.emplace_back("[fit] input: missing");
  }
  if (cfg.number("saturation", "flux_min", 1e17) >= cfg.number("saturation", "flux_max", 1e21))
    problems.emplace_back("[saturation] flux_min: must be below flux_max");
  if (cfg.has("profile", "file") && (cfg.has("profile", "range") || cfg.has("profile", "straggle")))
    problems.emplace_back("[profile] file: give either a profile file or range/straggle, not both");
  if (cfg.has("ple", "lorentz_fwhm") && cfg.has("ple", "coherence_time"))
    problems.emplace_back("[ple] lorentz_fwhm: give either lorentz_fwhm or coherence_time, not both");
  if (cfg.has("spot", "diameter") && cfg.has("spot", "numerical_aperture"))
    problems.emplace_back("[spot] diameter: give either diameter or numerical_aperture, not both");
  if (const auto* fit = cfg.section("fit")) {
    for (const auto& [key, e] : *fit) {
      for (const char* prefix : {"init_", "lower_", "upper_", "fix_"}) {
        const std::string p(prefix);
        if (key.rfind(p, 0) != 0) continue;
        const std::string param = key.substr(p.size());
        const auto model = cfg.text("fit", "model", "");
        static const std::map<std::string, std::vector<std::string>> names{
            {"single_exp", {"A", "tau", "B"}},
            {"biexp", {"A1", "tau1", "A2", "tau2", "B"}},
            {"rabi_sin", {"A", "Omega", "B"}},
            {"rabi_bloch", {"contrast", "Omega", "offset"}},
            {"saturation", {"R_inf", "phi_sat"}},
            {"lineshape_convolved", {"A", "center", "lorentz_fwhm", "laser_fwhm", "B"}},
            {"ramsey_env", {"A", "T2_star", "B"}},
            {"echo_env", {"A", "T2", "B"}}};
        const auto it = names.find(model);
        if (it != names.end() && std::find(it->second.begin(), it->second.end(), param) == it->second.end())
          problems.push_back("[fit] " + key + ": model '" + model + "' has no parameter '" + param + "'");
      }
    }
  }
  if (!problems.empty()) throw ValidationError(std::move(problems));
}

std::string canonicalize(const Config& cfg) {
  std::string out;
  if (!cfg.experiment.empty()) out += "experiment = " + cfg.experiment + "\n";
  if (!cfg.out.empty()) out += "out = " + cfg.out + "\n";
  if (cfg.seed) out += "seed = " + std::to_string(*cfg.seed) + "\n";
  for (const auto& [sec, entries] : cfg.values) {
    if (entries.empty()) continue;
    out += "\n[" + sec + "]\n";
    for (const auto& [key, e] : entries) {
      out += key + " = ";
      if (e.kind == Kind::text || e.kind == Kind::choice) {
        out += e.text;
      } else {
        out += format_number(e.number);
        const auto unit = base_unit(e.kind);
        if (!unit.empty()) out += " " + std::string(unit);
      }
      out += "\n";
    }
  }
  return out;
}

std::string digest(const Config& cfg) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonicalize(cfg))));
  return buf;
}

}  // namespace ersim::config
