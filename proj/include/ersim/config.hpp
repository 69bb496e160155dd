#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Experiment configuration: an INI-style key/value tree in which every
// physical quantity carries its unit.
//
//   experiment = echo
//   seed = 42
//
//   [coherence]
//   t2 = 568 us
//   rabi_frequency = 2pi*660 kHz
//
// Values are converted to base units on read (s, nm, Hz, rad/s, cm^-2 s^-1,
// cm^2, cm^-2, s^-1). '#' starts a comment.
namespace ersim::config {

enum class Kind {
  time,          // s, ms, us, ns, ps, min
  length,        // nm, A, um, mm, cm, m
  frequency,     // Hz, kHz, MHz, GHz, THz
  angular_rate,  // rad/s, krad/s, Mrad/s, 2pi*Hz, 2pi*kHz, 2pi*MHz
  flux,          // /cm2/s, /m2/s
  area,          // cm2, m2, um2, nm2
  dose,          // /cm2, /m2
  rate,          // /s, Hz, cps, kcps, Mcps
  number,        // bare, or with %
  count,         // non-negative integer
  text,
  choice,
};

std::string_view base_unit(Kind kind);

/// Parses "568 us" and friends into base units. Throws ConfigError.
double parse_quantity(std::string_view text, Kind kind);

struct Entry {
  Kind kind = Kind::number;
  double number = 0.0;  // base units
  std::string text;     // text and choice
  int line = 0;
};

struct KeySpec {
  Kind kind = Kind::number;
  double min = -1e308;  // allowed range in base units
  double max = std::numeric_limits<double>::infinity();
  bool min_exclusive = false;
  std::vector<std::string> choices;
};

/// Schema lookup; nullopt for an unknown section/key. Pattern keys are
/// branch_<A>_<B>, promote_<A>_<B> in [levels] and init_/lower_/upper_/fix_<p> in [fit].
std::optional<KeySpec> lookup(std::string_view section, std::string_view key);
std::vector<std::string> sections();

struct Config {
  std::string experiment;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::map<std::string, std::map<std::string, Entry>> values;

  bool has(const std::string& section, const std::string& key) const;
  bool has_section(const std::string& section) const { return values.count(section) > 0; }
  double number(const std::string& section, const std::string& key, double fallback) const;
  std::optional<double> maybe(const std::string& section, const std::string& key) const;
  std::size_t count(const std::string& section, const std::string& key, std::size_t fallback) const;
  std::string text(const std::string& section, const std::string& key, const std::string& fallback) const;
  const std::map<std::string, Entry>* section(const std::string& name) const;

  /// Sets a value given in base units (validated against the schema).
  void set(const std::string& section, const std::string& key, double value);
  void set_text(const std::string& section, const std::string& key, const std::string& value);
};

/// Throws ValidationError listing every offending line and key.
Config parse(std::string_view text);
Config load(const std::string& path);

/// Semantic checks beyond the schema (known experiment, seed present for
/// stochastic runs, required keys). Throws ValidationError.
void validate(const Config& cfg);

/// True when the configured run draws random numbers.
bool is_stochastic(const Config& cfg);

/// Sorted keys, base units, %.17g numbers; parse(canonicalize(c)) == c.
std::string canonicalize(const Config& cfg);
/// FNV-1a 64 of the canonical bytes, 16 hex digits.
std::string digest(const Config& cfg);

}  // namespace ersim::config
