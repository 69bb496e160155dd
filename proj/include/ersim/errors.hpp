#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ersim {

/// Argument outside the mathematical domain of an operation (negative Poisson mean, zero emitters).
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Numerical settings that cannot produce a valid run (integrator step too coarse, pulse count out of range).
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed tabular input.
class FormatError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Data that an estimator cannot work with (too few clicks, NaN samples).
class EstimationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Config validation failure; carries every offending key.
class ValidationError : public std::runtime_error {
public:
  explicit ValidationError(std::vector<std::string> problems)
      : std::runtime_error(join(problems)), problems_(std::move(problems)) {}

  const std::vector<std::string>& problems() const { return problems_; }

private:
  static std::string join(const std::vector<std::string>& p) {
    std::string out = "config validation failed:";
    for (const auto& s : p) out += "\n  " + s;
    return out;
  }
  std::vector<std::string> problems_;
};

}  // namespace ersim
