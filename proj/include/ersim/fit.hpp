#pragma once

#include <limits>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

// Damped Gauss-Newton (Levenberg-Marquardt) least squares.
namespace ersim::fit {

/// A scalar model y = f(x; p).
class Model {
public:
  virtual ~Model() = default;

  virtual std::string_view id() const = 0;
  virtual std::vector<std::string> parameter_names() const = 0;
  virtual double value(double x, std::span<const double> p) const = 0;

  /// Vectorized evaluation; override when a per-call setup can be shared.
  virtual void evaluate(std::span<const double> x, std::span<const double> p, std::span<double> out) const;

  virtual bool has_gradient() const { return false; }
  /// d f / d p at x. Only called when has_gradient().
  virtual void gradient(double x, std::span<const double> p, std::span<double> out) const;

  std::size_t arity() const { return parameter_names().size(); }
};

struct ParameterSpec {
  std::string name;
  double initial = 0.0;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  bool fixed = false;
  double scale = 0.0;  // finite-difference scale; 0 -> |initial| (1 if initial is 0)
};

struct ModelSpec {
  std::shared_ptr<const Model> model;
  std::vector<ParameterSpec> parameters;

  /// Throws DomainError on arity mismatch or initial values outside bounds.
  void validate() const;
  ParameterSpec& parameter(std::string_view name);
};

struct FitOptions {
  int max_iterations = 200;
  double relative_tolerance = 1e-8;
  double initial_damping = 1e-3;
  double damping_factor = 10.0;
  bool numeric_jacobian = false;  // ignore analytic gradients
};

struct FitResult {
  std::string model_id;
  std::vector<std::string> names;
  std::vector<double> estimates;
  std::vector<double> errors;  // asymptotic, scaled by reduced chi^2; 0 for fixed parameters
  double residual_norm = 0.0;  // sqrt of the weighted sum of squares
  bool converged = false;      // false -> estimates unreliable
  int iterations = 0;
  std::vector<double> cost_history;  // weighted SSR after each accepted step, starting with the initial point
  std::string message;

  double estimate(std::string_view name) const;
  double error(std::string_view name) const;
};

/// Weighted least squares; `weights` empty means unit weights. Throws
/// EstimationError for NaN input, mismatched lengths or too few points.
FitResult fit(const ModelSpec& spec, std::span<const double> x, std::span<const double> y,
              std::span<const double> weights = {}, const FitOptions& options = {});

/// Central-difference gradient with per-parameter step 6e-6 * max(|p|, scale);
/// an empty `scale` uses |p| (1 where p is 0).
std::vector<double> numeric_gradient(const Model& model, double x, std::span<const double> p,
                                     std::span<const double> scale = {});

}  // namespace ersim::fit
