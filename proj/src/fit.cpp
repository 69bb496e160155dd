#include "ersim/fit.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "ersim/errors.hpp"

namespace ersim::fit {

namespace {

constexpr double kFdRelStep = 6e-6;

double natural_scale(double p) { return p != 0.0 ? std::abs(p) : 1.0; }

double fd_step(double p, double scale) { return kFdRelStep * std::max(std::abs(p), scale > 0.0 ? scale : natural_scale(p)); }

}  // namespace

void Model::evaluate(std::span<const double> x, std::span<const double> p, std::span<double> out) const {
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = value(x[i], p);
}

void Model::gradient(double, std::span<const double>, std::span<double>) const {
  throw DomainError("model has no analytic gradient");
}

void ModelSpec::validate() const {
  if (!model) throw DomainError("model spec: no model");
  const auto names = model->parameter_names();
  if (names.size() != parameters.size()) throw DomainError("model spec: parameter count does not match model arity");
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto& p = parameters[i];
    if (p.name != names[i]) throw DomainError("model spec: parameter '" + p.name + "' out of order");
    if (!(p.lower <= p.upper)) throw DomainError("model spec: empty bounds for '" + p.name + "'");
    if (!(p.initial >= p.lower && p.initial <= p.upper) || !std::isfinite(p.initial))
      throw DomainError("model spec: initial value of '" + p.name + "' outside bounds");
  }
}

ParameterSpec& ModelSpec::parameter(std::string_view name) {
  for (auto& p : parameters)
    if (p.name == name) return p;
  throw DomainError("model spec: no parameter '" + std::string(name) + "'");
}

double FitResult::estimate(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return estimates[i];
  throw DomainError("fit result: no parameter '" + std::string(name) + "'");
}

double FitResult::error(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return errors[i];
  throw DomainError("fit result: no parameter '" + std::string(name) + "'");
}

std::vector<double> numeric_gradient(const Model& model, double x, std::span<const double> p,
                                     std::span<const double> scale) {
  std::vector<double> q(p.begin(), p.end());
  std::vector<double> g(p.size());
  for (std::size_t j = 0; j < p.size(); ++j) {
    const double h = fd_step(p[j], scale.empty() ? 0.0 : scale[j]);
    q[j] = p[j] + h;
    const double fp = model.value(x, q);
    q[j] = p[j] - h;
    const double fm = model.value(x, q);
    q[j] = p[j];
    g[j] = (fp - fm) / (2.0 * h);
  }
  return g;
}

FitResult fit(const ModelSpec& spec, std::span<const double> x, std::span<const double> y,
              std::span<const double> weights, const FitOptions& options) {
  spec.validate();
  const Model& model = *spec.model;
  const std::size_t n = x.size();
  if (y.size() != n || (!weights.empty() && weights.size() != n))
    throw EstimationError("fit: x, y and weights must have equal length");

  std::vector<std::size_t> free;
  for (std::size_t j = 0; j < spec.parameters.size(); ++j)
    if (!spec.parameters[j].fixed) free.push_back(j);
  const std::size_t m = free.size();
  if (n < spec.parameters.size() + 1) throw EstimationError("fit: need more data points than parameters");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw EstimationError("fit: NaN or infinite value in data");
    if (!weights.empty() && !(weights[i] >= 0.0 && std::isfinite(weights[i])))
      throw EstimationError("fit: weights must be finite and >= 0");
  }

  Eigen::VectorXd sw(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) sw(static_cast<Eigen::Index>(i)) = weights.empty() ? 1.0 : std::sqrt(weights[i]);

  std::vector<double> p(spec.parameters.size());
  std::vector<double> scale(spec.parameters.size());
  for (std::size_t j = 0; j < p.size(); ++j) {
    p[j] = spec.parameters[j].initial;
    scale[j] = spec.parameters[j].scale > 0.0 ? spec.parameters[j].scale : natural_scale(p[j]);
  }

  std::vector<double> f(n);
  auto residuals = [&](const std::vector<double>& params, Eigen::VectorXd& r) {
    model.evaluate(x, params, f);
    r.resize(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      r(ii) = sw(ii) * (y[i] - f[i]);
    }
    return r.squaredNorm();
  };

  const bool analytic = model.has_gradient() && !options.numeric_jacobian;
  std::vector<double> fp(n), fm(n), grad(p.size());
  auto jacobian = [&](const std::vector<double>& params, Eigen::MatrixXd& jac) {
    jac.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
    if (analytic) {
      for (std::size_t i = 0; i < n; ++i) {
        model.gradient(x[i], params, grad);
        for (std::size_t c = 0; c < m; ++c)
          jac(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = sw(static_cast<Eigen::Index>(i)) * grad[free[c]];
      }
      return;
    }
    std::vector<double> q = params;
    for (std::size_t c = 0; c < m; ++c) {
      const std::size_t j = free[c];
      const double h = fd_step(params[j], scale[j]);
      q[j] = params[j] + h;
      model.evaluate(x, q, fp);
      q[j] = params[j] - h;
      model.evaluate(x, q, fm);
      q[j] = params[j];
      for (std::size_t i = 0; i < n; ++i)
        jac(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
            sw(static_cast<Eigen::Index>(i)) * (fp[i] - fm[i]) / (2.0 * h);
    }
  };

  FitResult res;
  res.model_id = std::string(model.id());
  res.names = model.parameter_names();

  Eigen::VectorXd r;
  double cost = residuals(p, r);
  if (!std::isfinite(cost)) throw EstimationError("fit: model is not finite at the initial point");
  res.cost_history.push_back(cost);
  double signal = 0.0;
  for (std::size_t i = 0; i < n; ++i) signal += sw(static_cast<Eigen::Index>(i)) * sw(static_cast<Eigen::Index>(i)) * y[i] * y[i];

  double lambda = options.initial_damping;
  Eigen::MatrixXd jac;
  Eigen::VectorXd diag_scale(static_cast<Eigen::Index>(m));
  bool done = m == 0;
  if (m == 0) {
    res.converged = true;
    res.message = "no free parameters";
  }
  double last_rel_change = std::numeric_limits<double>::infinity();

  while (!done && res.iterations < options.max_iterations) {
    ++res.iterations;
    jacobian(p, jac);
    const Eigen::MatrixXd a = jac.transpose() * jac;
    const Eigen::VectorXd g = jac.transpose() * r;
    const double dmax = a.diagonal().maxCoeff();
    for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(m); ++c)
      diag_scale(c) = std::sqrt(std::max(a(c, c), 1e-30 * std::max(dmax, 1e-300)));
    const Eigen::MatrixXd as = diag_scale.asDiagonal().inverse() * a * diag_scale.asDiagonal().inverse();
    const Eigen::VectorXd gs = diag_scale.asDiagonal().inverse() * g;

    bool accepted = false;
    while (!accepted) {
      Eigen::MatrixXd damped = as;
      damped.diagonal().array() += lambda;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(damped);
      Eigen::VectorXd step;
      bool solved = ldlt.info() == Eigen::Success && ldlt.isPositive();
      if (solved) {
        step = ldlt.solve(gs);
        solved = step.allFinite();
      }
      if (solved) {
        std::vector<double> trial = p;
        double rel = 0.0;
        for (std::size_t c = 0; c < m; ++c) {
          const std::size_t j = free[c];
          const auto& ps = spec.parameters[j];
          trial[j] = std::clamp(p[j] + step(static_cast<Eigen::Index>(c)) / diag_scale(static_cast<Eigen::Index>(c)),
                                ps.lower, ps.upper);
          rel = std::max(rel, std::abs(trial[j] - p[j]) / std::max(std::abs(p[j]), 1e-6 * scale[j]));
        }
        Eigen::VectorXd r_trial;
        const double trial_cost = residuals(trial, r_trial);
        if (std::isfinite(trial_cost) && trial_cost < cost) {
          p = std::move(trial);
          r = std::move(r_trial);
          cost = trial_cost;
          res.cost_history.push_back(cost);
          lambda = std::max(lambda / options.damping_factor, 1e-15);
          accepted = true;
          last_rel_change = rel;
          if (rel < options.relative_tolerance) {
            res.converged = true;
            res.message = "relative parameter change below tolerance";
            done = true;
          }
          break;
        }
      }
      lambda *= options.damping_factor;
      if (lambda > 1e16) {
        // No descent direction left: either we sit on the minimum or the problem is singular.
        // Gauss-Newton predicted decrease; below cost rounding means we are at the minimum.
        const Eigen::VectorXd gn = as.completeOrthogonalDecomposition().solve(gs);
        const double predicted = gn.allFinite() ? gs.dot(gn) : std::numeric_limits<double>::infinity();
        if (cost <= 1e-24 * signal || last_rel_change < 1e-6 || predicted <= 1e-10 * cost) {
          res.converged = true;
          res.message = "no further decrease possible at the minimum";
        } else {
          res.converged = false;
          res.message = "damping escalation failed (singular or ill-conditioned normal equations)";
        }
        done = true;
        break;
      }
    }
  }
  if (!done) res.message = "iteration limit reached";

  res.estimates = p;
  res.residual_norm = std::sqrt(cost);
  res.errors.assign(p.size(), 0.0);
  if (m > 0 && n > m) {
    jacobian(p, jac);
    const Eigen::MatrixXd a = jac.transpose() * jac;
    Eigen::VectorXd d(static_cast<Eigen::Index>(m));
    for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(m); ++c) d(c) = std::sqrt(std::max(a(c, c), 1e-300));
    const Eigen::MatrixXd as = d.asDiagonal().inverse() * a * d.asDiagonal().inverse();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(as);
    const double s2 = cost / static_cast<double>(n - m);
    if (lu.isInvertible()) {
      const Eigen::MatrixXd inv = lu.inverse();
      for (std::size_t c = 0; c < m; ++c) {
        const auto cc = static_cast<Eigen::Index>(c);
        res.errors[free[c]] = std::sqrt(std::max(inv(cc, cc), 0.0) * s2) / d(cc);
      }
    } else {
      for (std::size_t c = 0; c < m; ++c) res.errors[free[c]] = std::numeric_limits<double>::infinity();
      res.converged = false;
      res.message += "; singular covariance";
    }
  }
  return res;
}

}  // namespace ersim::fit
