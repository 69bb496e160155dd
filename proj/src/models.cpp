#include "ersim/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "ersim/errors.hpp"

namespace ersim::fit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

class ExpModel final : public Model {
public:
  ExpModel(std::string_view id, std::string tau_name) : id_(id), tau_name_(std::move(tau_name)) {}
  std::string_view id() const override { return id_; }
  std::vector<std::string> parameter_names() const override { return {"A", tau_name_, "B"}; }
  double value(double x, std::span<const double> p) const override { return p[0] * std::exp(-x / p[1]) + p[2]; }
  bool has_gradient() const override { return true; }
  void gradient(double x, std::span<const double> p, std::span<double> g) const override {
    const double e = std::exp(-x / p[1]);
    g[0] = e;
    g[1] = p[0] * e * x / (p[1] * p[1]);
    g[2] = 1.0;
  }

private:
  std::string_view id_;
  std::string tau_name_;
};

class BiExpModel final : public Model {
public:
  std::string_view id() const override { return "biexp"; }
  std::vector<std::string> parameter_names() const override { return {"A1", "tau1", "A2", "tau2", "B"}; }
  double value(double x, std::span<const double> p) const override {
    return p[0] * std::exp(-x / p[1]) + p[2] * std::exp(-x / p[3]) + p[4];
  }
  bool has_gradient() const override { return true; }
  void gradient(double x, std::span<const double> p, std::span<double> g) const override {
    const double e1 = std::exp(-x / p[1]);
    const double e2 = std::exp(-x / p[3]);
    g[0] = e1;
    g[1] = p[0] * e1 * x / (p[1] * p[1]);
    g[2] = e2;
    g[3] = p[2] * e2 * x / (p[3] * p[3]);
    g[4] = 1.0;
  }
};

class RabiSinModel final : public Model {
public:
  std::string_view id() const override { return "rabi_sin"; }
  std::vector<std::string> parameter_names() const override { return {"A", "Omega", "B"}; }
  double value(double x, std::span<const double> p) const override { return p[0] * std::sin(p[1] * x) + p[2]; }
  bool has_gradient() const override { return true; }
  void gradient(double x, std::span<const double> p, std::span<double> g) const override {
    g[0] = std::sin(p[1] * x);
    g[1] = p[0] * x * std::cos(p[1] * x);
    g[2] = 1.0;
  }
};

class RabiBlochModel final : public Model {
public:
  explicit RabiBlochModel(const coherent::CoherenceParams& ctx) : ctx_(ctx) {}
  std::string_view id() const override { return "rabi_bloch"; }
  std::vector<std::string> parameter_names() const override { return {"contrast", "Omega", "offset"}; }
  double value(double x, std::span<const double> p) const override {
    const double xs[] = {x};
    std::vector<double> out(1);
    evaluate(xs, p, out);
    return out[0];
  }
  void evaluate(std::span<const double> x, std::span<const double> p, std::span<double> out) const override {
    coherent::CoherenceParams c = ctx_;
    c.rabi_frequency = p[1];
    const auto s = coherent::rabi_bloch_signal(c, x, p[0], p[2]);
    std::copy(s.begin(), s.end(), out.begin());
  }

private:
  coherent::CoherenceParams ctx_;
};

class SaturationModel final : public Model {
public:
  std::string_view id() const override { return "saturation"; }
  std::vector<std::string> parameter_names() const override { return {"R_inf", "phi_sat"}; }
  double value(double x, std::span<const double> p) const override { return p[0] * x / (x + p[1]); }
  bool has_gradient() const override { return true; }
  void gradient(double x, std::span<const double> p, std::span<double> g) const override {
    const double d = x + p[1];
    g[0] = x / d;
    g[1] = -p[0] * x / (d * d);
  }
};

class LineshapeModel final : public Model {
public:
  explicit LineshapeModel(LaserKernel kernel) : kernel_(kernel) {}
  std::string_view id() const override { return "lineshape_convolved"; }
  std::vector<std::string> parameter_names() const override {
    return {"A", "center", "lorentz_fwhm", "laser_fwhm", "B"};
  }
  double value(double x, std::span<const double> p) const override {
    return p[0] * convolved_profile(x - p[1], p[2], p[3], kernel_) / convolved_profile(0.0, p[2], p[3], kernel_) + p[4];
  }
  void evaluate(std::span<const double> x, std::span<const double> p, std::span<double> out) const override {
    const double peak = convolved_profile(0.0, p[2], p[3], kernel_);
    for (std::size_t i = 0; i < x.size(); ++i)
      out[i] = p[0] * convolved_profile(x[i] - p[1], p[2], p[3], kernel_) / peak + p[4];
  }

private:
  LaserKernel kernel_;
};

double tail_level(std::span<const double> y) {
  const std::size_t n = std::max<std::size_t>(1, y.size() / 10);
  return std::accumulate(y.end() - static_cast<std::ptrdiff_t>(n), y.end(), 0.0) / static_cast<double>(n);
}

// Best linear least squares a * basis(x) + b; returns SSR.
template <class Basis>
double linear_ls(std::span<const double> x, std::span<const double> y, Basis basis, double& a, double& b) {
  double s1 = 0, sb = 0, sbb = 0, sy = 0, sby = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = basis(x[i]);
    s1 += 1.0;
    sb += v;
    sbb += v * v;
    sy += y[i];
    sby += v * y[i];
  }
  const double det = s1 * sbb - sb * sb;
  if (std::abs(det) < 1e-300) {
    a = 0.0;
    b = sy / s1;
  } else {
    a = (s1 * sby - sb * sy) / det;
    b = (sbb * sy - sb * sby) / det;
  }
  double ssr = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - a * basis(x[i]) - b;
    ssr += r * r;
  }
  return ssr;
}

ParameterSpec param(std::string name, double init, double lo = -kInf, double hi = kInf, double scale = 0.0) {
  ParameterSpec p;
  p.name = std::move(name);
  p.initial = init;
  p.lower = lo;
  p.upper = hi;
  p.scale = scale;
  return p;
}

}  // namespace

std::shared_ptr<const Model> make_model(std::string_view id, const coherent::CoherenceParams& ctx, LaserKernel kernel) {
  if (id == "single_exp") return std::make_shared<ExpModel>("single_exp", "tau");
  if (id == "ramsey_env") return std::make_shared<ExpModel>("ramsey_env", "T2_star");
  if (id == "echo_env") return std::make_shared<ExpModel>("echo_env", "T2");
  if (id == "biexp") return std::make_shared<BiExpModel>();
  if (id == "rabi_sin") return std::make_shared<RabiSinModel>();
  if (id == "rabi_bloch") return std::make_shared<RabiBlochModel>(ctx);
  if (id == "saturation") return std::make_shared<SaturationModel>();
  if (id == "lineshape_convolved") return std::make_shared<LineshapeModel>(kernel);
  throw DomainError("unknown model id '" + std::string(id) + "'");
}

ModelSpec initial_spec(std::shared_ptr<const Model> model, std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 3) throw EstimationError("initial_spec: need >= 3 matching samples");
  const auto [xmin_it, xmax_it] = std::minmax_element(x.begin(), x.end());
  const double xmin = *xmin_it, xmax = *xmax_it;
  const double range = xmax - xmin;
  const auto [ymin_it, ymax_it] = std::minmax_element(y.begin(), y.end());
  const double ymin = *ymin_it, ymax = *ymax_it;
  const std::string_view id = model->id();

  ModelSpec spec;
  spec.model = model;
  auto& ps = spec.parameters;

  if (id == "single_exp" || id == "ramsey_env" || id == "echo_env" || id == "biexp") {
    const double b = tail_level(y);
    const double a = y[static_cast<std::size_t>(xmin_it - x.begin())] - b;
    double tau = range / 3.0;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (x[i] > xmin && (y[i] - b) <= a / std::numbers::e) {
        tau = std::max(x[i] - xmin, range / static_cast<double>(x.size()));
        break;
      }
    const double tau_lo = 1e-9 * range;
    const double amp_scale = std::max(std::abs(a), 1e-300);
    if (id == "biexp") {
      ps = {param("A1", 0.5 * a, -kInf, kInf, amp_scale), param("tau1", 0.3 * tau, tau_lo, kInf),
            param("A2", 0.5 * a, -kInf, kInf, amp_scale), param("tau2", 2.0 * tau, tau_lo, kInf),
            param("B", b, -kInf, kInf, amp_scale)};
    } else {
      const auto names = model->parameter_names();
      ps = {param("A", a, -kInf, kInf, amp_scale), param(names[1], tau, tau_lo, kInf), param("B", b, -kInf, kInf, amp_scale)};
    }
    return spec;
  }

  if (id == "rabi_sin" || id == "rabi_bloch") {
    // Periodogram-style scan over Omega with the linear parameters solved exactly.
    double dx = range;
    std::vector<double> xs(x.begin(), x.end());
    std::sort(xs.begin(), xs.end());
    for (std::size_t i = 1; i < xs.size(); ++i)
      if (xs[i] > xs[i - 1]) dx = std::min(dx, xs[i] - xs[i - 1]);
    const double w_lo = 0.5 * std::numbers::pi / range;
    const double w_hi = std::numbers::pi / dx;
    const bool sin_model = id == "rabi_sin";
    double best = kInf, best_w = w_lo, best_a = 0.0, best_b = 0.0;
    const int n_scan = 4000;
    for (int k = 0; k <= n_scan; ++k) {
      const double w = w_lo * std::pow(w_hi / w_lo, static_cast<double>(k) / n_scan);
      double a = 0.0, b = 0.0;
      const double ssr = sin_model ? linear_ls(x, y, [w](double t) { return std::sin(w * t); }, a, b)
                                   : linear_ls(x, y, [w](double t) { return std::pow(std::sin(0.5 * w * t), 2); }, a, b);
      if (ssr < best) {
        best = ssr;
        best_w = w;
        best_a = a;
        best_b = b;
      }
    }
    const double amp_scale = std::max(std::abs(ymax - ymin), 1e-300);
    if (sin_model) {
      ps = {param("A", best_a, -kInf, kInf, amp_scale), param("Omega", best_w, 0.0, kInf),
            param("B", best_b, -kInf, kInf, amp_scale)};
    } else {
      ps = {param("contrast", best_a, -kInf, kInf, amp_scale), param("Omega", best_w, 1e-12 * best_w, kInf),
            param("offset", best_b, -kInf, kInf, amp_scale)};
    }
    return spec;
  }

  if (id == "saturation") {
    double best = kInf, best_phi = std::max(xmax, 1e-300), best_r = ymax;
    const double lo = std::max(xmin > 0.0 ? xmin : xmax * 1e-6, 1e-300) * 0.01;
    const double hi = std::max(xmax, 1e-300) * 100.0;
    const int n_scan = 2000;
    for (int k = 0; k <= n_scan; ++k) {
      const double phi = lo * std::pow(hi / lo, static_cast<double>(k) / n_scan);
      double sxy = 0, sxx = 0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double v = x[i] / (x[i] + phi);
        sxy += v * y[i];
        sxx += v * v;
      }
      const double r = sxx > 0.0 ? sxy / sxx : 0.0;
      double ssr = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double res = y[i] - r * x[i] / (x[i] + phi);
        ssr += res * res;
      }
      if (ssr < best) {
        best = ssr;
        best_phi = phi;
        best_r = r;
      }
    }
    ps = {param("R_inf", best_r, 0.0, kInf), param("phi_sat", best_phi, 0.0, kInf)};
    return spec;
  }

  if (id == "lineshape_convolved") {
    const double center = x[static_cast<std::size_t>(ymax_it - y.begin())];
    double width = range / 10.0;
    try {
      width = measure_fwhm(x, y);
    } catch (const EstimationError&) {
    }
    ps = {param("A", ymax - ymin, 0.0, kInf, std::max(ymax - ymin, 1e-300)), param("center", center, -kInf, kInf, width),
          param("lorentz_fwhm", 0.1 * width, 0.0, kInf, width), param("laser_fwhm", width, 0.0, kInf, width),
          param("B", ymin, -kInf, kInf, std::max(ymax - ymin, 1e-300))};
    return spec;
  }
  throw DomainError("initial_spec: no starting rule for model '" + std::string(id) + "'");
}

double weighted_mean_lifetime(std::span<const double> a, std::span<const double> tau, LifetimeConvention convention) {
  if (a.size() != tau.size() || a.empty()) throw DomainError("weighted_mean_lifetime: mismatched components");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(a[i] > 0.0 && tau[i] > 0.0)) throw DomainError("weighted_mean_lifetime: amplitudes and lifetimes must be positive");
    if (convention == LifetimeConvention::intensity) {
      num += a[i] * tau[i] * tau[i];
      den += a[i] * tau[i];
    } else {
      num += a[i] * tau[i];
      den += a[i];
    }
  }
  return num / den;
}

double amplitude_ratio_for_mean_lifetime(double tau1, double tau2, double target, LifetimeConvention convention) {
  if (!(target > std::min(tau1, tau2) && target < std::max(tau1, tau2)))
    throw DomainError("amplitude_ratio_for_mean_lifetime: target must lie strictly between the lifetimes");
  if (convention == LifetimeConvention::intensity) return tau2 * (target - tau2) / (tau1 * (tau1 - target));
  return (tau2 - target) / (target - tau1);
}

}  // namespace ersim::fit
