#include "ersim/implant.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ersim/errors.hpp"

namespace ersim::implant {

namespace {

double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
  return s;
}

std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ' ' || c == '\t' || c == ',' || c == ';' || c == '\r') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

bool parse_number(const std::string& s, double& v) {
  char* end = nullptr;
  v = std::strtod(s.c_str(), &end);
  return end != s.c_str() && *end == '\0' && std::isfinite(v);
}

}  // namespace

void DepthProfile::validate() const {
  if (depth.size() < 2) throw FormatError("depth profile: need at least two rows");
  if (ion_density.size() != depth.size() || vacancy_density.size() != depth.size())
    throw FormatError("depth profile: column lengths differ");
  for (std::size_t i = 1; i < depth.size(); ++i)
    if (!(depth[i] > depth[i - 1])) throw FormatError("depth profile: depths must be strictly increasing");
  for (std::size_t i = 0; i < depth.size(); ++i)
    if (ion_density[i] < 0.0 || vacancy_density[i] < 0.0)
      throw FormatError("depth profile: densities must be non-negative");
}

double DepthProfile::mean_depth() const {
  std::vector<double> moment(depth.size());
  for (std::size_t i = 0; i < depth.size(); ++i) moment[i] = depth[i] * ion_density[i];
  return trapezoid(depth, moment) / trapezoid(depth, ion_density);
}

void StackSpec::validate() const {
  if (oxide_thickness < 0.0 || hnp_top_depth < 0.0 || hnp_height < 0.0)
    throw DomainError("stack: thicknesses must be >= 0");
}

double integrate_piecewise_linear(const std::vector<double>& x, const std::vector<double>& y, double a, double b) {
  if (x.size() < 2 || !(b > a)) return 0.0;
  a = std::max(a, x.front());
  b = std::min(b, x.back());
  if (!(b > a)) return 0.0;

  auto value_at = [&](std::size_t seg, double t) {
    const double w = (t - x[seg]) / (x[seg + 1] - x[seg]);
    return y[seg] + w * (y[seg + 1] - y[seg]);
  };

  // First segment whose right end lies beyond a.
  std::size_t seg = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), a) - x.begin());
  seg = seg == 0 ? 0 : seg - 1;
  seg = std::min(seg, x.size() - 2);

  double total = 0.0;
  for (; seg + 1 < x.size() && x[seg] < b; ++seg) {
    const double lo = std::max(a, x[seg]);
    const double hi = std::min(b, x[seg + 1]);
    if (hi <= lo) continue;
    total += 0.5 * (value_at(seg, lo) + value_at(seg, hi)) * (hi - lo);
  }
  return total;
}

DepthProfile load_profile(std::string_view text) {
  DepthProfile p;
  double depth_scale = 1.0;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    const auto fields = split_fields(line);
    double d = 0.0;
    if (fields.empty() || !parse_number(fields[0], d)) {
      if (line.find("Ang") != std::string_view::npos) depth_scale = 0.1;
      continue;
    }
    if (fields.size() < 2) throw FormatError("depth profile line " + std::to_string(line_no) + ": need >= 2 columns");
    double ion = 0.0, vac = 0.0;
    if (!parse_number(fields[1], ion))
      throw FormatError("depth profile line " + std::to_string(line_no) + ": unparsable ion density");
    if (fields.size() >= 3 && !parse_number(fields[2], vac))
      throw FormatError("depth profile line " + std::to_string(line_no) + ": unparsable vacancy density");
    p.depth.push_back(d);
    p.ion_density.push_back(ion);
    p.vacancy_density.push_back(vac);
  }
  for (double& d : p.depth) d *= depth_scale;
  // Vacancy tables are per unit of the file's depth axis.
  for (double& v : p.vacancy_density) v /= depth_scale;

  p.validate();
  const double area = trapezoid(p.depth, p.ion_density);
  if (!(area > 0.0)) throw FormatError("depth profile: ion density integrates to zero");
  for (double& v : p.ion_density) v /= area;
  return p;
}

DepthProfile load_profile_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open depth profile '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_profile(ss.str());
}

void save_profile(std::ostream& out, const DepthProfile& profile) {
  out << "depth_nm,ion_density,vacancy_density\n";
  char buf[96];
  for (std::size_t i = 0; i < profile.depth.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", profile.depth[i], profile.ion_density[i],
                  profile.vacancy_density[i]);
    out << buf;
  }
}

void save_profile_file(const std::string& path, const DepthProfile& profile) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write '" + path + "'");
  save_profile(out, profile);
}

DepthProfile gaussian_profile(double range, double straggle, double grid_step) {
  if (!(range > 0.0 && straggle > 0.0 && grid_step > 0.0))
    throw DomainError("gaussian_profile: range, straggle and step must be positive");
  const double half_span = 5.0 * straggle;
  const long m = std::max(1L, static_cast<long>(std::ceil(half_span / grid_step)));
  DepthProfile p;
  p.depth.reserve(static_cast<std::size_t>(2 * m + 1));
  for (long k = -m; k <= m; ++k) {
    const double z = static_cast<double>(k) * grid_step;
    p.depth.push_back(range + z);
    const double dens = std::abs(z) <= half_span ? std::exp(-0.5 * (z / straggle) * (z / straggle)) : 0.0;
    p.ion_density.push_back(dens);
  }
  p.vacancy_density.assign(p.depth.size(), 0.0);
  const double area = trapezoid(p.depth, p.ion_density);
  for (double& v : p.ion_density) v /= area;
  return p;
}

double retained_fraction(const DepthProfile& profile, const StackSpec& stack) {
  const double f = integrate_piecewise_linear(profile.depth, profile.ion_density, stack.window_begin(),
                                              stack.window_end());
  return std::clamp(f, 0.0, 1.0);
}

double vacancy_proxy(const DepthProfile& profile, double begin, double end) {
  return integrate_piecewise_linear(profile.depth, profile.vacancy_density, begin, end);
}

}  // namespace ersim::implant
