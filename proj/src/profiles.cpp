#include "chd/profiles.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>

#include "chd/numerics.hpp"

namespace chd {

double smooth_step(double x) {
  if (x <= 0) return 0.0;
  if (x >= 1) return 1.0;
  const double a = std::exp(-1.0 / x), b = std::exp(-1.0 / (1.0 - x));
  return a / (a + b);
}

double plateau(double y, double a, double plo, double phi, double b) {
  if (y <= a || y >= b) return 0.0;
  if (y >= plo && y <= phi) return 1.0;
  if (y < plo) return smooth_step((y - a) / (plo - a));
  return smooth_step((b - y) / (b - phi));
}

Vec gevrey_cutoff(double a, double b, double plo, double phi, int n_y) {
  if (!(a < plo && plo < phi && phi < b)) fail("InvalidInterval", "need a < plateau_lo < plateau_hi < b");
  if (n_y < 2) fail("GridTooCoarse", "cut-off needs at least two points");
  Vec c(n_y);
  for (int i = 0; i < n_y; ++i) c[i] = plateau(double(i) / (n_y - 1), a, plo, phi, b);
  return c;
}

std::array<double, 4> Bump::eval(double y) const {
  const double w = 0.5 * (b - a), r = (y - 0.5 * (a + b)) / w;
  if (std::abs(r) >= 1.0) return {0, 0, 0, 0};
  const double s = 1.0 - r * r;
  const double B = std::exp(1.0 - 1.0 / s);
  // derivatives of the exponent 1 - 1/s in r
  const double l1 = -2.0 * r / (s * s);
  const double l2 = -2.0 / (s * s) - 8.0 * r * r / (s * s * s);
  const double l3 = -24.0 * r / (s * s * s) - 48.0 * r * r * r / (s * s * s * s);
  return {B, B * l1 / w, B * (l1 * l1 + l2) / (w * w), B * (l1 * l1 * l1 + 3 * l1 * l2 + l3) / (w * w * w)};
}

double Bump::integral(double y) const {
  static Vec gx, gw;
  static const bool init = (num::gauss_legendre(20, gx, gw), true);
  (void)init;
  const double hi = std::min(y, b);
  if (hi <= a) return 0.0;
  const int panels = 16;
  const double len = (hi - a) / panels;
  double s = 0;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * len;
    for (size_t q = 0; q < gx.size(); ++q) s += 0.5 * len * gw[q] * eval(lo + 0.5 * len * (gx[q] + 1))[0];
  }
  return s;
}

std::array<Vec, 12> derived_coefficients(const ChannelProfile& p) {
  const int n = p.n;
  std::array<Vec, 12> c;
  Vec dchi = num::d1(p.chi2, p.h);
  Vec d2chi = num::d2(p.chi2, p.h);
  const Vec& dd = p.d2theta;
  for (int j = 1; j <= 11; ++j) c[j].assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    const double th = p.theta[i];
    // (u'/theta)' from the profile derivatives, so it agrees with the Rayleigh coefficients
    c[1][i] = (p.d2u[i] * th - p.du[i] * p.dtheta[i]) / (th * th);
    c[2][i] = p.dtheta[i] / th;
    c[3][i] = dd[i] / (th * th) - p.dtheta[i] * p.dtheta[i] / (th * th * th);
    c[4][i] = 1.0 / th;
    c[5][i] = c[2][i] * c[4][i];
    c[6][i] = -2.0 * p.chi2[i] * p.du[i] - 2.0 * p.u[i] * dchi[i];
    c[7][i] = -p.du[i] * d2chi[i];
    c[8][i] = d2chi[i] * p.u[i];
    c[9][i] = p.du[i];
    c[10][i] = p.dtheta[i];
    c[11][i] = th;
  }
  return c;
}

namespace {

void fill_bump_family(ChannelProfile& p) {
  const auto& s = p.spec;
  Bump bump{4 * p.kappa0, 1 - 4 * p.kappa0};
  for (int i = 0; i < p.n; ++i) {
    const double y = p.y[i];
    auto B = bump.eval(y);
    // closed forms; u itself needs the running integral of the bump
    p.u[i] = y + s.eps_u * bump.integral(y);
    p.du[i] = 1 + s.eps_u * B[0];
    p.d2u[i] = s.eps_u * B[1];
    p.d3u[i] = s.eps_u * B[2];
    p.theta[i] = 1 + s.eps_theta * B[0];
    p.dtheta[i] = s.eps_theta * B[1];
    p.d2theta[i] = s.eps_theta * B[2];
  }
}

}  // namespace

ChannelProfile build_profile(const ProfileSpec& spec) {
  if (spec.n_y < 33 || spec.n_y % 2 == 0)
    fail("GridTooCoarse", "n_y must be odd and >= 33, got " + std::to_string(spec.n_y));
  if (!(spec.kappa0 > 0 && spec.kappa0 <= 0.1)) fail("RangeError", "kappa0 must lie in (0, 0.1]");
  if (!(spec.c0 > 0)) fail("RangeError", "c0 must be positive");
  ChannelProfile p;
  p.spec = spec;
  p.n = spec.n_y;
  p.h = 1.0 / (p.n - 1);
  p.kappa0 = spec.kappa0;
  p.c0 = spec.c0;
  p.y.resize(p.n);
  for (int i = 0; i < p.n; ++i) p.y[i] = i * p.h;
  for (Vec* v : {&p.u, &p.du, &p.d2u, &p.d3u, &p.theta, &p.dtheta, &p.d2theta}) v->assign(p.n, 0.0);

  const std::string& f = spec.family;
  if (f == "couette_constant") {
    p.u = p.y;
    p.du.assign(p.n, 1.0);
    p.theta.assign(p.n, 1.0);
  } else if (f == "couette_bump" || f == "density_bump") {
    fill_bump_family(p);
  } else if (f == "custom") {
    if (int(spec.u.size()) != p.n || int(spec.theta.size()) != p.n)
      fail("ShapeMismatch", "custom profile arrays must have n_y samples");
    p.u = spec.u;
    p.theta = spec.theta;
    p.du = num::d1(p.u, p.h);
    p.d2u = num::d2(p.u, p.h);
    p.d3u = num::d1(p.d2u, p.h);
    p.dtheta = num::d1(p.theta, p.h);
    p.d2theta = num::d2(p.theta, p.h);
  } else {
    fail("UnknownFamily", "unknown profile family '" + f + "'");
  }

  ValidityReport& r = p.report;
  r.min_du = *std::min_element(p.du.begin(), p.du.end());
  r.min_theta = *std::min_element(p.theta.begin(), p.theta.end());
  double scale = 1.0;
  for (int i = 0; i < p.n; ++i) scale = std::max({scale, std::abs(p.u[i]), std::abs(p.theta[i])});
  // sampled profiles carry rounding amplified by h^-2 in the second derivative
  r.tol = 1e-12 * scale / (p.h * p.h);
  double lo = 4 * p.kappa0, hi = 1 - 4 * p.kappa0;
  // stencil derivatives of sampled data spill three points past the true support
  if (f == "custom") {
    lo -= 3 * p.h;
    hi += 3 * p.h;
  }
  for (int i = 0; i < p.n; ++i) {
    if (p.y[i] >= lo - 1e-14 && p.y[i] <= hi + 1e-14) continue;
    r.outside_d2u = std::max(r.outside_d2u, std::abs(p.d2u[i]));
    r.outside_dtheta = std::max(r.outside_dtheta, std::abs(p.dtheta[i]));
  }
  if (r.min_du < p.c0) fail("MonotonicityViolation", "min u' = " + std::to_string(r.min_du) + " < c0");
  if (r.min_theta < p.c0) fail("PositivityViolation", "min theta = " + std::to_string(r.min_theta) + " < c0");
  if (r.outside_d2u > r.tol || r.outside_dtheta > r.tol)
    fail("SupportViolation", "u'' or theta' nonzero outside [4 kappa0, 1 - 4 kappa0]");
  r.ok = true;

  const double k0 = p.kappa0;
  p.chi1 = gevrey_cutoff(k0, 1 - k0, 2 * k0, 1 - 2 * k0, p.n);
  p.chi2 = gevrey_cutoff(k0 / 2, 1 - k0 / 2, k0, 1 - k0, p.n);
  num::Interp ip{p.h, p.n};
  auto U = [&](double y) { return ip.eval(p.u, y); };
  p.v_grid.resize(p.n);
  p.upsilon1.resize(p.n);
  p.upsilon2.resize(p.n);
  for (int i = 0; i < p.n; ++i) {
    const double v = p.u0() + (p.u1() - p.u0()) * i * p.h;
    p.v_grid[i] = v;
    p.upsilon1[i] = plateau(v, U(k0), U(2 * k0), U(1 - 2 * k0), U(1 - k0));
    p.upsilon2[i] = plateau(v, U(k0 / 2), U(k0), U(1 - k0), U(1 - k0 / 2));
  }
  p.coeffs = derived_coefficients(p);
  return p;
}

ChannelProfile couette_constant(int n_y) {
  ProfileSpec s;
  s.family = "couette_constant";
  s.n_y = n_y;
  return build_profile(s);
}

std::string profile_to_json(const ProfileSpec& s) {
  nlohmann::json j;
  j["family"] = s.family;
  j["n_y"] = s.n_y;
  j["kappa0"] = s.kappa0;
  j["c0"] = s.c0;
  j["eps_u"] = s.eps_u;
  j["eps_theta"] = s.eps_theta;
  if (!s.u.empty()) j["u"] = s.u;
  if (!s.theta.empty()) j["theta"] = s.theta;
  return j.dump(2);
}

ProfileSpec profile_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    fail("ParseError", e.what());
  }
  ProfileSpec s;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    if (k == "family") s.family = it->get<std::string>();
    else if (k == "n_y") s.n_y = it->get<int>();
    else if (k == "kappa0") s.kappa0 = it->get<double>();
    else if (k == "c0") s.c0 = it->get<double>();
    else if (k == "eps_u") s.eps_u = it->get<double>();
    else if (k == "eps_theta") s.eps_theta = it->get<double>();
    else if (k == "u") s.u = it->get<Vec>();
    else if (k == "theta") s.theta = it->get<Vec>();
    else fail("UnknownKey", "profile key '" + k + "'");
  }
  return s;
}

}  // namespace chd
