#pragma once

#include <array>
#include <string>

#include "chd/common.hpp"

namespace chd {

struct ProfileSpec {
  std::string family = "couette_constant";  // couette_constant | couette_bump | density_bump | custom
  int n_y = 257;
  double kappa0 = 0.1;
  double c0 = 0.5;
  double eps_u = 0.0;
  double eps_theta = 0.0;
  // custom family only: samples on the uniform grid
  Vec u, theta;
};

struct ValidityReport {
  double min_du = 0, min_theta = 0;
  double outside_d2u = 0, outside_dtheta = 0;  // max magnitude outside the band
  double tol = 0;
  bool ok = false;
};

struct ChannelProfile {
  ProfileSpec spec;
  int n = 0;
  double h = 0;
  double kappa0 = 0.1, c0 = 0.5;
  Vec y;
  Vec u, du, d2u, d3u;
  Vec theta, dtheta, d2theta;
  // coeffs[j] holds the j-th derived coefficient, j = 1..11 (index 0 unused)
  std::array<Vec, 12> coeffs;
  Vec chi1, chi2;
  Vec v_grid, upsilon1, upsilon2;  // cut-offs sampled in v = u(y)
  ValidityReport report;

  // (u'/theta)', the coefficient of the nonlocal term
  const Vec& shear_coef() const { return coeffs[1]; }
  double u0() const { return u.front(); }
  double u1() const { return u.back(); }
};

// Smooth plateau: 1 on [plo, phi], 0 outside (a, b), exp(-1/x) transitions.
double smooth_step(double x);
double plateau(double y, double a, double plo, double phi, double b);
Vec gevrey_cutoff(double a, double b, double plo, double phi, int n_y);

ChannelProfile build_profile(const ProfileSpec& spec);
ChannelProfile couette_constant(int n_y);
std::array<Vec, 12> derived_coefficients(const ChannelProfile& p);

// Normalized bump exp(1 - 1/(1-r^2)) on (a, b) and its first three derivatives.
struct Bump {
  double a, b;
  std::array<double, 4> eval(double y) const;
  // integral from a to y, via Gauss-Legendre (exact to rounding for y inside)
  double integral(double y) const;
};

// Structured-text (JSON) round trip for profile specs.
std::string profile_to_json(const ProfileSpec& s);
ProfileSpec profile_from_json(const std::string& text);

}  // namespace chd
