#pragma once

#include <optional>
#include <string>

#include "chd/profiles.hpp"

namespace chd {

// Local Taylor data of phi1 about the singular point:
// phi1 = 1 + c2 x^2 + c3 x^3 + c4 x^4, and u = u(y') + u' x (1 + a x + b x^2).
struct SeriesStart {
  double c2 = 0, c3 = 0, c4 = 0, a = 0, b = 0;
};

struct HomColumn {
  Vec phi1, dphi1;
  SeriesStart series;
  double residual = 0;  // max relative ODE residual away from y'
};

// Row j holds phi1(., y_j) and its y-derivative.
struct HomSolutionTable {
  int k = 0, n = 0;
  Vec yprime;
  RMat phi1, dphi1;
  std::vector<SeriesStart> series;
  double max_residual = 0;
  double phi(int j, int i) const { return phi1(j, i); }
};

HomColumn phi1_solve(const ChannelProfile& p, int k, int j);
HomSolutionTable hom_table(const ChannelProfile& p, int k);

// Pointwise audit of a table, d = |y - y'|:
//   phi1 >= 1 and (y - y') d_y phi1 >= 0, counted exactly;
//   c_growth: least C with C^-1 e^{|k| d / C} <= phi1 <= C e^{C |k| d};
//   c_log_deriv: least C with |d_y phi1| / phi1 within [1/C, C] |k| min(|k| d, 1);
//   c_excess_upper: least C with phi1 - 1 <= C min(1, k^2 d^2) phi1;
//   c_excess: the same two-sided, (phi1 - 1) / phi1 within [1/C, C] min(1, k^2 d^2).
// The one-sided constant only sees |k| d <= |k|, so it grows with k until |k| ~ 3.
struct HomBounds {
  int k = 0;
  long monotone_violations = 0;
  double min_phi1 = 0;
  double c_growth = 0, c_log_deriv = 0, c_excess = 0, c_excess_upper = 0;
};
HomBounds hom_bounds(const ChannelProfile& p, const HomSolutionTable& t);

// Columns y, then phi1 for each y' (one file per k).
void write_hom_table_csv(const std::string& path, const HomSolutionTable& t);

struct EpsColumn {
  CVec phi1;         // on the y grid
  cplx wronskian{};  // integral of theta / phi_eps^2 over [0, 1]
  double min_abs = 0;
};
EpsColumn phi1_eps_solve(const ChannelProfile& p, int k, int j, double eps);

// Principal value of int g(v)/(c - v) dv over a uniform grid [a, b].
double hilbert_pv(const Vec& g, double a, double b, double c);

struct SpectralFunctions {
  int k = 0;
  Vec yprime, rho, J1, J2, indicator;
  // reusable pieces: theta/u', its v-derivative, integrand of the regular part
  Vec g, L;
};

// theta / U^2 (phi1^-2 - 1) over z for singular point j, with the series patch.
Vec regular_integrand(const ChannelProfile& p, const HomSolutionTable& t, int j);

SpectralFunctions j_functions(const ChannelProfile& p, const HomSolutionTable& t);
// columns yprime, rho, J1, J2, indicator
void write_spectral_csv(const std::string& path, const SpectralFunctions& sf);

struct KStability {
  int k = 0;
  double indicator_floor = 0;       // min of (J1^2 + pi^2 J2^2) / (1 + k^2 rho^2)
  double wronskian_floor = 0;       // min of |rho W(eps)| / sqrt(1 + k^2 rho^2)
  double limit_mismatch = 0;        // max |rho W(eps) - (J1 + i pi J2)| over the scan
  std::vector<double> embedded_candidates;  // y' with J1, J2 both small
  bool stable = false;
};

struct StabilityReport {
  std::vector<KStability> per_k;
  std::string verdict;  // "stable" or "suspect"
  double floor = 0;
};

StabilityReport spectral_assumption_check(const ChannelProfile& p, int k_max, double eps0 = 1e-3,
                                          int yprime_stride = 1);

// Pi1 through the regularized double integral, all interior y'.
CVec pi1_all(const ChannelProfile& p, const HomSolutionTable& t, const CVec& omega);
CVec pi2_all(const ChannelProfile& p, const CVec& omega);
std::pair<cplx, cplx> pi_operators(const ChannelProfile& p, const HomSolutionTable& t, const CVec& omega,
                                   int j);

// Pieces of e(a, b) = (u(a)-u(b)) kappa(a, b) with
// kappa = -g(b)/(u(a)-u(b)) + phi1 L(b) log|u(a)-u(b)| + R(a, b),
// R = R0 for a < b, R1 for a > b.  Stored with b as the row: R0(b, a).
// R0(b, b), R1(b, b) hold the one-sided diagonal limits.
struct EKernel {
  int k = 0, n = 0;
  const HomSolutionTable* table = nullptr;
  Vec u, g, L;
  RMat R0, R1;
  double phi1(int a, int b) const { return table->phi1(b, a); }
  // R on the side of a relative to b (a == b uses the right-hand limit)
  double R(int a, int b) const { return a < b ? R0(b, a) : R1(b, a); }
  double kappa(int a, int b) const;  // a != b
  double e(int a, int b) const;
};

EKernel build_e_kernel(const ChannelProfile& p, const HomSolutionTable& t, const SpectralFunctions& sf);

struct ResolventLimit {
  int k = 0, j = 0, sign = 1;
  CVec psi;
  cplx pi1_val{}, pi2_val{};
};

ResolventLimit resolvent_limit(const ChannelProfile& p, const HomSolutionTable& t, const SpectralFunctions& sf,
                               const EKernel& ek, const CVec& omega, int j, int sign,
                               double near_threshold = 1e-8);

// Residual of (u - u(y'))(d(theta^-1 d psi) - k^2 theta^-1 psi) - (u'/theta)' psi + omega
// at points further than `gap` from y'.
double resolvent_residual(const ChannelProfile& p, int k, const CVec& omega, const ResolventLimit& r, double gap);

// Time-independent part of the representation formula; psi(t) = -E diag(phase(t)) coef.
struct Representation {
  int k = 0;
  RMat weights;  // quadrature over y' of e(y_i, y')
  CVec coef;     // [J1 Pi2 - J2 Pi1] / (J1^2 + pi^2 J2^2) rho u'
  Vec u;
  CVec psi(double t) const;
};

Representation build_representation(const ChannelProfile& p, const HomSolutionTable& t,
                                    const SpectralFunctions& sf, const EKernel& ek, const CVec& omega0);
CVec representation_psi(const ChannelProfile& p, int k, const CVec& omega0, double t);

}  // namespace chd
