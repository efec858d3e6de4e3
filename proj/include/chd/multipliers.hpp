#pragma once

#include <cstdint>
#include <string>

#include "chd/common.hpp"

namespace chd {

struct MultiplierParams {
  double s = 0.6, sigma = 6, mu = 1;
  double lambda0 = 0.2, lambda_prime = 0.1;
  double delta_lambda = 0;  // <= 0: largest rate keeping lambda above its floor, times 0.9
  double q = 0;             // <= 0: 1/2 + s/8 + 7/16 clamped into (1/2, s/8 + 7/16]
  double c_kappa1 = 1;      // exponent of the non-resonant growth
  // Fills the automatic entries and checks ranges (RangeError).
  MultiplierParams resolved() const;
};

// E(sqrt|eta|): the number of critical intervals below 2|eta|.
int critical_count(double eta);

struct CriticalTimes {
  double t = 0;          // t_{k,eta}
  double lo = 0, hi = 0; // I_{k,eta} = [t_{|k|}, t_{|k|-1}] when not empty
  bool empty = true;     // I_{k,eta} empty
  bool resonant_empty = true;  // the restricted resonant interval is empty
};
// t_{k,eta} is also filled for |k| > E(sqrt|eta|) from the same formula.
CriticalTimes critical_times(int k, double eta);

// w_k(t, eta) and friends.  eta < 0 maps to (-k, -eta).
double w_nr(double t, double eta, const MultiplierParams& p);
double w_value(double t, int k, double eta, const MultiplierParams& p);
// log w_k; w itself underflows once sqrt|eta| is in the hundreds
double log_w(double t, int k, double eta, const MultiplierParams& p);
// w_R on [t_{E(sqrt eta)}, 2 eta], frozen below and 1 above.
double w_res(double t, double eta, const MultiplierParams& p);
// d_t w / w; zero outside [t_{E(sqrt eta)}, 2 eta].  k = 0 gives the
// non-resonant rate.
double w_rate(double t, int k, double eta, const MultiplierParams& p);

// Largest relative jump of w_NR, w_R and w_k across the interval ends
// t_{j,eta} and eta/j, and of the junction identities fixing a and b.
double junction_residual(int k, double eta, const MultiplierParams& p);
// b_{k,eta}, a_{k,eta}
double b_coef(int k, double eta);
double a_coef(int k, double eta);

// lambda(t): 3/4 lambda0 + 1/4 lambda' up to t = 1, then
// d lambda/dt = -delta (1 + lambda) / <t>^{2q}.
double lambda_at(double t, const MultiplierParams& p);
// int_1^t <tau>^{-2q} d tau, t = inf allowed
double lambda_integral(double t, double q);

struct AMultipliers {
  double J = 0, A = 0, JR = 0, AR = 0, B = 0, Astar = 0, lambda = 0;
  // natural logs, finite even when the values overflow
  double logJ = 0, logA = 0, logJR = 0, logAR = 0, logAstar = 0;
};
AMultipliers a_multipliers(double t, int k, double eta, const MultiplierParams& p);

// M00, M01 act on the x-mean (they only see xi); M3..M5 need k != 0 and
// raise ZeroModeForM3 otherwise.  M5 uses A~ = e^{lambda <k,xi>^s} <k,xi>^sigma e^{mu |xi|^1/2} / w_k.
struct MMultipliers {
  double M00 = 0, M01 = 0, M3 = 0, M4 = 0, M5 = 0;
};
MMultipliers m_multipliers(double t, int k, double xi, const MultiplierParams& p);
MMultipliers m_zero_mode(double t, double xi, const MultiplierParams& p);

struct RatioAudit {
  int samples = 0;
  uint64_t seed = 0;
  // constants fitted on one draw, checked on an independent draw with a 2x margin
  // (5% on the fitted exponent)
  double c_nr_ratio = 0, mu_fit = 0;  // w_NR(t,xi)/w_NR(t,eta) <= C exp(mu_fit |eta-xi|^1/2)
  double c_rate_lo = 0, c_rate_hi = 0;  // 1/C <= (d_t w/w)(1+|tau|) <= C on resonant intervals
  double c_rate_pair = 0;               // rate ratio <= C <eta - xi>
  double c_rate_sqrt = 0;               // sqrt-rate bound with alpha = 2
  double max_fd_error = 0;              // analytic vs finite-difference d_t w/w
  int violations_nr = 0, violations_rate = 0, violations_pair = 0, violations_sqrt = 0;
  int violations() const { return violations_nr + violations_rate + violations_pair + violations_sqrt; }
};
RatioAudit ratio_audit(const MultiplierParams& p, int sample_count, uint64_t seed);

// (sum_k int |f_k(eta)|^2 e^{2 lambda |k,eta|^s} <k,eta>^{2 sigma} d eta)^{1/2},
// rows of f indexed by ks, columns by the uniform grid eta0 + j d_eta (trapezoid).
double gevrey_norm(const Mat<cplx>& f, const std::vector<int>& ks, double eta0, double d_eta, double s,
                   double lambda, double sigma);

// Columns t, eta, w, J, A, B, Astar over the product grid, fixed k.
void write_multiplier_csv(const std::string& path, int k, const Vec& ts, const Vec& etas, const MultiplierParams& p);

}  // namespace chd
