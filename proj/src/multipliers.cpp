#include "chd/multipliers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "chd/numerics.hpp"

namespace chd {

namespace {

double bracket(double x) { return std::sqrt(1 + x * x); }

double log_sum_exp(double a, double b) {
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// t_{j,eta} for eta >= 0, t_0 = 2 eta
double tcrit(int j, double eta) {
  if (j == 0) return 2 * eta;
  return eta / j - eta / (2.0 * j * (j + 1));
}

// Position of t inside [t_N, 2 eta]: interval index j (t in I_j) and whether
// t sits right of the critical time eta/j.
struct Where {
  int N = 0, j = 0;
  double t = 0, tau = 0;
  bool right = true;
  bool inside = false;  // t_N <= t < 2 eta
};

Where locate(double t, double eta) {
  Where w;
  w.N = critical_count(eta);
  w.t = t;
  if (w.N == 0 || t >= 2 * eta) return w;
  const double tN = tcrit(w.N, eta);
  w.inside = t >= tN;
  if (!w.inside) w.t = tN;
  // t_j decreases in j; eta / t is a close guess
  int j = std::clamp(int(eta / w.t), 1, w.N);
  while (j > 1 && w.t >= tcrit(j - 1, eta)) --j;
  while (j < w.N && w.t < tcrit(j, eta)) ++j;
  w.j = j;
  w.tau = w.t - eta / j;
  w.right = w.tau >= 0;
  return w;
}

// log w_NR(t_{j}) = (1 + 2C) sum_{i <= j} log(i^2/eta)
double log_w_end(int j, double eta, double c) {
  double s = 0;
  for (int i = 1; i <= j; ++i) s += std::log(double(i) * i / eta);
  return (1 + 2 * c) * s;
}

double log_w_nr(const Where& w, double eta, double c) {
  if (w.j == 0) return 0.0;
  const int j = w.j;
  const double base = log_w_end(j - 1, eta, c);
  const double peak = double(j) * j / eta;
  if (w.right) return c * std::log(peak * (1 + b_coef(j, eta) * w.tau)) + base;
  return -(1 + c) * std::log1p(a_coef(j, eta) * -w.tau) + c * std::log(peak) + base;
}

// log of the resonant factor k^2/eta (1 + b|tau|) or (1 + a|tau|)
double log_res_factor(const Where& w, double eta) {
  const int j = w.j;
  const double c = w.right ? b_coef(j, eta) : a_coef(j, eta);
  return std::log(double(j) * j / eta * (1 + c * std::abs(w.tau)));
}

void normalize(int& k, double& eta) {
  if (eta < 0) {
    eta = -eta;
    k = -k;
  }
}

}  // namespace

MultiplierParams MultiplierParams::resolved() const {
  MultiplierParams r = *this;
  if (!(s > 0.5 && s < 1)) fail("RangeError", "s must lie in (1/2, 1)");
  if (!(sigma > 5)) fail("RangeError", "sigma must exceed 5");
  if (!(mu > 0)) fail("RangeError", "mu must be positive");
  if (!(lambda_prime > 0 && lambda0 > lambda_prime)) fail("RangeError", "need lambda0 > lambda' > 0");
  if (!(c_kappa1 > 0)) fail("RangeError", "c_kappa1 must be positive");
  const double qmax = s / 8 + 7.0 / 16;
  if (r.q <= 0) r.q = std::clamp(0.5 + s / 8 + 7.0 / 16, 0.5 + 1e-12, qmax);
  if (!(r.q > 0.5 && r.q <= qmax + 1e-15)) fail("RangeError", "q must lie in (1/2, s/8 + 7/16]");
  if (r.delta_lambda <= 0) {
    const double l1 = 0.75 * lambda0 + 0.25 * lambda_prime, floor = 0.5 * (lambda0 + lambda_prime);
    r.delta_lambda = 0.9 * std::log((1 + l1) / (1 + floor)) / lambda_integral(INFINITY, r.q);
  }
  return r;
}

int critical_count(double eta) { return int(std::floor(std::sqrt(std::abs(eta)))); }

double b_coef(int k, double eta) {
  if (k == 1) return 1 - 1 / eta;
  return 2.0 * (k - 1) / k * (1 - double(k) * k / eta);
}

double a_coef(int k, double eta) { return 2.0 * (k + 1) / k * (1 - double(k) * k / eta); }

CriticalTimes critical_times(int k, double eta) {
  CriticalTimes c;
  const int K = std::abs(k);
  const double ae = std::abs(eta);
  c.t = tcrit(K, ae);
  c.empty = !(double(k) * eta >= 0 && K >= 1 && K <= critical_count(ae));
  if (!c.empty) {
    c.lo = tcrit(K, ae);
    c.hi = tcrit(K - 1, ae);
  }
  c.resonant_empty = c.empty || std::sqrt(ae) > c.lo;
  return c;
}

double w_nr(double t, double eta, const MultiplierParams& p) {
  eta = std::abs(eta);
  return std::exp(log_w_nr(locate(t, eta), eta, p.c_kappa1));
}

double w_res(double t, double eta, const MultiplierParams& p) {
  eta = std::abs(eta);
  Where w = locate(t, eta);
  if (w.j == 0) return 1.0;
  return std::exp(log_res_factor(w, eta) + log_w_nr(w, eta, p.c_kappa1));
}

double log_w(double t, int k, double eta, const MultiplierParams& p) {
  normalize(k, eta);
  Where w = locate(t, eta);
  double lw = log_w_nr(w, eta, p.c_kappa1);
  // resonant only inside I_{k,eta}; below t_N the frozen values agree
  if (w.inside && k >= 1 && w.j == k) lw += log_res_factor(w, eta);
  return lw;
}

double w_value(double t, int k, double eta, const MultiplierParams& p) { return std::exp(log_w(t, k, eta, p)); }

double w_rate(double t, int k, double eta, const MultiplierParams& p) {
  normalize(k, eta);
  Where w = locate(t, eta);
  if (!w.inside) return 0.0;
  const int j = w.j;
  const double c = p.c_kappa1;
  const bool res = k >= 1 && j == k;
  if (w.right) {
    const double b = b_coef(j, eta);
    return (res ? 1 + c : c) * b / (1 + b * w.tau);
  }
  const double a = a_coef(j, eta);
  return (res ? c : 1 + c) * a / (1 + a * -w.tau);
}

double junction_residual(int k, double eta, const MultiplierParams& p) {
  normalize(k, eta);
  const int N = critical_count(eta);
  const double c = p.c_kappa1;
  double worst = 0;
  auto rel = [&](double a, double b) { worst = std::max(worst, std::abs(a - b) / std::max(std::abs(b), 1e-300)); };
  // walk down from 2 eta evaluating each side's own formula at the shared ends
  double left_end = 1.0;  // w_NR(t_{j-1}) from interval j-1 (or the value 1 at 2 eta)
  for (int j = 1; j <= N; ++j) {
    const double peak = double(j) * j / eta, mid = eta / j, b = b_coef(j, eta), a = a_coef(j, eta);
    const double t_hi = tcrit(j - 1, eta), t_lo = tcrit(j, eta);
    const double closed = std::exp(log_w_end(j - 1, eta, c));
    rel(left_end, closed);
    const double top = std::pow(peak * (1 + b * (t_hi - mid)), c) * closed;
    rel(top, left_end);
    // the two sides at eta/j
    const double at_mid_r = std::pow(peak, c) * closed;
    const double at_mid_l = std::pow(1 + a * 0.0, -1 - c) * at_mid_r;
    rel(at_mid_l, at_mid_r);
    left_end = std::pow(1 + a * (mid - t_lo), -1 - c) * at_mid_r;
    // the resonant factor is 1 at both ends of I_j
    rel(peak * (1 + b * (t_hi - mid)), 1.0);
    rel(peak * (1 + a * (mid - t_lo)), 1.0);
  }
  if (N > 0) rel(left_end, std::exp(log_w_end(N, eta, c)));
  // the evaluators against the recursion at every end point
  for (int j = 0; j <= N; ++j) {
    const double t = tcrit(j, eta);
    rel(w_nr(t, eta, p), std::exp(log_w_end(j, eta, c)));
    rel(w_value(t, k, eta, p), w_nr(t, eta, p));
  }
  return worst;
}

double lambda_integral(double t, double q) {
  if (!(t > 1)) return 0.0;
  static Vec gx, gw;
  static const bool init = (num::gauss_legendre(10, gx, gw), true);
  (void)init;
  const double T = 16;
  auto f = [q](double x) { return std::pow(1 + x * x, -q); };
  auto quad = [&](double a, double b) {
    double s = 0;
    // four panels per octave
    double lo = a;
    while (lo < b) {
      const double hi = std::min(b, lo * std::pow(2.0, 0.25));
      for (size_t i = 0; i < gx.size(); ++i) s += 0.5 * (hi - lo) * gw[i] * f(lo + 0.5 * (hi - lo) * (gx[i] + 1));
      lo = hi;
    }
    return s;
  };
  // int_x^inf (1 + tau^2)^-q = sum_j binom(-q, j) x^{1 - 2q - 2j} / (2q + 2j - 1)
  auto tail = [q](double x) {
    double s = 0, c = 1;
    for (int j = 0; j < 40; ++j) {
      if (j > 0) c *= (-q - (j - 1)) / j;
      s += c * std::pow(x, 1 - 2 * q - 2 * j) / (2 * q + 2 * j - 1);
    }
    return s;
  };
  if (t <= T) return quad(1, t);
  const double head = quad(1, T) + tail(T);
  return std::isinf(t) ? head : head - tail(t);
}

double lambda_at(double t, const MultiplierParams& p) {
  const double l1 = 0.75 * p.lambda0 + 0.25 * p.lambda_prime;
  if (t <= 1) return l1;
  return (1 + l1) * std::exp(-p.delta_lambda * lambda_integral(t, p.q)) - 1;
}

AMultipliers a_multipliers(double t, int k, double eta, const MultiplierParams& p) {
  AMultipliers m;
  m.lambda = lambda_at(t, p);
  const double kv = std::sqrt(1.0 + double(k) * k + eta * eta), ev = bracket(eta);
  const double root = p.mu * std::sqrt(std::abs(eta));
  m.logJ = log_sum_exp(root - log_w(t, k, eta, p), p.mu * std::sqrt(std::abs(double(k))));
  m.logA = m.lambda * std::pow(kv, p.s) + p.sigma * std::log(kv) + m.logJ;
  {
    const double ae = std::abs(eta);
    Where w = locate(t, ae);
    m.logJR = root - log_w_nr(w, ae, p.c_kappa1) - (w.j == 0 ? 0.0 : log_res_factor(w, ae));
  }
  m.logAR = m.lambda * std::pow(ev, p.s) + p.sigma * std::log(ev) + m.logJR;
  m.B = std::sqrt(1 + (double(k) * k + std::abs(eta)) / (1 + t * t));
  m.logAstar = m.logA + std::log(m.B);
  m.J = std::exp(m.logJ);
  m.A = std::exp(m.logA);
  m.JR = std::exp(m.logJR);
  m.AR = std::exp(m.logAR);
  m.Astar = std::exp(m.logAstar);
  return m;
}

MMultipliers m_zero_mode(double t, double xi, const MultiplierParams& p) {
  MMultipliers m;
  const double base = t * (t * t + xi * xi) / (2 + xi * xi);
  const double A0 = a_multipliers(t, 0, xi, p).A;
  m.M00 = base * A0;
  m.M01 = base * (std::sqrt(w_rate(t, 0, xi, p)) + std::pow(bracket(xi), p.s / 2) / std::pow(bracket(t), p.s)) * A0;
  return m;
}

MMultipliers m_multipliers(double t, int k, double xi, const MultiplierParams& p) {
  if (k == 0) fail("ZeroModeForM3", "M3, M4, M5 are defined for k != 0");
  MMultipliers m = m_zero_mode(t, xi, p);
  const double kb = bracket(k);
  const double base = kb * t * (t + kb + std::abs(xi)) / (1.0 + double(k) * k + xi * xi);
  const AMultipliers a = a_multipliers(t, k, xi, p);
  const double kv = std::sqrt(1.0 + double(k) * k + xi * xi);
  const double log_tilde = a.lambda * std::pow(kv, p.s) + p.sigma * std::log(kv) + p.mu * std::sqrt(std::abs(xi)) -
                           log_w(t, k, xi, p);
  m.M3 = base * a.A;
  m.M4 = base * std::pow(std::hypot(double(k), xi), p.s / 2) / std::pow(bracket(t), p.s) * a.A;
  m.M5 = base * std::sqrt(w_rate(t, k, xi, p)) * std::exp(log_tilde);
  return m;
}

namespace {

struct AuditDraw {
  Vec nr, nr_dist, rate, pair, sq;
  double fd_error = 0;
};

AuditDraw draw(const MultiplierParams& p, int count, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0, 1);
  auto uni = [&](double a, double b) { return a + (b - a) * U(rng); };
  auto log_uni = [&](double a, double b) { return std::exp(uni(std::log(a), std::log(b))); };
  const double emax = 2000;
  AuditDraw d;
  for (int n = 0; n < count; ++n) {
    // w_NR(t, xi) / w_NR(t, eta), near and far pairs
    {
      const double eta = uni(0, emax);
      const double xi = U(rng) < 0.5 ? std::max(0.0, eta + uni(-40, 40)) : uni(0, emax);
      const double t = log_uni(1, 2 * emax);
      d.nr.push_back(w_nr(t, xi, p) / w_nr(t, eta, p));
      d.nr_dist.push_back(std::abs(eta - xi));
    }
    // rates on resonant intervals past 2 sqrt(eta), by finite differences
    {
      const double eta = uni(16, emax);
      int kmax = 1;
      while (kmax + 1 <= critical_count(eta) && tcrit(kmax + 1, eta) > 2 * std::sqrt(eta)) ++kmax;
      const int k = 1 + int(U(rng) * kmax) % kmax;
      const double lo = std::max(tcrit(k, eta), 2 * std::sqrt(eta)), hi = tcrit(k - 1, eta);
      const double t = uni(lo, hi), tau = t - eta / k;
      const double h = 1e-6 * t;
      if (std::abs(tau) > 4 * h && t - 4 * h > lo && t + 4 * h < hi) {
        for (int kk : {0, k}) {
          const double fd = (std::log(w_value(t + h, kk, eta, p)) - std::log(w_value(t - h, kk, eta, p))) / (2 * h);
          const double exact = w_rate(t, kk, eta, p);
          d.fd_error = std::max(d.fd_error, std::abs(fd - exact) / exact);
          d.rate.push_back(fd * (1 + std::abs(tau)));
        }
      }
    }
    // rate ratio for max(2 sqrt xi, 2 sqrt eta) < t < 2 min(xi, eta)
    {
      const double eta = uni(16, emax);
      const double xi = std::max(16.0, eta + uni(-20, 20));
      const double lo = 2 * std::sqrt(std::max(eta, xi)), hi = 2 * std::min(eta, xi);
      const double t = log_uni(lo, hi);
      const int k = int(U(rng) * 13), l = int(U(rng) * 13);
      const double r = w_rate(t, k, eta, p) / w_rate(t, l, xi, p);
      d.pair.push_back(r / bracket(eta - xi));
    }
    // square-root rates for eta / xi in [1/2, 2]
    {
      const double eta = uni(1, emax), xi = eta * log_uni(0.5, 2.0);
      const double t = log_uni(1, 2 * emax);
      const int k = int(U(rng) * 13), l = int(U(rng) * 13);
      const double lhs = std::sqrt(w_rate(t, l, xi, p));
      const double rhs =
          (std::sqrt(w_rate(t, k, eta, p)) + std::pow(eta, p.s / 2) / std::pow(bracket(t), p.s)) * bracket(eta - xi);
      d.sq.push_back(lhs / rhs);
    }
  }
  return d;
}

}  // namespace

RatioAudit ratio_audit(const MultiplierParams& params, int sample_count, uint64_t seed) {
  const MultiplierParams p = params.resolved();
  RatioAudit a;
  a.samples = sample_count;
  a.seed = seed;
  if (sample_count <= 0) return a;
  // the pair ratio peaks on a thin set near t = eta, so the fit draw is larger
  AuditDraw fit = draw(p, 4 * sample_count, seed);
  // w_NR ratio: exponent from pairs at distance >= 1, then the prefactor
  for (size_t i = 0; i < fit.nr.size(); ++i)
    if (fit.nr_dist[i] >= 1) a.mu_fit = std::max(a.mu_fit, std::log(fit.nr[i]) / std::sqrt(fit.nr_dist[i]));
  a.c_nr_ratio = 1;
  for (size_t i = 0; i < fit.nr.size(); ++i)
    a.c_nr_ratio = std::max(a.c_nr_ratio, fit.nr[i] * std::exp(-a.mu_fit * std::sqrt(fit.nr_dist[i])));
  a.c_rate_lo = INFINITY;
  for (double v : fit.rate) {
    a.c_rate_lo = std::min(a.c_rate_lo, v);
    a.c_rate_hi = std::max(a.c_rate_hi, v);
  }
  for (double v : fit.pair) a.c_rate_pair = std::max(a.c_rate_pair, v);
  for (double v : fit.sq) a.c_rate_sqrt = std::max(a.c_rate_sqrt, v);

  // 2x on the prefactors; the exponent gets 5% since e^{mu sqrt d} amplifies
  // any shortfall of the fitted mu at large distances
  AuditDraw check = draw(p, sample_count, seed + 1);
  a.max_fd_error = std::max(fit.fd_error, check.fd_error);
  for (size_t i = 0; i < check.nr.size(); ++i)
    if (check.nr[i] > 2 * a.c_nr_ratio * std::exp(1.05 * a.mu_fit * std::sqrt(check.nr_dist[i]))) ++a.violations_nr;
  for (double v : check.rate)
    if (v > 2 * a.c_rate_hi || v < a.c_rate_lo / 2) ++a.violations_rate;
  for (double v : check.pair)
    if (v > 2 * a.c_rate_pair) ++a.violations_pair;
  for (double v : check.sq)
    if (v > 2 * a.c_rate_sqrt) ++a.violations_sqrt;
  return a;
}

double gevrey_norm(const Mat<cplx>& f, const std::vector<int>& ks, double eta0, double d_eta, double s,
                   double lambda, double sigma) {
  if (int(ks.size()) != f.rows) fail("ShapeMismatch", "one k per spectrum row");
  double acc = -INFINITY;
  for (int r = 0; r < f.rows; ++r) {
    const double k = ks[r];
    for (int j = 0; j < f.cols; ++j) {
      const double a = std::abs(f(r, j));
      if (a == 0) continue;
      const double eta = eta0 + j * d_eta;
      const double w = f.cols == 1 ? d_eta : (j == 0 || j == f.cols - 1 ? 0.5 : 1.0) * d_eta;
      const double term = 2 * std::log(a) + 2 * lambda * std::pow(std::hypot(k, eta), s) +
                          sigma * std::log(1 + k * k + eta * eta) + std::log(w);
      acc = std::isinf(acc) ? term : log_sum_exp(acc, term);
    }
  }
  return std::isinf(acc) ? 0.0 : std::exp(0.5 * acc);
}

void write_multiplier_csv(const std::string& path, int k, const Vec& ts, const Vec& etas, const MultiplierParams& p) {
  std::ofstream out(path);
  if (!out) fail("IOError", "cannot open " + path);
  out << "t,eta,w,J,A,B,Astar\n";
  char buf[256];
  for (double t : ts)
    for (double eta : etas) {
      const AMultipliers m = a_multipliers(t, k, eta, p);
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", t, eta, w_value(t, k, eta, p), m.J,
                    m.A, m.B, m.Astar);
      out << buf;
    }
}

}  // namespace chd
