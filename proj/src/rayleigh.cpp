#include "chd/rayleigh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "chd/numerics.hpp"
#include "chd/singular.hpp"

namespace chd {

namespace {

// Profile data at cell midpoints, for the RK4 half steps.
struct Mid {
  Vec u, du, th, dth;
  explicit Mid(const ChannelProfile& p)
      : u(num::midpoints(p.u)), du(num::midpoints(p.du)), th(num::midpoints(p.theta)),
        dth(num::midpoints(p.dtheta)) {}
};

SeriesStart series_at(const ChannelProfile& p, int k, int j) {
  SeriesStart s;
  const double k2 = double(k) * k;
  s.a = p.d2u[j] / (2 * p.du[j]);
  s.b = p.d3u[j] / (6 * p.du[j]);
  const double t0 = p.dtheta[j] / p.theta[j];
  const double t1 = p.d2theta[j] / p.theta[j] - t0 * t0;
  const double p0 = 2 * s.a - t0;
  const double p1 = 2 * (2 * s.b - s.a * s.a) - t1;
  s.c2 = k2 / 6;
  s.c3 = -p0 * s.c2 / 6;
  s.c4 = (k2 * s.c2 - 3 * p0 * s.c3 - 2 * p1 * s.c2) / 20;
  return s;
}

HomColumn solve_column(const ChannelProfile& p, const Mid& mid, int k, int j) {
  if (k == 0) fail("InvalidWavenumber", "k must be nonzero");
  const int n = p.n;
  const double h = p.h, k2 = double(k) * k, uj = p.u[j];
  HomColumn c;
  c.phi1.assign(n, 0.0);
  c.dphi1.assign(n, 0.0);
  c.series = series_at(p, k, j);
  const SeriesStart& s = c.series;
  c.phi1[j] = 1.0;
  for (int off : {-2, -1, 1, 2}) {
    const int m = j + off;
    if (m < 0 || m >= n) continue;
    const double x = off * h;
    c.phi1[m] = 1 + x * x * (s.c2 + x * (s.c3 + x * s.c4));
    c.dphi1[m] = x * (2 * s.c2 + x * (3 * s.c3 + x * 4 * s.c4));
  }
  auto pn = [&](int m) { return 2 * p.du[m] / (p.u[m] - uj) - p.dtheta[m] / p.theta[m]; };
  auto pm = [&](int m) { return 2 * mid.du[m] / (mid.u[m] - uj) - mid.dth[m] / mid.th[m]; };
  auto march = [&](int from, int dir) {
    for (int m = from; m + dir >= 0 && m + dir < n; m += dir) {
      const double hs = dir * h;
      const double pa = pn(m), pb = pm(dir > 0 ? m : m - 1), pc = pn(m + dir);
      const double f0 = c.phi1[m], g0 = c.dphi1[m];
      // phi'' = -p phi' + k^2 phi
      const double k1f = g0, k1g = -pa * g0 + k2 * f0;
      const double k2f = g0 + 0.5 * hs * k1g, k2g = -pb * k2f + k2 * (f0 + 0.5 * hs * k1f);
      const double k3f = g0 + 0.5 * hs * k2g, k3g = -pb * k3f + k2 * (f0 + 0.5 * hs * k2f);
      const double k4f = g0 + hs * k3g, k4g = -pc * k4f + k2 * (f0 + hs * k3f);
      c.phi1[m + dir] = f0 + hs / 6 * (k1f + 2 * k2f + 2 * k3f + k4f);
      c.dphi1[m + dir] = g0 + hs / 6 * (k1g + 2 * k2g + 2 * k3g + k4g);
    }
  };
  if (j + 2 < n) march(j + 2, 1);
  if (j - 2 >= 0) march(j - 2, -1);
  for (int m = 0; m < n; ++m)
    if (!std::isfinite(c.phi1[m]) || !std::isfinite(c.dphi1[m]))
      fail("NonFiniteValue", "phi1 march overflowed at k=" + std::to_string(k));
  Vec dd = num::d1(c.dphi1, h);
  for (int m = 0; m < n; ++m) {
    if (std::abs(m - j) < 3) continue;
    const double r = dd[m] + pn(m) * c.dphi1[m] - k2 * c.phi1[m];
    c.residual = std::max(c.residual, std::abs(r) / (k2 * c.phi1[m]));
  }
  return c;
}

// 0/0-safe Taylor value of (phi1^-2 - 1)/U^2 at x = y - y'
double near_value(const SeriesStart& s, double du, double x) {
  const double t0 = -2 * s.c2;
  const double t1 = -2 * s.c3 + 4 * s.a * s.c2;
  const double t2 = (3 * s.c2 * s.c2 - 2 * s.c4) + 4 * s.a * s.c3 - 2 * s.c2 * (3 * s.a * s.a - 2 * s.b);
  return (t0 + x * (t1 + x * t2)) / (du * du);
}

// principal value of int_0^1 q(z)/(u(z) - u_j) dz by subtracting the pole
template <class T>
T pv_integral(const ChannelProfile& p, const std::vector<T>& q, int j) {
  const int n = p.n;
  std::vector<T> b(n);
  for (int m = 0; m < n; ++m)
    if (m != j) b[m] = q[m] / (p.u[m] - p.u[j]) - q[j] / (p.du[j] * (m - j) * p.h);
  b[j] = num::fill_value(b, j);
  return num::integrate(b, p.h) + q[j] / p.du[j] * std::log((1 - p.y[j]) / p.y[j]);
}

}  // namespace

HomColumn phi1_solve(const ChannelProfile& p, int k, int j) {
  if (j < 0 || j >= p.n) fail("RangeError", "y' index outside the grid");
  Mid mid(p);
  return solve_column(p, mid, k, j);
}

HomSolutionTable hom_table(const ChannelProfile& p, int k) {
  if (k == 0) fail("InvalidWavenumber", "k must be nonzero");
  Mid mid(p);
  HomSolutionTable t;
  t.k = k;
  t.n = p.n;
  t.yprime = p.y;
  t.phi1 = RMat(p.n, p.n);
  t.dphi1 = RMat(p.n, p.n);
  t.series.resize(p.n);
  Vec res(p.n);
  num::parallel_for(p.n, [&](int j) {
    HomColumn c = solve_column(p, mid, k, j);
    std::copy(c.phi1.begin(), c.phi1.end(), t.phi1.row(j));
    std::copy(c.dphi1.begin(), c.dphi1.end(), t.dphi1.row(j));
    t.series[j] = c.series;
    res[j] = c.residual;
  });
  t.max_residual = *std::max_element(res.begin(), res.end());
  return t;
}

HomBounds hom_bounds(const ChannelProfile& p, const HomSolutionTable& t) {
  HomBounds b;
  b.k = t.k;
  b.min_phi1 = INFINITY;
  const double ak = std::abs(double(t.k));
  // pairs for the growth bound: the least C is found by bisection since
  // both sides only loosen as C grows
  std::vector<std::pair<double, double>> growth;  // (|k| d, log phi1)
  for (int j = 0; j < t.n; ++j)
    for (int i = 0; i < t.n; ++i) {
      const double phi = t.phi1(j, i), dphi = t.dphi1(j, i);
      const double d = std::abs(p.y[i] - p.y[j]);
      b.min_phi1 = std::min(b.min_phi1, phi);
      if (phi < 1 || (p.y[i] - p.y[j]) * dphi < 0) ++b.monotone_violations;
      if (i == j) continue;
      growth.push_back({ak * d, std::log(phi)});
      const double m = ak * std::min(ak * d, 1.0), r = std::abs(dphi) / phi;
      b.c_log_deriv = std::max({b.c_log_deriv, r / m, r > 0 ? m / r : INFINITY});
      const double e = (phi - 1) / (std::min(1.0, ak * ak * d * d) * phi);
      b.c_excess_upper = std::max(b.c_excess_upper, e);
      b.c_excess = std::max({b.c_excess, e, e > 0 ? 1 / e : INFINITY});
    }
  auto ok = [&](double C) {
    const double lc = std::log(C);
    for (auto [kd, lp] : growth)
      if (lp < kd / C - lc || lp > C * kd + lc) return false;
    return true;
  };
  double lo = 1, hi = 2;
  while (!ok(hi) && hi < 1e12) hi *= 2;
  if (!ok(hi)) fail("NonFinite", "no growth constant below 1e12");
  if (ok(lo)) hi = lo;
  for (int it = 0; it < 60 && hi - lo > 1e-10 * hi; ++it) (ok(0.5 * (lo + hi)) ? hi : lo) = 0.5 * (lo + hi);
  b.c_growth = hi;
  return b;
}

void write_hom_table_csv(const std::string& path, const HomSolutionTable& t) {
  std::ofstream out(path);
  if (!out) fail("IOError", "cannot open " + path);
  out << "y";
  for (int j = 0; j < t.n; ++j) out << ",phi1_" << j;
  out << "\n";
  char buf[32];
  for (int i = 0; i < t.n; ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", t.yprime[i]);
    out << buf;
    for (int j = 0; j < t.n; ++j) {
      std::snprintf(buf, sizeof buf, ",%.17g", t.phi1(j, i));
      out << buf;
    }
    out << "\n";
  }
  if (!out) fail("IOError", "write failed for " + path);
}

void write_spectral_csv(const std::string& path, const SpectralFunctions& sf) {
  std::ofstream out(path);
  if (!out) fail("IOError", "cannot open " + path);
  out << "yprime,rho,J1,J2,indicator\n";
  char buf[160];
  for (size_t i = 0; i < sf.yprime.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", sf.yprime[i], sf.rho[i], sf.J1[i], sf.J2[i],
                  sf.indicator[i]);
    out << buf;
  }
  if (!out) fail("IOError", "write failed for " + path);
}

EpsColumn phi1_eps_solve(const ChannelProfile& p, int k, int j, double eps) {
  if (eps == 0.0 || !std::isfinite(eps)) fail("InvalidEpsilon", "regularization must be nonzero");
  if (k == 0) fail("InvalidWavenumber", "k must be nonzero");
  const int n = p.n;
  const double h = p.h, k2 = double(k) * k, uj = p.u[j];
  const cplx c = uj + cplx(0, eps);
  num::Interp ip{h, n};
  struct Co {
    cplx pc;
    double w;  // theta
    cplx U;
  };
  auto coef = [&](double y) {
    double wts[6];
    const int j0 = ip.stencil(y, wts);
    double u = 0, du = 0, th = 0, dth = 0;
    for (int a = 0; a < 6; ++a) {
      u += wts[a] * p.u[j0 + a];
      du += wts[a] * p.du[j0 + a];
      th += wts[a] * p.theta[j0 + a];
      dth += wts[a] * p.dtheta[j0 + a];
    }
    const cplx U = u - c;
    return Co{2.0 * du / U - dth / th, th, U};
  };
  EpsColumn out;
  out.phi1.assign(n, 0.0);
  out.phi1[j] = 1.0;
  const double scale = std::abs(eps) / p.du[j];
  cplx w_total = 0;
  for (int dir : {1, -1}) {
    cplx f = 1.0, g = 0.0, w = 0.0;
    for (int m = j; m + dir >= 0 && m + dir < n; m += dir) {
      const double xa = std::abs((m - j) * h);
      const int sub = std::min(4000, std::max(1, int(std::ceil(h / (0.2 * std::max(xa, scale))))));
      const double hs = dir * h / sub;
      double y = p.y[m];
      for (int q = 0; q < sub; ++q) {
        // state (phi1, phi1', W) with W' = theta / (U phi1)^2
        Co A = coef(y), B = coef(y + 0.5 * hs), C = coef(q + 1 == sub ? p.y[m + dir] : y + hs);
        auto rhs = [&](const Co& co, cplx F, cplx G, cplx& dF, cplx& dG, cplx& dW) {
          dF = G;
          dG = -co.pc * G + k2 * F;
          dW = co.w / (co.U * co.U * F * F);
        };
        cplx a1, b1, c1, a2, b2, c2, a3, b3, c3, a4, b4, c4;
        rhs(A, f, g, a1, b1, c1);
        rhs(B, f + 0.5 * hs * a1, g + 0.5 * hs * b1, a2, b2, c2);
        rhs(B, f + 0.5 * hs * a2, g + 0.5 * hs * b2, a3, b3, c3);
        rhs(C, f + hs * a3, g + hs * b3, a4, b4, c4);
        f += hs / 6 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        g += hs / 6 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
        w += hs / 6 * (c1 + 2.0 * c2 + 2.0 * c3 + c4);
        y += hs;
      }
      out.phi1[m + dir] = f;
    }
    w_total += double(dir) * w;
  }
  out.wronskian = w_total;
  out.min_abs = 1e300;
  for (const cplx& v : out.phi1) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) fail("NonFiniteValue", "phi1_eps overflow");
    out.min_abs = std::min(out.min_abs, std::abs(v));
  }
  return out;
}

double hilbert_pv(const Vec& g, double a, double b, double c) {
  const int n = int(g.size());
  if (n < 6) fail("GridTooCoarse", "hilbert_pv needs at least 6 samples");
  if (!(c > a && c < b)) fail("BoundaryPoint", "PV point must be strictly interior");
  const double hv = (b - a) / (n - 1);
  num::Interp ip{hv, n};
  const double gc = ip.eval(g, c - a);
  Vec f(n);
  int hit = -1;
  for (int m = 0; m < n; ++m) {
    const double d = c - (a + m * hv);
    if (std::abs(d) < 1e-9 * hv) {
      hit = m;
      continue;
    }
    f[m] = (g[m] - gc) / d;
  }
  if (hit >= 0) f[hit] = num::fill_value(f, hit);
  return num::integrate(f, hv) + gc * std::log((c - a) / (b - c));
}

Vec regular_integrand(const ChannelProfile& p, const HomSolutionTable& t, int j) {
  const int n = p.n;
  Vec f(n);
  const SeriesStart& s = t.series[j];
  for (int m = 0; m < n; ++m) {
    if (std::abs(m - j) <= 2) {
      f[m] = p.theta[m] * near_value(s, p.du[j], (m - j) * p.h);
    } else {
      const double ph = t.phi1(j, m), U = p.u[m] - p.u[j];
      f[m] = p.theta[m] * (1.0 / (ph * ph) - 1.0) / (U * U);
    }
  }
  return f;
}

SpectralFunctions j_functions(const ChannelProfile& p, const HomSolutionTable& t) {
  if (t.n != p.n || t.k == 0) fail("MissingHomTable", "table does not match the profile");
  const int n = p.n;
  SpectralFunctions sf;
  sf.k = t.k;
  sf.yprime = p.y;
  sf.rho.assign(n, 0.0);
  sf.J1.assign(n, 0.0);
  sf.J2.assign(n, 0.0);
  sf.indicator.assign(n, 0.0);
  sf.g.resize(n);
  for (int m = 0; m < n; ++m) sf.g[m] = p.theta[m] / p.du[m];
  Vec gp(n);
  for (int m = 0; m < n; ++m) gp[m] = (p.dtheta[m] * p.du[m] - p.theta[m] * p.d2u[m]) / (p.du[m] * p.du[m]);
  sf.L.resize(n);
  for (int m = 0; m < n; ++m) sf.L[m] = gp[m] / p.du[m];
  const double u0 = p.u0(), u1 = p.u1(), k2 = double(t.k) * t.k;
  num::parallel_for(n, [&](int j) {
    const double rho = (p.u[j] - u0) * (u1 - p.u[j]);
    sf.rho[j] = rho;
    const double th = p.theta[j], du = p.du[j];
    sf.J2[j] = -rho * th * th / (du * du * du) * p.shear_coef()[j];
    double J1 = -(u1 - p.u[j]) * sf.g.front() - (p.u[j] - u0) * sf.g.back();
    if (j > 0 && j < n - 1) {
      const double A = num::integrate(regular_integrand(p, t, j), p.h);
      J1 += rho * (A + pv_integral(p, gp, j));
    }
    sf.J1[j] = J1;
    sf.indicator[j] = (J1 * J1 + kPi * kPi * sf.J2[j] * sf.J2[j]) / (1 + k2 * rho * rho);
  });
  return sf;
}

StabilityReport spectral_assumption_check(const ChannelProfile& p, int k_max, double eps0, int stride) {
  StabilityReport rep;
  rep.floor = 1e300;
  bool all = true;
  const int n = p.n;
  for (int k = 1; k <= k_max; ++k) {
    // phi1 depends on k^2 only, so -k gives the same functions
    HomSolutionTable t = hom_table(p, k);
    SpectralFunctions sf = j_functions(p, t);
    KStability ks;
    ks.k = k;
    ks.indicator_floor = *std::min_element(sf.indicator.begin(), sf.indicator.end());
    double j2max = 0;
    for (double v : sf.J2) j2max = std::max(j2max, std::abs(v));
    for (int j = 1; j < n - 1; ++j) {
      const double s = std::sqrt(1 + double(k) * k * sf.rho[j] * sf.rho[j]);
      if (std::abs(sf.J1[j]) / s < 1e-6 && std::abs(sf.J2[j]) <= 1e-6 * std::max(1.0, j2max))
        ks.embedded_candidates.push_back(p.y[j]);
    }
    std::vector<int> js;
    for (int j = 1; j < n - 1; j += std::max(1, stride)) js.push_back(j);
    Vec wfloor(js.size(), 1e300), mism(js.size(), 0.0);
    num::parallel_for(int(js.size()), [&](int q) {
      const int j = js[q];
      const double s = std::sqrt(1 + double(k) * k * sf.rho[j] * sf.rho[j]);
      for (int sg : {1, -1}) {
        EpsColumn e = phi1_eps_solve(p, k, j, sg * eps0);
        const cplx rw = sf.rho[j] * e.wronskian;
        wfloor[q] = std::min(wfloor[q], std::abs(rw) / s);
        const cplx lim(sf.J1[j], sg * kPi * sf.J2[j]);
        mism[q] = std::max(mism[q], std::abs(rw - lim) / s);
      }
    });
    ks.wronskian_floor = *std::min_element(wfloor.begin(), wfloor.end());
    ks.limit_mismatch = *std::max_element(mism.begin(), mism.end());
    ks.stable = ks.embedded_candidates.empty() && ks.indicator_floor > 1e-8 && ks.wronskian_floor > 1e-8;
    all = all && ks.stable;
    rep.floor = std::min(rep.floor, ks.indicator_floor);
    rep.per_k.push_back(std::move(ks));
  }
  rep.verdict = all ? "stable" : "suspect";
  return rep;
}

namespace {

// theta W / (U phi1^2) with W = int_{y_j}^z omega phi1, and its bracket against the pole
struct PiPieces {
  CVec F, bracket;
};

PiPieces pi_pieces(const ChannelProfile& p, const HomSolutionTable& t, const CVec& omega, int j) {
  const int n = p.n;
  CVec q(n);
  for (int m = 0; m < n; ++m) q[m] = omega[m] * t.phi1(j, m);
  CVec W = num::cumulative(q, p.h);
  const cplx wj = W[j];
  PiPieces pc;
  pc.F.resize(n);
  pc.bracket.resize(n);
  for (int m = 0; m < n; ++m) {
    if (m == j) continue;
    const double ph = t.phi1(j, m);
    pc.F[m] = p.theta[m] * (W[m] - wj) / ((p.u[m] - p.u[j]) * ph * ph);
  }
  pc.F[j] = p.theta[j] * omega[j] / p.du[j];
  for (int m = 0; m < n; ++m)
    if (m != j) pc.bracket[m] = pc.F[m] / (p.u[m] - p.u[j]) - pc.F[j] / (p.du[j] * (m - j) * p.h);
  pc.bracket[j] = num::fill_value(pc.bracket, j);
  return pc;
}

cplx pi1_at(const ChannelProfile& p, const HomSolutionTable& t, const CVec& omega, int j) {
  PiPieces pc = pi_pieces(p, t, omega, j);
  return num::integrate(pc.bracket, p.h) + pc.F[j] / p.du[j] * std::log((1 - p.y[j]) / p.y[j]);
}

}  // namespace

CVec pi1_all(const ChannelProfile& p, const HomSolutionTable& t, const CVec& omega) {
  if (int(omega.size()) != p.n) fail("ShapeMismatch", "omega must live on the y grid");
  CVec out(p.n, 0.0);
  num::parallel_for(p.n - 2, [&](int q) { out[q + 1] = pi1_at(p, t, omega, q + 1); });
  return out;
}

CVec pi2_all(const ChannelProfile& p, const CVec& omega) {
  CVec out(p.n);
  for (int m = 0; m < p.n; ++m) out[m] = p.theta[m] * omega[m] / (p.du[m] * p.du[m]);
  return out;
}

std::pair<cplx, cplx> pi_operators(const ChannelProfile& p, const HomSolutionTable& t, const CVec& omega,
                                   int j) {
  if (j <= 0 || j >= p.n - 1) fail("BoundaryPoint", "y' must be interior");
  if (int(omega.size()) != p.n) fail("ShapeMismatch", "omega must live on the y grid");
  return {pi1_at(p, t, omega, j), p.theta[j] * omega[j] / (p.du[j] * p.du[j])};
}

EKernel build_e_kernel(const ChannelProfile& p, const HomSolutionTable& t, const SpectralFunctions& sf) {
  const int n = p.n;
  EKernel ek;
  ek.k = t.k;
  ek.n = n;
  ek.table = &t;
  ek.u = p.u;
  ek.g = sf.g;
  ek.L = sf.L;
  ek.R0 = RMat(n, n);
  ek.R1 = RMat(n, n);
  const double u0 = p.u0(), u1 = p.u1();
  num::parallel_for(n, [&](int j) {
    const Vec A = num::cumulative(regular_integrand(p, t, j), p.h);
    Vec Bi(n);
    const double gj = ek.g[j], Lj = ek.L[j], uj = p.u[j];
    for (int m = 0; m < n; ++m) {
      if (m == j) continue;
      const double U = p.u[m] - uj;
      Bi[m] = (ek.g[m] - gj - Lj * U) * p.du[m] / (U * U);
    }
    Bi[j] = num::fill_value(Bi, j);
    const Vec B = num::cumulative(Bi, p.h);
    const double At = A[n - 1], Bt = B[n - 1];
    for (int i = 0; i < n; ++i) {
      const double ph = t.phi1(j, i);
      const double pole = i == j ? 0.0 : gj * (1 - ph) / (p.u[i] - uj);
      if (i <= j && j > 0)
        ek.R0(j, i) = ph * (A[i] + B[i]) + pole + gj * ph / (u0 - uj) - ph * Lj * std::log(uj - u0);
      if (i >= j && j < n - 1)
        ek.R1(j, i) = ph * (A[i] - At + B[i] - Bt) + pole + gj * ph / (u1 - uj) - ph * Lj * std::log(u1 - uj);
    }
  });
  return ek;
}

double EKernel::kappa(int a, int b) const {
  const double U = u[a] - u[b];
  return -g[b] / U + phi1(a, b) * L[b] * std::log(std::abs(U)) + R(a, b);
}

double EKernel::e(int a, int b) const {
  if (a == b) return -g[b];
  return (u[a] - u[b]) * kappa(a, b);
}

ResolventLimit resolvent_limit(const ChannelProfile& p, const HomSolutionTable& t, const SpectralFunctions& sf,
                               const EKernel& ek, const CVec& omega, int j, int sign, double near_threshold) {
  const int n = p.n;
  if (j <= 0 || j >= n - 1) fail("BoundaryPoint", "y' must be interior");
  if (int(omega.size()) != n) fail("ShapeMismatch", "omega must live on the y grid");
  const double sg = sign >= 0 ? 1.0 : -1.0;
  const cplx den(sf.J1[j], sg * kPi * sf.J2[j]);
  const double k2 = double(t.k) * t.k;
  if (std::abs(den) / std::sqrt(1 + k2 * sf.rho[j] * sf.rho[j]) < near_threshold)
    fail("NearEigenvalue", "|J1 +- i pi J2| below threshold");
  ResolventLimit r;
  r.k = t.k;
  r.j = j;
  r.sign = sign >= 0 ? 1 : -1;
  PiPieces pc = pi_pieces(p, t, omega, j);
  r.pi1_val = num::integrate(pc.bracket, p.h) + pc.F[j] / p.du[j] * std::log((1 - p.y[j]) / p.y[j]);
  r.pi2_val = p.theta[j] * omega[j] / (p.du[j] * p.du[j]);
  const cplx coef = sf.rho[j] * (r.pi1_val + sg * cplx(0, kPi) * r.pi2_val) / den;
  // running integral from the wall on each side, pole part done in closed form
  CVec S = num::cumulative(pc.bracket, p.h);
  const cplx Fj = pc.F[j] / p.du[j];
  r.psi.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    if (i == j) {
      r.psi[i] = coef * ek.e(i, j);
      continue;
    }
    const double x = std::abs(p.y[i] - p.y[j]);
    cplx I = i < j ? S[i] - S[0] + Fj * std::log(x / p.y[j])
                   : S[i] - S[n - 1] + Fj * std::log(x / (1 - p.y[j]));
    const double phi = (p.u[i] - p.u[j]) * t.phi1(j, i);
    r.psi[i] = -phi * I + coef * ek.e(i, j);
  }
  return r;
}

double resolvent_residual(const ChannelProfile& p, int k, const CVec& omega, const ResolventLimit& r, double gap) {
  const int n = p.n;
  CVec d = num::d1(r.psi, p.h);
  for (int m = 0; m < n; ++m) d[m] /= p.theta[m];
  CVec dd = num::d1(d, p.h);
  const double k2 = double(k) * k, uj = p.u[r.j];
  double res = 0, scale = 0;
  for (int m = 0; m < n; ++m) {
    scale = std::max(scale, std::abs(omega[m]));
    if (std::abs(p.y[m] - p.y[r.j]) < gap) continue;
    const cplx op = dd[m] - k2 * r.psi[m] / p.theta[m];
    res = std::max(res, std::abs((p.u[m] - uj) * op - p.shear_coef()[m] * r.psi[m] + omega[m]));
  }
  return res / std::max(scale, 1e-300);
}

Representation build_representation(const ChannelProfile& p, const HomSolutionTable& t,
                                    const SpectralFunctions& sf, const EKernel& ek, const CVec& omega0) {
  const int n = p.n;
  if (int(omega0.size()) != n) fail("ShapeMismatch", "omega must live on the y grid");
  const double k2 = double(t.k) * t.k;
  for (int j = 0; j < n; ++j) {
    const double s = std::sqrt(1 + k2 * sf.rho[j] * sf.rho[j]);
    if (std::hypot(sf.J1[j], kPi * sf.J2[j]) / s < 1e-8) fail("NearEigenvalue", "J1, J2 vanish together");
  }
  Representation rep;
  rep.k = t.k;
  rep.u = p.u;
  CVec P1 = pi1_all(p, t, omega0), P2 = pi2_all(p, omega0);
  rep.coef.assign(n, 0.0);
  for (int j = 0; j < n; ++j) {
    const double J1 = sf.J1[j], J2 = sf.J2[j];
    rep.coef[j] = (J1 * P2[j] - J2 * P1[j]) / (J1 * J1 + kPi * kPi * J2 * J2) * sf.rho[j] * p.du[j];
  }
  rep.weights = RMat(n, n);
  num::parallel_for(n - 2, [&](int q) {
    const int i = q + 1;
    Vec lg(n), left(n, 0.0), right(n, 0.0);
    for (int m = 0; m < n; ++m) {
      const double U = p.u[i] - p.u[m];
      lg[m] = U * ek.phi1(i, m) * ek.L[m];
      if (m <= i) left[m] = -ek.g[m] + U * ek.R1(m, i);
      if (m >= i) right[m] = -ek.g[m] + U * ek.R0(m, i);
    }
    num::SingularParts sp;
    sp.logc = &lg;
    sp.left = &left;
    sp.right = &right;
    Vec w = num::singular_row(i, p.h, p.u, p.du[i], sp);
    std::copy(w.begin(), w.end(), rep.weights.row(i));
  });
  return rep;
}

CVec Representation::psi(double t) const {
  const int n = weights.rows;
  CVec f(n), out(n, 0.0);
  for (int m = 0; m < n; ++m) f[m] = coef[m] * std::exp(cplx(0, -u[m] * k * t));
  for (int i = 0; i < n; ++i) {
    cplx s = 0;
    const double* w = weights.row(i);
    for (int m = 0; m < n; ++m) s += w[m] * f[m];
    out[i] = -s;
  }
  return out;
}

CVec representation_psi(const ChannelProfile& p, int k, const CVec& omega0, double t) {
  HomSolutionTable tab = hom_table(p, k);
  SpectralFunctions sf = j_functions(p, tab);
  EKernel ek = build_e_kernel(p, tab, sf);
  return build_representation(p, tab, sf, ek, omega0).psi(t);
}

}  // namespace chd
