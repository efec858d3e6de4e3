#include <doctest.h>

#include <cmath>

#include "chd/numerics.hpp"
#include "chd/rayleigh.hpp"

using namespace chd;

namespace {

ChannelProfile bump(int n, double eu = 0.05, double et = 0.0) {
  ProfileSpec s;
  s.family = "couette_bump";
  s.n_y = n;
  s.eps_u = eu;
  s.eps_theta = et;
  return build_profile(s);
}

// sinh(k d)/(k d), the Couette closed form
double couette_phi1(int k, double d) { return d == 0 ? 1.0 : std::sinh(k * d) / (k * d); }

double couette_phi1_err(int n, int k) {
  ChannelProfile p = couette_constant(n);
  HomSolutionTable t = hom_table(p, k);
  double e = 0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double ex = couette_phi1(k, p.y[i] - p.y[j]);
      e = std::max(e, std::abs(t.phi1(j, i) - ex) / ex);
    }
  return e;
}

CVec smooth_omega(const ChannelProfile& p) {
  CVec w(p.n);
  Bump b{0.3, 0.7};
  for (int i = 0; i < p.n; ++i) w[i] = cplx(b.eval(p.y[i])[0], 0.3 * std::sin(kPi * p.y[i]) * b.eval(p.y[i])[0]);
  return w;
}

double l2(const CVec& v, double h) {
  double s = 0;
  for (auto& x : v) s += std::norm(x);
  return std::sqrt(s * h);
}

}  // namespace

TEST_CASE("phi1 closed form for Couette") {
  ChannelProfile p = couette_constant(129);
  HomColumn c = phi1_solve(p, 1, 0);
  CHECK(c.phi1.back() == doctest::Approx(std::sinh(1.0)).epsilon(1e-8));
  CHECK(c.residual < 1e-5);
  const double e1 = couette_phi1_err(129, 3), e2 = couette_phi1_err(257, 3);
  CHECK(e2 < 2e-6);
  CHECK(std::log2(e1 / e2) > 3.5);
}

TEST_CASE("phi1 boundary data and lower bounds") {
  ChannelProfile p = bump(129, 0.05, 0.02);
  for (int k : {1, 3}) {
    HomSolutionTable t = hom_table(p, k);
    for (int j = 0; j < p.n; ++j) {
      CHECK(t.phi1(j, j) == 1.0);
      CHECK(t.dphi1(j, j) == 0.0);
      for (int i = 0; i < p.n; ++i) {
        CHECK(t.phi1(j, i) >= 1.0);
        CHECK((p.y[i] - p.y[j]) * t.dphi1(j, i) >= 0.0);
      }
    }
  }
  CHECK_THROWS_AS(hom_table(p, 0), Error);
}

TEST_CASE("regularized phi1 tends to phi1") {
  ChannelProfile p = couette_constant(129);
  const int j = 40;
  HomColumn c = phi1_solve(p, 1, j);
  Vec err;
  for (double eps : {1e-2, 1e-3, 1e-4}) {
    EpsColumn e = phi1_eps_solve(p, 1, j, eps);
    double m = 0;
    for (int i = 0; i < p.n; ++i) m = std::max(m, std::abs(e.phi1[i] - c.phi1[i]));
    err.push_back(m / eps);
    CHECK(e.min_abs >= 0.5);
  }
  // max |phi1_eps - phi1| <= C eps with the same C across eps
  CHECK(err[0] < 1.0);
  CHECK(err[1] < 1.0);
  CHECK(err[2] < 1.0);
  CHECK_THROWS_AS(phi1_eps_solve(p, 1, j, 0.0), Error);
}

TEST_CASE("hilbert principal value") {
  Vec one(101, 1.0), lin(101);
  for (int i = 0; i < 101; ++i) lin[i] = i / 100.0;
  CHECK(std::abs(hilbert_pv(one, 0, 1, 0.5)) < 1e-13);
  CHECK(hilbert_pv(lin, 0, 1, 0.5) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(hilbert_pv(one, 0, 1, 0.25) == doctest::Approx(std::log(1.0 / 3)).epsilon(1e-12));
  CHECK(hilbert_pv(one, 0, 1, 0.2537) == doctest::Approx(std::log(0.2537 / 0.7463)).epsilon(1e-12));
  CHECK_THROWS_AS(hilbert_pv(one, 0, 1, 1.0), Error);
  // linear in g, odd under reflection about c on a symmetric interval
  Vec g(101), gr(101);
  for (int i = 0; i < 101; ++i) {
    const double v = i / 100.0;
    g[i] = std::exp(v) * std::cos(3 * v);
    gr[i] = std::exp(1 - v) * std::cos(3 * (1 - v));
  }
  CHECK(hilbert_pv(g, 0, 1, 0.5) == doctest::Approx(-hilbert_pv(gr, 0, 1, 0.5)).epsilon(1e-10));
}

TEST_CASE("spectral functions for Couette") {
  ChannelProfile p = couette_constant(257);
  for (int k : {1, 4}) {
    HomSolutionTable t = hom_table(p, k);
    SpectralFunctions sf = j_functions(p, t);
    CHECK(sf.rho.front() == 0.0);
    CHECK(sf.rho.back() == 0.0);
    double err = 0;
    for (int j = 0; j < p.n; ++j) {
      CHECK(sf.J2[j] == 0.0);
      const double y = p.y[j];
      double ex = -1.0;
      if (j > 0 && j < p.n - 1) ex = -sf.rho[j] * k * std::sinh(k) / (std::sinh(k * y) * std::sinh(k * (1 - y)));
      err = std::max(err, std::abs(sf.J1[j] - ex) / std::abs(ex));
    }
    CHECK(err < 1e-7);
  }
}

TEST_CASE("indicator stays positive on the bump") {
  ChannelProfile p = bump(129);
  double lo = 1e300, hi = 0;
  for (int k = 1; k <= 8; ++k) {
    SpectralFunctions sf = j_functions(p, hom_table(p, k));
    for (double v : sf.indicator) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    // J2 vanishes where the shear coefficient does
    for (int j = 0; j < p.n; ++j)
      if (p.shear_coef()[j] == 0.0) CHECK(sf.J2[j] == 0.0);
  }
  CHECK(lo > 0.05);
  CHECK(hi / lo < 100.0);
}

TEST_CASE("Wronskian limit matches J1 + i pi J2") {
  ChannelProfile p = bump(129);
  HomSolutionTable t = hom_table(p, 2);
  SpectralFunctions sf = j_functions(p, t);
  for (int j : {30, 60, 64, 70}) {
    const double s = std::sqrt(1 + 4 * sf.rho[j] * sf.rho[j]);
    for (double eps : {1e-3, -1e-3}) {
      EpsColumn e = phi1_eps_solve(p, 2, j, eps);
      const cplx lim(sf.J1[j], (eps > 0 ? 1 : -1) * kPi * sf.J2[j]);
      CHECK(std::abs(sf.rho[j] * e.wronskian - lim) / s < 2e-2);
    }
  }
}

TEST_CASE("stability gate") {
  StabilityReport r = spectral_assumption_check(couette_constant(65), 3, 1e-3, 4);
  CHECK(r.verdict == "stable");
  StabilityReport b = spectral_assumption_check(bump(65), 2, 1e-3, 4);
  CHECK(b.verdict == "stable");
  CHECK(b.floor > 0);
}

TEST_CASE("synthetic inflection is flagged through J2") {
  // u'/theta with a critical point at y = 0.5 by symmetry of the bump
  ChannelProfile p = bump(129, 0.05);
  SpectralFunctions sf = j_functions(p, hom_table(p, 1));
  CHECK(std::abs(sf.J2[64]) < 1e-10);
  CHECK(std::abs(sf.J1[64]) > 0.1);
}

TEST_CASE("Pi operators") {
  ChannelProfile p = couette_constant(129);
  HomSolutionTable t = hom_table(p, 1);
  CVec two(p.n, 2.0), zero(p.n, 0.0);
  CHECK(pi_operators(p, t, two, 40).second == cplx(2.0, 0.0));
  auto z = pi_operators(p, t, zero, 40);
  CHECK(z.first == cplx(0.0));
  CHECK(z.second == cplx(0.0));
  CHECK_THROWS_AS(pi_operators(p, t, two, 0), Error);

  // L2 bound constant stable under refinement
  Vec ratio;
  for (int n : {129, 257}) {
    ChannelProfile b = bump(n);
    HomSolutionTable tb = hom_table(b, 2);
    CVec w = smooth_omega(b);
    ratio.push_back(l2(pi1_all(b, tb, w), b.h) / l2(w, b.h));
  }
  CHECK(std::abs(ratio[0] / ratio[1] - 1.0) < 1e-3);
}

TEST_CASE("e kernel") {
  ChannelProfile p = couette_constant(129);
  const int k = 2;
  HomSolutionTable t = hom_table(p, k);
  SpectralFunctions sf = j_functions(p, t);
  EKernel ek = build_e_kernel(p, t, sf);
  double err = 0;
  for (int b = 1; b < p.n - 1; b += 3)
    for (int a = 0; a < p.n; ++a) {
      const double y = p.y[a], yp = p.y[b];
      const double ex = a <= b ? -std::sinh(k * y) / std::sinh(k * yp) : -std::sinh(k * (1 - y)) / std::sinh(k * (1 - yp));
      err = std::max(err, std::abs(ek.e(a, b) - ex));
    }
  CHECK(err < 1e-8);

  // bump: decomposition against a direct integral of theta/phi^2 away from the diagonal
  ChannelProfile q = bump(257, 0.05, 0.03);
  HomSolutionTable tq = hom_table(q, k);
  SpectralFunctions sq = j_functions(q, tq);
  EKernel eq = build_e_kernel(q, tq, sq);
  const int b = 128;
  Vec f(q.n);
  for (int m = 0; m < q.n; ++m) {
    const double phi = (q.u[m] - q.u[b]) * tq.phi1(b, m);
    f[m] = m == b ? 0 : q.theta[m] / (phi * phi);
  }
  // left side: cumulative from 0 up to a < b - 25
  Vec left(f.begin(), f.begin() + b - 20);
  Vec cl = num::cumulative(left, q.h);
  double e2 = 0;
  for (int a = 0; a < b - 25; ++a) {
    const double direct = (q.u[a] - q.u[b]) * tq.phi1(b, a) * cl[a];
    e2 = std::max(e2, std::abs(eq.e(a, b) - direct));
  }
  CHECK(e2 < 2e-6);
}

TEST_CASE("resolvent limit") {
  Vec res;
  for (int n : {513, 1025}) {
    ChannelProfile p = bump(n, 0.05, 0.02);
    HomSolutionTable t = hom_table(p, 1);
    SpectralFunctions sf = j_functions(p, t);
    EKernel ek = build_e_kernel(p, t, sf);
    CVec w = smooth_omega(p);
    const int j = (n - 1) / 2 + (n - 1) / 32;
    for (int sg : {1, -1}) {
      ResolventLimit r = resolvent_limit(p, t, sf, ek, w, j, sg);
      CHECK(std::abs(r.psi.front()) < 1e-8);
      CHECK(std::abs(r.psi.back()) < 1e-8);
      if (sg == 1) res.push_back(resolvent_residual(p, 1, w, r, 0.05));
    }
    CVec zero(n, 0.0);
    ResolventLimit z = resolvent_limit(p, t, sf, ek, zero, j, 1);
    for (auto v : z.psi) CHECK(v == cplx(0.0));
  }
  MESSAGE("resolvent residuals " << res[0] << " " << res[1]);
  CHECK(res[1] < res[0] / 3);
  CHECK(res[1] < 2e-3);
}

TEST_CASE("representation at t = 0 solves the Couette problem") {
  ChannelProfile p = couette_constant(257);
  const int k = 1;
  CVec w(p.n);
  for (int i = 0; i < p.n; ++i) w[i] = -(kPi * kPi + 1) * std::sin(kPi * p.y[i]);
  CVec psi = representation_psi(p, k, w, 0.0);
  double e = 0;
  for (int i = 0; i < p.n; ++i) e = std::max(e, std::abs(psi[i] - std::sin(kPi * p.y[i])));
  CHECK(e < 1e-6);
  CVec zero(p.n, 0.0);
  for (auto v : representation_psi(p, k, zero, 3.0)) CHECK(v == cplx(0.0));
}

TEST_CASE("homogeneous-solution bounds") {
  // Couette: phi1 = sinh(x)/x with x = |k| d, so the one-sided excess constant is
  // sup (sinh x - x)/(x^2 sinh x) = 1/6 for k = 1 and 1 - 8/sinh 8 for k = 8
  ChannelProfile c = couette_constant(257);
  HomBounds b1 = hom_bounds(c, hom_table(c, 1)), b8 = hom_bounds(c, hom_table(c, 8));
  CHECK(b1.monotone_violations == 0);
  CHECK(b1.c_excess_upper == doctest::Approx(1.0 / 6).epsilon(1e-3));
  CHECK(b8.c_excess_upper == doctest::Approx(1 - 8 / std::sinh(8.0)).epsilon(1e-6));
  CHECK(b8.c_growth >= 1);

  ChannelProfile p = bump(257);
  Vec g, d, e;
  for (int k : {1, 2, 4, 8}) {
    HomBounds b = hom_bounds(p, hom_table(p, k));
    CHECK(b.monotone_violations == 0);
    CHECK(b.min_phi1 == 1.0);
    g.push_back(b.c_growth);
    d.push_back(b.c_log_deriv);
    e.push_back(b.c_excess);
  }
  for (const Vec* v : {&g, &d, &e}) {
    auto [lo, hi] = std::minmax_element(v->begin(), v->end());
    CHECK(std::isfinite(*hi));
    CHECK(*hi < 2 * *lo);
  }
}
