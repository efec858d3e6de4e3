#include <doctest.h>

#include <cmath>

#include "chd/sturm.hpp"

using namespace chd;

namespace {

ChannelProfile bump(int n, double eu, double et) {
  ProfileSpec s;
  s.family = "couette_bump";
  s.n_y = n;
  s.eps_u = eu;
  s.eps_theta = et;
  return build_profile(s);
}

std::string kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return "none";
}

}  // namespace

TEST_CASE("homogeneous solutions, constant coefficients") {
  const int n = 257;
  Vec one(n, 1.0);
  for (int k : {1, 3, 9}) {
    QSolutions q = q_solutions(one, one, k);
    double e = 0;
    for (int i = 0; i < n; ++i) {
      const double y = double(i) / (n - 1);
      e = std::max(e, std::abs(q.qa[i] / std::cosh(k * y) - 1));
      e = std::max(e, std::abs(q.qb[i] / std::cosh(k * (1 - y)) - 1));
    }
    CHECK(e < 1e-6);
    CHECK(q.qa[0] == 1.0);
    CHECK(q.pa[0] == 0.0);
    CHECK(q.qb[n - 1] == 1.0);
    CHECK(q.pb[n - 1] == 0.0);
    CHECK(q.wronskian_spread < 1e-8);
  }
}

TEST_CASE("homogeneous solutions, variable coefficients") {
  ChannelProfile p = bump(257, 0.05, 0.2);
  Vec h1(p.n);
  for (int i = 0; i < p.n; ++i) h1[i] = 1 / p.theta[i];
  for (int k : {1, 4, 8, 12}) {
    QSolutions q = q_solutions(h1, p.theta, k);
    CHECK(q.wronskian_spread < 1e-8);
    for (int i = 0; i + 1 < p.n; ++i) {
      CHECK(q.qa[i] >= 1.0);
      CHECK(q.qb[i] >= 1.0);
      CHECK(q.qa[i + 1] >= q.qa[i]);
      CHECK(q.qb[i + 1] <= q.qb[i]);
    }
    // -qb'(0)/qa'(1) against qb(0)/qa(1): same order of magnitude
    const double r1 = -q.pb[0] / h1[0] / (q.pa[p.n - 1] / h1[p.n - 1]);
    const double r2 = q.qb[0] / q.qa[p.n - 1];
    CHECK(r1 / r2 < 3.0);
    CHECK(r1 / r2 > 1.0 / 3);
  }
}

TEST_CASE("Couette Green kernel") {
  Vec one(257, 1.0);
  for (int k : {1, 2, 5}) {
    GreenKernelSet g = green_kernel(one, one, k, Bc::dirichlet);
    double e = 0;
    for (int i = 0; i < 257; i += 8)
      for (int j = 0; j < 257; j += 8) {
        const double a = std::min(i, j) / 256.0, b = std::max(i, j) / 256.0;
        e = std::max(e, std::abs(g.G(i, j) - std::sinh(k * (1 - b)) * std::sinh(k * a) / (k * std::sinh(k))));
      }
    CHECK(e < 1e-6);
    CHECK(g.identity_residual < 1e-8);
    CHECK(g.action_discrepancy < 1e-7);
    // entrywise the discrete kernel differs at the kink by O(h)
    CHECK(g.discrepancy < 1e-2);
  }
  GreenKernelSet g = green_kernel(one, one, 1, Bc::dirichlet);
  CHECK(g.G(64, 128) == doctest::Approx(std::sinh(0.5) * std::sinh(0.25) / std::sinh(1.0)).epsilon(1e-9));
  CHECK(g.G(64, 128) == doctest::Approx(0.11201).epsilon(1e-4));

  GreenKernelSet g0 = green_kernel(one, one, 0, Bc::dirichlet);
  CHECK(g0.G(64, 128) == doctest::Approx(0.25 * 0.5).epsilon(1e-12));
  CHECK(kind_of([&] { green_kernel(one, one, 0, Bc::neumann); }) == "NeumannZeroMode");
}

TEST_CASE("Neumann kernel") {
  Vec one(129, 1.0);
  GreenKernelSet g = green_kernel(one, one, 2, Bc::neumann);
  // cosh(k a) cosh(k (1 - b)) / (k sinh k)
  const double ex = std::cosh(2 * 0.25) * std::cosh(2 * 0.5) / (2 * std::sinh(2.0));
  CHECK(g.G(32, 64) == doctest::Approx(ex).epsilon(1e-9));
  CHECK(g.identity_residual < 1e-8);
}

TEST_CASE("Green kernel reciprocity and cross-assembly on a stratified profile") {
  Vec disc;
  for (int n : {129, 257}) {
    ChannelProfile p = bump(n, 0.05, 0.2);
    GreenKernelSet g = green_kernel(p, 3, Bc::dirichlet);
    double asym = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) asym = std::max(asym, std::abs(g.G(i, j) - g.G(j, i)));
    CHECK(asym < 1e-12);
    CHECK(g.identity_residual < 1e-8);
    CHECK(g.action_discrepancy < 1e-6);
    disc.push_back(g.discrepancy);
  }
  CHECK(disc[0] / disc[1] > 1.8);
}

TEST_CASE("stream solve") {
  Vec err;
  for (int n : {129, 257}) {
    ChannelProfile p = couette_constant(n);
    CVec w(n);
    for (int i = 0; i < n; ++i) w[i] = -(kPi * kPi + 1) * std::sin(kPi * p.y[i]);
    CVec ux;
    CVec psi = solve_stream(p, 1, w, &ux);
    double e = 0;
    for (int i = 0; i < n; ++i) e = std::max(e, std::abs(psi[i] - std::sin(kPi * p.y[i])));
    err.push_back(e);
    CHECK(std::abs(ux[n / 2]) < 1e-6);
  }
  CHECK(err[1] < 1e-7);
  CHECK(err[0] / err[1] > 12);

  ChannelProfile p = bump(257, 0.05, 0.2);
  CVec zero(p.n, 0.0);
  for (auto v : solve_stream(p, 2, zero)) CHECK(v == cplx(0.0));

  // superposition
  CVec a(p.n), b(p.n), ab(p.n);
  for (int i = 0; i < p.n; ++i) {
    a[i] = cplx(std::sin(3 * p.y[i]), p.y[i] * p.y[i]);
    b[i] = cplx(std::exp(p.y[i]), -1.0);
    ab[i] = 2.0 * a[i] - 3.0 * b[i];
  }
  CVec pa = solve_stream(p, 2, a), pb = solve_stream(p, 2, b), pab = solve_stream(p, 2, ab);
  for (int i = 0; i < p.n; ++i) CHECK(std::abs(pab[i] - (2.0 * pa[i] - 3.0 * pb[i])) < 1e-12);
}

TEST_CASE("stream solve on a stratified profile, manufactured") {
  // psi = sin(pi y) y: residual of the continuous operator is computed in closed form
  Vec err;
  for (int n : {129, 257}) {
    ChannelProfile p = bump(n, 0.05, 0.2);
    const int k = 2;
    CVec w(n);
    for (int i = 0; i < n; ++i) {
      const double y = p.y[i], th = p.theta[i], dth = p.dtheta[i];
      const double s = std::sin(kPi * y) * y;
      const double ds = kPi * std::cos(kPi * y) * y + std::sin(kPi * y);
      const double d2s = -kPi * kPi * std::sin(kPi * y) * y + 2 * kPi * std::cos(kPi * y);
      w[i] = d2s / th - dth / (th * th) * ds - k * k * s / th;
    }
    CVec psi = solve_stream(p, k, w);
    double e = 0;
    for (int i = 0; i < n; ++i) e = std::max(e, std::abs(psi[i] - std::sin(kPi * p.y[i]) * p.y[i]));
    err.push_back(e);
  }
  CHECK(err[1] < 1e-6);
  CHECK(err[0] / err[1] > 10);
}

TEST_CASE("pressure without density perturbation is a single Neumann solve") {
  ChannelProfile p = couette_constant(129);
  Spectral sp(4, 16, p.n);
  ModeField d = sp.zeros(), rhs = sp.zeros();
  Vec accel(p.n);
  Vec f(p.n);
  for (int i = 0; i < p.n; ++i) {
    f[i] = std::exp(p.y[i]) * std::cos(3 * p.y[i]);
    rhs(2, i) = f[i];
    accel[i] = std::sin(kPi * p.y[i]);
  }
  PressureResult r = solve_pressure(p, sp, d, rhs, accel);
  CHECK(r.iterations == 1);
  GreenKernelSet g = green_kernel(p, 2, Bc::neumann);
  Vec ref = green_apply(g, f);
  for (int i = 0; i < p.n; ++i) {
    CHECK(std::abs(r.P(2, i) + ref[i]) < 1e-6);
    CHECK(r.P(1, i) == cplx(0.0));
    CHECK(r.P(0, i).real() == doctest::Approx(-accel[i]).epsilon(1e-14));
  }
}

TEST_CASE("pressure with a density perturbation, manufactured") {
  ProfileSpec s;
  s.family = "density_bump";
  s.eps_theta = 0.2;
  Vec err;
  for (int n : {129, 257}) {
    s.n_y = n;
    ChannelProfile p = build_profile(s);
    Spectral sp(6, 24, n);
    Bump b{0.3, 0.7};
    ModeField d = sp.zeros(), dy = sp.zeros(), P = sp.zeros(), Py = sp.zeros(), Pyy = sp.zeros();
    const cplx e1 = std::exp(cplx(0, 1));
    for (int i = 0; i < n; ++i) {
      const double y = p.y[i], B = b.eval(y)[0], dB = b.eval(y)[1];
      const double c1 = std::cos(kPi * y), s1 = std::sin(kPi * y), c2 = std::cos(2 * kPi * y),
                   s2 = std::sin(2 * kPi * y), c3 = std::cos(3 * kPi * y), s3 = std::sin(3 * kPi * y);
      const double pi2 = kPi * kPi;
      d(0, i) = d(1, i) = 0.05 * B;
      dy(0, i) = dy(1, i) = 0.05 * dB;
      d(2, i) = cplx(0, -0.025) * B;
      dy(2, i) = cplx(0, -0.025) * dB;
      P(1, i) = c1 + 0.2 * c2;
      Py(1, i) = -kPi * s1 - 0.4 * kPi * s2;
      Pyy(1, i) = -pi2 * c1 - 0.8 * pi2 * c2;
      P(2, i) = cplx(0, 0.3) * c3;
      Py(2, i) = cplx(0, -0.9 * kPi) * s3;
      Pyy(2, i) = cplx(0, -2.7 * pi2) * c3;
      P(3, i) = 0.1 * e1 * c1;
      Py(3, i) = -0.1 * kPi * e1 * s1;
      Pyy(3, i) = -0.1 * pi2 * e1 * c1;
      P(0, i) = Py(0, i) = 0.1 * s2;  // row 0 carries dP0/dy
      Pyy(0, i) = 0.2 * kPi * c2;
    }
    ModeField th = sp.zeros();
    for (int i = 0; i < n; ++i) th(0, i) = p.theta[i];
    ModeField rho = th;
    for (size_t q = 0; q < rho.a.size(); ++q) rho.a[q] += d.a[q];
    ModeField drho = dy;
    for (int i = 0; i < n; ++i) drho(0, i) += p.dtheta[i];
    // div(rho grad P) with every y-derivative exact
    ModeField fx = product(sp, rho, sp.dx(P)), a = product(sp, drho, Py), c = product(sp, rho, Pyy);
    ModeField dfx = sp.dx(fx);
    ModeField rhs = sp.zeros();
    for (size_t q = 0; q < rhs.a.size(); ++q) rhs.a[q] = dfx.a[q] + a.a[q] + c.a[q];
    ModeField Pyf = Py;
    for (int i = 0; i < n; ++i) Pyf(0, i) = 0.0;
    ModeField mix = product(sp, d, Pyf);
    Vec accel(n);
    for (int i = 0; i < n; ++i)
      accel[i] = -((p.theta[i] + d(0, i).real()) * P(0, i).real() + mix(0, i).real());
    PressureResult r = solve_pressure(p, sp, d, rhs, accel);
    CHECK(r.iterations > 1);
    CHECK(r.iterations < 60);
    double e = 0, m = 0;
    for (size_t q = 0; q < P.a.size(); ++q) {
      e = std::max(e, std::abs(r.P.a[q] - P.a[q]));
      m = std::max(m, std::abs(P.a[q]));
    }
    err.push_back(e / m);
  }
  CHECK(err[1] < 1e-6);
  CHECK(err[0] > err[1]);

  ChannelProfile p = build_profile(s);
  Spectral sp(2, 8, p.n);
  ModeField big = sp.zeros();
  for (int i = 0; i < p.n; ++i) big(0, i) = 0.6;
  CHECK(kind_of([&] { solve_pressure(p, sp, big, sp.zeros(), Vec(p.n, 0.0)); }) == "DensityTooLarge");
}
