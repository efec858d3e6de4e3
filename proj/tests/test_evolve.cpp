#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>

#include "chd/evolve.hpp"
#include "chd/numerics.hpp"
#include "chd/rayleigh.hpp"

using namespace chd;

namespace {

std::string kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return "none";
}

ChannelProfile bump_profile(double eps_u, double eps_theta, int n) {
  ProfileSpec s;
  s.family = "couette_bump";
  s.eps_u = eps_u;
  s.eps_theta = eps_theta;
  s.n_y = n;
  return build_profile(s);
}

CVec bump_data(const ChannelProfile& p, double a, double b) {
  Bump B{a, b};
  CVec w(p.n);
  for (int i = 0; i < p.n; ++i) w[i] = B.eval(p.y[i])[0];
  return w;
}

double max_diff(const ModeField& a, const ModeField& b) {
  double m = 0;
  for (size_t q = 0; q < a.a.size(); ++q) m = std::max(m, std::abs(a.a[q] - b.a[q]));
  return m;
}

std::string tmp_path(const char* name) { return std::string("/tmp/chd_test_evolve_") + name; }

}  // namespace

TEST_CASE("good unknown: inverse, constant density, and the stream relation") {
  ChannelProfile c = couette_constant(129);
  CVec w = bump_data(c, 0.3, 0.7), psi = solve_stream(c, 2, w);
  CVec g = good_unknown(c, w, psi);
  for (int i = 0; i < c.n; ++i) CHECK(std::abs(g[i] - w[i]) < 1e-15);

  ChannelProfile p = bump_profile(0.05, 0.03, 257);
  CVec om(p.n), ps = solve_stream(p, 1, bump_data(p, 0.2, 0.8));
  for (int i = 0; i < p.n; ++i) om[i] = cplx(std::sin(3 * p.y[i]), p.y[i] * p.y[i]);
  CVec back = from_good_unknown(p, good_unknown(p, om, ps), ps);
  double err = 0;
  for (int i = 0; i < p.n; ++i) err = std::max(err, std::abs(back[i] - om[i]));
  CHECK(err < 1e-12);

  // psi from the good unknown satisfies psi'' - k^2 psi = omega
  for (int k : {1, 3}) {
    CVec wt = bump_data(p, 0.3, 0.7);
    CVec q = solve_stream(p, k, wt);
    CVec o = from_good_unknown(p, wt, q), lap = num::d2(q, p.h);
    double res = 0, scale = 0;
    for (int i = 5; i < p.n - 5; ++i) {
      res = std::max(res, std::abs(lap[i] - double(k * k) * q[i] - o[i]));
      scale = std::max(scale, std::abs(o[i]));
    }
    CHECK(res < 1e-5 * scale);
  }
  CHECK(kind_of([&] { good_unknown(p, CVec(3), ps); }) == "ShapeMismatch");
}

TEST_CASE("linear evolution: Couette is a pure phase, zero stays zero, CFL") {
  ChannelProfile c = couette_constant(129);
  CVec w0 = bump_data(c, 0.3, 0.7);
  const int k = 2;
  LinearTrajectory tr = evolve_linear(c, k, w0, {0.0, 0.37, 3.0}, 0.01);
  REQUIRE(tr.t.size() == 3);
  CHECK(tr.t[1] == 0.37);
  for (size_t j = 0; j < tr.t.size(); ++j) {
    CVec exact(c.n);
    for (int i = 0; i < c.n; ++i) exact[i] = w0[i] * std::exp(cplx(0, -k * c.u[i] * tr.t[j]));
    CHECK(rel_l2_diff(tr.omega_tilde[j], exact, c.h) < 1e-8);
  }

  LinearTrajectory z = evolve_linear(c, 1, CVec(c.n, 0.0), {1.0}, 0.05);
  CHECK(l2_norm(z.omega_tilde[0], c.h) == 0);
  CHECK(l2_norm(z.psi[0], c.h) == 0);

  CHECK(kind_of([&] { evolve_linear(c, 4, w0, {1.0}, 0.2); }) == "CFLViolation");
  CHECK(kind_of([&] { evolve_linear(c, 1, w0, {2.0, 1.0}, 0.01); }) == "RangeError");
  CHECK(kind_of([&] { evolve_linear(c, 1, w0, {1.0}, 0); }) == "RangeError");
}

TEST_CASE("linear evolution: time stepping agrees with the spectral representation") {
  ChannelProfile p = bump_profile(0.05, 0.0, 257);
  CVec w0 = bump_data(p, 0.1, 0.9);
  const Vec ts{0.0, 1.0, 5.0, 10.0};
  LinearTrajectory tr = evolve_linear(p, 1, w0, ts, 0.05);
  std::vector<CVec> sp = evolve_linear_spectral(p, 1, w0, ts);
  for (size_t j = 0; j < ts.size(); ++j) CHECK(rel_l2_diff(tr.psi[j], sp[j], p.h) < 1e-3);
  // time step refinement changes little
  LinearTrajectory fine = evolve_linear(p, 1, w0, {10.0}, 0.025);
  CHECK(rel_l2_diff(fine.psi[0], tr.psi[3], p.h) < 1e-6);
}

TEST_CASE("power fits over a window") {
  Vec t, c, s;
  for (int i = 1; i <= 200; ++i) {
    t.push_back(i);
    c.push_back(3.5);
    s.push_back(7 / (double(i) * i));
  }
  CHECK(std::abs(fit_window(t, c, 10, 200).exponent) < 1e-12);
  CHECK(fit_window(t, s, 10, 200).exponent == doctest::Approx(-2).epsilon(1e-10));
  CHECK(kind_of([&] { fit_window(t, s, 20, 150); }) == "WindowTooShort");
  CHECK(kind_of([&] { fit_window(Vec{1, 2, 3}, Vec{1, 1, 1}, 1, 3); }) == "WindowTooShort");

  DiagSeries d;
  d.t = t;
  d.uy = s;
  d.ux_neq = c;
  DampingFit f = damping_rates(d, 10, 200);
  CHECK(f.uy.exponent == doctest::Approx(-2));
  CHECK(std::abs(f.ux_neq.exponent) < 1e-12);
  CHECK(f.samples == 191);
}

TEST_CASE("nonlinear: rest state, reality of the mean, conserved means") {
  ChannelProfile p = bump_profile(0.05, 0.02, 65);
  NonlinearConfig cfg;
  cfg.K = 3;
  cfg.M = 16;
  NonlinearSolver sol(p, cfg);
  FieldState zero = sol.initial_state(sol.spectral().zeros(), sol.spectral().zeros());
  FieldState r = sol.rhs(zero);
  double m = 0;
  for (auto z : r.omega.a) m = std::max(m, std::abs(z));
  for (auto z : r.d.a) m = std::max(m, std::abs(z));
  CHECK(m == 0);

  auto [w, d] = bump_initial_data(p, cfg.K, 1e-2);
  NonlinearRun run = run_nonlinear(p, cfg, sol.initial_state(w, d), 2.0);
  CHECK(run.max_mean_drift < 1e-14);
  for (const FieldState& s : run.samples)
    for (int i = 0; i < p.n; ++i) {
      CHECK(s.omega(0, i).imag() == 0);
      CHECK(s.d(0, i).imag() == 0);
    }
  double drift = 0;
  for (double e : run.diag.energy) drift = std::max(drift, std::abs(e - run.diag.energy[0]) / run.diag.energy[0]);
  CHECK(drift < 1e-5);
  for (size_t i = 1; i < run.diag.t.size(); ++i) CHECK(run.diag.t[i] > run.diag.t[i - 1]);
  CHECK(run.diag.scat_dist[0] == 0);

  CHECK(kind_of([&] { NonlinearConfig b = cfg; b.M = 9; NonlinearSolver bad(p, b); }) == "RangeError");
  CHECK(kind_of([&] { bump_initial_data(p, 1, 1e-3); }) == "RangeError");
}

TEST_CASE("nonlinear: small data follows the linear good-unknown evolution") {
  // independent path: full system with pressure and density at eps = 1e-7
  // against the scalar equation for omega~
  for (double et : {0.02, -0.03}) {
    ChannelProfile p = bump_profile(0.05, et, 129);
    NonlinearConfig cfg;
    cfg.K = 3;
    cfg.M = 16;
    cfg.dt = 0.02;
    NonlinearSolver sol(p, cfg);
    const double eps = 1e-7;
    CVec wt = bump_data(p, 0.3, 0.7);
    CVec om = from_good_unknown(p, wt, solve_stream(p, 1, wt));
    ModeField w = sol.spectral().zeros();
    for (int i = 0; i < p.n; ++i) w(1, i) = eps * om[i];
    FieldState s = sol.initial_state(w, sol.spectral().zeros());
    while (s.t < 4 - 1e-12) s = step_nonlinear(sol, s, cfg.dt);
    ModeField ps = sol.stream(s.omega);
    CVec o1(p.n), p1(p.n);
    for (int i = 0; i < p.n; ++i) {
      o1[i] = s.omega(1, i) / eps;
      p1[i] = ps(1, i) / eps;
    }
    LinearTrajectory tr = evolve_linear(p, 1, wt, {4.0}, 0.02);
    CHECK(rel_l2_diff(good_unknown(p, o1, p1), tr.omega_tilde[0], p.h) < 1e-4);
    CHECK(rel_l2_diff(p1, tr.psi[0], p.h) < 1e-5);
  }
}

TEST_CASE("nonlinear: fourth-order convergence in the time step") {
  ChannelProfile p = bump_profile(0.05, 0.02, 65);
  NonlinearConfig cfg;
  cfg.K = 3;
  cfg.M = 16;
  NonlinearSolver sol(p, cfg);
  auto [w, d] = bump_initial_data(p, cfg.K, 0.05);
  const FieldState s0 = sol.initial_state(w, d);
  auto march = [&](double dt) {
    FieldState s = s0;
    for (int j = 0; j < int(std::lround(0.8 / dt)); ++j) s = step_nonlinear(sol, s, dt);
    return s;
  };
  FieldState a = march(0.1), b = march(0.05), c = march(0.025);
  const double e1 = max_diff(a.omega, b.omega), e2 = max_diff(b.omega, c.omega);
  CHECK(e2 > 0);
  CHECK(e1 / e2 > 12);
  CHECK(e1 / e2 < 20);
}

TEST_CASE("nonlinear: data leaving the band is a SupportBreach") {
  ChannelProfile p = bump_profile(0.05, 0.0, 65);
  NonlinearConfig cfg;
  cfg.K = 2;
  cfg.M = 8;
  NonlinearSolver sol(p, cfg);
  ModeField w = sol.spectral().zeros();
  CVec b = bump_data(p, 0.05, 0.5);
  for (int i = 0; i < p.n; ++i) w(1, i) = 1e-3 * b[i];
  FieldState s = sol.initial_state(w, sol.spectral().zeros());
  CHECK(kind_of([&] { step_nonlinear(sol, s, 0.01); }) == "SupportBreach");
}

TEST_CASE("coordinate change and scattering profile") {
  ChannelProfile p = bump_profile(0.05, 0.0, 129);
  Vec t{0, 0.5, 1, 1.5};
  std::vector<CoordState> cs = coord_map(p, t, std::vector<Vec>(t.size(), Vec(p.n, 0.0)));
  for (const CoordState& c : cs)
    for (int i = 0; i < p.n; ++i) {
      CHECK(c.v[i] == p.u[i]);
      CHECK(c.phi[i] == 0);
      CHECK(c.dtv[i] == 0);
      CHECK(c.h[i] == 0);
      CHECK(c.dyv[i] == p.du[i]);
    }
  // constant mean shear: Phi grows linearly, v moves by chi1 times the mean
  std::vector<Vec> mean(t.size(), Vec(p.n, 0.01));
  cs = coord_map(p, t, mean);
  const int mid = p.n / 2;
  CHECK(cs[3].phi[mid] == doctest::Approx(-0.015));
  CHECK(cs[3].v[mid] == doctest::Approx(p.u[mid] - 0.01 * p.chi1[mid]));
  CHECK(kind_of([&] { coord_map(p, {0, 0}, std::vector<Vec>(2, Vec(p.n))); }) == "RangeError");

  // Couette: the pullback of a linear run does not move
  ChannelProfile c = couette_constant(129);
  CVec w0 = bump_data(c, 0.3, 0.7);
  const int K = 2;
  LinearTrajectory tr = evolve_linear(c, K, w0, {0.0, 1.0, 2.5}, 0.01);
  std::vector<FieldState> samples;
  for (size_t j = 0; j < tr.t.size(); ++j) {
    FieldState s;
    s.t = tr.t[j];
    s.omega = ModeField(K + 1, c.n);
    s.d = ModeField(K + 1, c.n);
    s.phi.assign(c.n, 0.0);
    for (int i = 0; i < c.n; ++i) s.omega(K, i) = tr.omega_tilde[j][i];
    samples.push_back(s);
  }
  std::vector<ModeField> W = scattering_profile(c, samples);
  CHECK(max_diff(W[0], samples[0].omega) == 0);
  CHECK(max_diff(W[2], W[0]) < 1e-8);
}

TEST_CASE("diagnostics CSV and field dumps") {
  DiagSeries d;
  for (int i = 0; i < 3; ++i)
    for (Vec* v : {&d.t, &d.uy, &d.ux_neq, &d.psi_neq, &d.energy, &d.supp_lo, &d.supp_hi, &d.scat_dist})
      v->push_back(0.25 * i);
  const std::string csv = tmp_path("diag.csv");
  write_diagnostics_csv(csv, d);
  std::ifstream in(csv);
  std::string header, line;
  std::getline(in, header);
  CHECK(header == "t,Uy_L2,Ux_neq_L2,psi_neq_L2,energy,supp_lo,supp_hi,scat_dist");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 3);

  FieldState s;
  s.t = 1.75;
  s.omega = ModeField(4, 9);
  s.d = ModeField(4, 9);
  s.phi.assign(9, 0.0);
  for (int k = 0; k < 4; ++k)
    for (int i = 0; i < 9; ++i) {
      s.omega(k, i) = cplx(k + 0.1 * i, -i);
      s.d(k, i) = cplx(std::sqrt(2.0) * k, 1e-300 * i);
      s.phi[i] = 0.5 * i;
    }
  const std::string dump = tmp_path("state.bin");
  write_field_dump(dump, s);
  FieldState r = read_field_dump(dump);
  CHECK(r.t == s.t);
  CHECK(max_diff(r.omega, s.omega) == 0);
  CHECK(max_diff(r.d, s.d) == 0);
  CHECK(r.phi == s.phi);

  {
    std::ofstream bad(tmp_path("bad.bin"), std::ios::binary);
    bad << "NOPE and more bytes than a header";
  }
  CHECK(kind_of([&] { read_field_dump(tmp_path("bad.bin")); }) == "ParseError");
  CHECK(kind_of([&] { read_field_dump("/nonexistent/dir/x.bin"); }) == "IOError");
  CHECK(kind_of([&] { write_diagnostics_csv("/nonexistent/dir/x.csv", d); }) == "IOError");
  std::remove(csv.c_str());
  std::remove(dump.c_str());
  std::remove(tmp_path("bad.bin").c_str());
}
