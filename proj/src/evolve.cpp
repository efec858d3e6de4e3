#include "chd/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "chd/numerics.hpp"
#include "chd/rayleigh.hpp"

namespace chd {

CVec good_unknown(const ChannelProfile& p, const CVec& omega, const CVec& psi) {
  if (int(omega.size()) != p.n || int(psi.size()) != p.n) fail("ShapeMismatch", "fields must live on the y grid");
  CVec dpsi = num::d1(psi, p.h), out(p.n);
  for (int i = 0; i < p.n; ++i) {
    const double th = p.theta[i];
    out[i] = omega[i] / th - p.dtheta[i] / (th * th) * dpsi[i];
  }
  return out;
}

CVec from_good_unknown(const ChannelProfile& p, const CVec& omega_tilde, const CVec& psi) {
  if (int(omega_tilde.size()) != p.n || int(psi.size()) != p.n) fail("ShapeMismatch", "fields must live on the y grid");
  CVec dpsi = num::d1(psi, p.h), out(p.n);
  for (int i = 0; i < p.n; ++i) out[i] = p.theta[i] * omega_tilde[i] + p.dtheta[i] / p.theta[i] * dpsi[i];
  return out;
}

double l2_norm(const CVec& f, double h) {
  static thread_local Vec w;
  if (w.size() != f.size()) w = num::quad_weights(int(f.size()) - 1, h);
  double s = 0;
  for (size_t i = 0; i < f.size(); ++i) s += w[i] * std::norm(f[i]);
  return std::sqrt(s);
}

double rel_l2_diff(const CVec& a, const CVec& b, double h) {
  if (a.size() != b.size()) fail("ShapeMismatch", "profiles differ in length");
  CVec d(a.size());
  for (size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  const double nb = l2_norm(b, h);
  return nb == 0 ? l2_norm(d, h) : l2_norm(d, h) / nb;
}

namespace {

void check_times(const Vec& times) {
  for (size_t i = 0; i < times.size(); ++i)
    if (!(times[i] >= 0) || (i > 0 && times[i] < times[i - 1])) fail("RangeError", "snapshot times must be increasing and >= 0");
}

bool finite(const CVec& v) {
  for (auto z : v)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  return true;
}

double max_abs(const Vec& v) {
  double m = 0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

LinearTrajectory evolve_linear(const ChannelProfile& p, int k, const CVec& omega_tilde0, const Vec& times, double dt) {
  if (int(omega_tilde0.size()) != p.n) fail("ShapeMismatch", "initial data must live on the y grid");
  check_times(times);
  if (!(dt > 0)) fail("RangeError", "dt must be positive");
  const double umax = max_abs(p.u);
  if (k != 0 && dt > 0.5 / (std::abs(k) * umax))
    fail("CFLViolation", "dt exceeds 0.5 / (|k| max|u|) = " + std::to_string(0.5 / (std::abs(k) * umax)));

  LinearTrajectory tr;
  tr.k = k;
  const int n = p.n;
  const Vec& shear = p.shear_coef();
  StreamSolver solver(p, k == 0 ? 1 : k);
  auto stream = [&](const CVec& w) { return k == 0 ? CVec(n, 0.0) : solver.solve(w); };
  const cplx ik(0, k);
  auto rhs = [&](const CVec& w) {
    CVec psi = stream(w), out(n);
    for (int i = 0; i < n; ++i) out[i] = -ik * (p.u[i] * w[i] - shear[i] * psi[i]);
    return out;
  };
  auto rk4 = [&](CVec& w, double h) {
    CVec k1 = rhs(w), tmp(n);
    for (int i = 0; i < n; ++i) tmp[i] = w[i] + 0.5 * h * k1[i];
    CVec k2 = rhs(tmp);
    for (int i = 0; i < n; ++i) tmp[i] = w[i] + 0.5 * h * k2[i];
    CVec k3 = rhs(tmp);
    for (int i = 0; i < n; ++i) tmp[i] = w[i] + h * k3[i];
    CVec k4 = rhs(tmp);
    for (int i = 0; i < n; ++i) w[i] += h / 6 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  };

  CVec w = omega_tilde0;
  double t = 0;
  for (double target : times) {
    while (t < target) {
      double h = dt;
      // land on the snapshot time; absorb a sliver into the last step
      if (t + h > target || target - (t + h) < 1e-9 * dt) h = target - t;
      rk4(w, h);
      t = t + h >= target - 1e-12 * std::max(1.0, target) ? target : t + h;
      ++tr.steps;
    }
    if (!finite(w)) fail("NonFinite", "linear evolution produced a non-finite value");
    tr.t.push_back(target);
    tr.omega_tilde.push_back(w);
    tr.psi.push_back(stream(w));
  }
  return tr;
}

std::vector<CVec> evolve_linear_spectral(const ChannelProfile& p, int k, const CVec& omega_tilde0, const Vec& times) {
  if (int(omega_tilde0.size()) != p.n) fail("ShapeMismatch", "initial data must live on the y grid");
  check_times(times);
  HomSolutionTable tab = hom_table(p, k);
  SpectralFunctions sf = j_functions(p, tab);
  EKernel ek = build_e_kernel(p, tab, sf);
  Representation rep = build_representation(p, tab, sf, ek, omega_tilde0);
  std::vector<CVec> out;
  for (double t : times) out.push_back(rep.psi(t));
  return out;
}

// ---------------------------------------------------------------------------

NonlinearSolver::NonlinearSolver(const ChannelProfile& p, const NonlinearConfig& cfg)
    : p_(p), cfg_(cfg), sp_(cfg.K, cfg.M, p.n) {
  if (cfg.K < 1) fail("RangeError", "K must be >= 1");
  if (cfg.M <= 3 * cfg.K) fail("RangeError", "M must exceed 3K for dealiased products");
  if (!(cfg.margin >= 0) || !(cfg.support_tol > 0) || !(cfg.sample_dt > 0) || !(cfg.cfl > 0))
    fail("RangeError", "margin >= 0, support_tol, sample_dt, cfl > 0");
  Vec one(p.n, 1.0), zero(p.n, 0.0);
  poisson_.resize(cfg.K + 1);
  for (int k = 0; k <= cfg.K; ++k) poisson_[k] = SturmOperator(one, zero, one, k, Bc::dirichlet);
  pressure_ops_ = pressure_operators(p, cfg.K);
  quad_ = num::quad_weights(p.n - 1, p.h);
}

double NonlinearSolver::default_dt() const {
  return cfg_.dt > 0 ? cfg_.dt : cfg_.cfl / (cfg_.K * max_abs(p_.u));
}

FieldState NonlinearSolver::initial_state(const ModeField& omega, const ModeField& d) const {
  const int K = cfg_.K, n = p_.n;
  if (omega.cols != n || d.cols != n || omega.rows != K + 1 || d.rows != K + 1)
    fail("ShapeMismatch", "initial fields must be (K+1) x n_y");
  FieldState s;
  s.omega = omega;
  s.d = d;
  for (int i = 0; i < n; ++i) {
    s.omega(0, i) = s.omega(0, i).real();
    s.d(0, i) = s.d(0, i).real();
  }
  s.phi.assign(n, 0.0);
  return s;
}

ModeField NonlinearSolver::stream(const ModeField& omega) const {
  const int n = p_.n;
  ModeField psi = sp_.zeros();
  num::parallel_for(cfg_.K + 1, [&](int k) {
    CVec f(n);
    for (int i = 0; i < n; ++i) f[i] = -omega(k, i);
    poisson_[k].solve(f);
    std::copy(f.begin(), f.end(), psi.row(k));
  });
  return psi;
}

FieldState NonlinearSolver::rhs(const FieldState& s) const {
  const int K = cfg_.K, n = p_.n;
  const double h = p_.h;
  const ModeField& om = s.omega;
  const ModeField& d = s.d;
  ModeField psi = stream(om);
  ModeField psi_y = sp_.dy(psi, h);
  ModeField psi_x = sp_.zeros(), psi_xx = sp_.zeros(), psi_xy = sp_.zeros(), psi_yy = sp_.zeros();
  for (int k = 0; k <= K; ++k)
    for (int i = 0; i < n; ++i) {
      const cplx ik(0, k);
      psi_x(k, i) = ik * psi(k, i);
      psi_xx(k, i) = -double(k * k) * psi(k, i);
      psi_xy(k, i) = ik * psi_y(k, i);
      psi_yy(k, i) = om(k, i) + double(k * k) * psi(k, i);
    }
  PhysField ux = sp_.to_phys(psi_y), uy = sp_.to_phys(psi_x);
  for (double& v : ux.a) v = -v;
  PhysField pxx = sp_.to_phys(psi_xx), pxy = sp_.to_phys(psi_xy), pyy = sp_.to_phys(psi_yy);

  // pressure: div((theta + d) grad P) = -2(psi_xy^2 - psi_xx psi_yy) - 2u' psi_xx
  PhysField q(n, cfg_.M);
  Vec accel(n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < cfg_.M; ++j) {
      const size_t a = size_t(i) * cfg_.M + j;
      q.a[a] = -2 * (pxy.a[a] * pxy.a[a] - pxx.a[a] * pyy.a[a]);
      // x-mean of U.grad U^y = U^x psi_xx + U^y psi_xy
      accel[i] += (ux.a[a] * pxx.a[a] + uy.a[a] * pxy.a[a]) / cfg_.M;
    }
  ModeField prhs = sp_.to_modes(q);
  for (int k = 0; k <= K; ++k)
    for (int i = 0; i < n; ++i) prhs(k, i) += -2 * p_.du[i] * psi_xx(k, i);
  PressureResult pr = solve_pressure(p_, sp_, d, prhs, accel, cfg_.pressure_tol, 100, &pressure_ops_);
  const ModeField& P = pr.P;
  ModeField P_y = sp_.dy(P, h);
  ModeField P_x = sp_.dx(P);
  for (int i = 0; i < n; ++i) {
    P_y(0, i) = P(0, i);  // row 0 already holds d_y P0
    P_x(0, i) = 0.0;
  }

  PhysField wx = sp_.to_phys(sp_.dx(om)), wy = sp_.to_phys(sp_.dy(om, h));
  PhysField dx = sp_.to_phys(sp_.dx(d)), dy = sp_.to_phys(sp_.dy(d, h));
  PhysField Px = sp_.to_phys(P_x), Py = sp_.to_phys(P_y);
  PhysField nw(n, cfg_.M), nd(n, cfg_.M);
  for (size_t a = 0; a < nw.a.size(); ++a) {
    nw.a[a] = -Py.a[a] * dx.a[a] + Px.a[a] * dy.a[a] - (ux.a[a] * wx.a[a] + uy.a[a] * wy.a[a]);
    nd.a[a] = -(ux.a[a] * dx.a[a] + uy.a[a] * dy.a[a]);
  }
  FieldState out;
  out.t = 1;
  out.omega = sp_.to_modes(nw);
  out.d = sp_.to_modes(nd);
  for (int k = 0; k <= K; ++k)
    for (int i = 0; i < n; ++i) {
      const cplx ik(0, k);
      out.omega(k, i) += -ik * p_.u[i] * om(k, i) + p_.d2u[i] * psi_x(k, i) + p_.dtheta[i] * ik * P(k, i);
      out.d(k, i) += -ik * p_.u[i] * d(k, i) - p_.dtheta[i] * psi_x(k, i);
    }
  out.phi.resize(n);
  for (int i = 0; i < n; ++i) out.phi[i] = -psi_y(0, i).real();
  return out;
}

namespace {

// a + c b, all fields
FieldState axpy(const FieldState& a, double c, const FieldState& b) {
  FieldState r = a;
  r.t = a.t + c * b.t;
  for (size_t q = 0; q < r.omega.a.size(); ++q) {
    r.omega.a[q] += c * b.omega.a[q];
    r.d.a[q] += c * b.d.a[q];
  }
  for (size_t i = 0; i < r.phi.size(); ++i) r.phi[i] += c * b.phi[i];
  return r;
}

}  // namespace

FieldState NonlinearSolver::step(const FieldState& s, double dt, double tol) const {
  FieldState k1 = rhs(s);
  FieldState k2 = rhs(axpy(s, dt / 2, k1));
  FieldState k3 = rhs(axpy(s, dt / 2, k2));
  FieldState k4 = rhs(axpy(s, dt, k3));
  FieldState r = s;
  for (size_t q = 0; q < r.omega.a.size(); ++q) {
    r.omega.a[q] += dt / 6 * (k1.omega.a[q] + 2.0 * k2.omega.a[q] + 2.0 * k3.omega.a[q] + k4.omega.a[q]);
    r.d.a[q] += dt / 6 * (k1.d.a[q] + 2.0 * k2.d.a[q] + 2.0 * k3.d.a[q] + k4.d.a[q]);
  }
  for (size_t i = 0; i < r.phi.size(); ++i) r.phi[i] += dt / 6 * (k1.phi[i] + 2 * k2.phi[i] + 2 * k3.phi[i] + k4.phi[i]);
  r.t = s.t + dt;
  // mean rows stay real
  for (int i = 0; i < p_.n; ++i) {
    r.omega(0, i) = r.omega(0, i).real();
    r.d(0, i) = r.d(0, i).real();
  }
  for (size_t q = 0; q < r.omega.a.size(); ++q)
    if (!std::isfinite(std::abs(r.omega.a[q])) || !std::isfinite(std::abs(r.d.a[q])))
      fail("NonFinite", "nonlinear step produced a non-finite value");
  auto [lo, hi] = support(r, tol);
  const double band_lo = 2 * p_.kappa0 - cfg_.margin, band_hi = 1 - 2 * p_.kappa0 + cfg_.margin;
  if (lo < band_lo || hi > band_hi)
    fail("SupportBreach", "support [" + std::to_string(lo) + ", " + std::to_string(hi) + "] left the band at t = " +
                              std::to_string(r.t));
  return r;
}

double NonlinearSolver::energy(const FieldState& s) const {
  const int n = p_.n, M = cfg_.M;
  ModeField psi = stream(s.omega);
  PhysField ux = sp_.to_phys(sp_.dy(psi, p_.h)), uy = sp_.to_phys(sp_.dx(psi)), d = sp_.to_phys(s.d);
  double e = 0;
  for (int i = 0; i < n; ++i) {
    double row = 0;
    for (int j = 0; j < M; ++j) {
      const size_t a = size_t(i) * M + j;
      const double vx = p_.u[i] - ux.a[a], vy = uy.a[a];
      row += (vx * vx + vy * vy) / (p_.theta[i] + d.a[a]);
    }
    e += quad_[i] * row / M;
  }
  return 0.5 * 2 * kPi * e;
}

std::pair<double, double> NonlinearSolver::support(const FieldState& s, double tol) const {
  PhysField w = sp_.to_phys(s.omega), d = sp_.to_phys(s.d);
  double lo = NAN, hi = NAN;
  for (int i = 0; i < p_.n; ++i) {
    double m = 0;
    for (int j = 0; j < cfg_.M; ++j) m = std::max({m, std::abs(w(i, j)), std::abs(d(i, j))});
    if (m > tol) {
      if (std::isnan(lo)) lo = p_.y[i];
      hi = p_.y[i];
    }
  }
  return {lo, hi};
}

ModeField NonlinearSolver::pullback(const FieldState& s) const {
  ModeField W = s.omega;
  for (int k = 1; k <= cfg_.K; ++k)
    for (int i = 0; i < p_.n; ++i) W(k, i) *= std::exp(cplx(0, k * (s.t * p_.u[i] + s.phi[i])));
  return W;
}

double NonlinearSolver::norm(const ModeField& f, bool skip_mean) const {
  double s = 0;
  for (int k = skip_mean ? 1 : 0; k < f.rows; ++k) {
    double r = 0;
    for (int i = 0; i < f.cols; ++i) r += quad_[i] * std::norm(f(k, i));
    s += (k == 0 ? 1.0 : 2.0) * r;
  }
  return std::sqrt(2 * kPi * s);
}

FieldState step_nonlinear(const NonlinearSolver& solver, const FieldState& s, double dt) {
  double scale = 0;
  for (size_t q = 0; q < s.omega.a.size(); ++q) scale = std::max({scale, std::abs(s.omega.a[q]), std::abs(s.d.a[q])});
  return solver.step(s, dt, solver.config().support_tol * std::max(scale, 1e-300));
}

std::pair<ModeField, ModeField> bump_initial_data(const ChannelProfile& p, int K, double eps, int k_lo) {
  if (k_lo < 1 || K < k_lo + 1) fail("RangeError", "bump data uses modes k_lo and k_lo + 1");
  ModeField w(K + 1, p.n), d(K + 1, p.n);
  Bump b{3 * p.kappa0, 1 - 3 * p.kappa0};
  Bump c{3 * p.kappa0 + 0.05, 1 - 3 * p.kappa0 - 0.02};
  for (int i = 0; i < p.n; ++i) {
    const double B = b.eval(p.y[i])[0], C = c.eval(p.y[i])[0];
    // real field eps B (cos jx + 0.5 sin (j+1)x) and eps C cos(jx + 0.3), j = k_lo
    w(k_lo, i) = 0.5 * eps * B;
    w(k_lo + 1, i) = cplx(0, -0.25) * eps * B;
    d(k_lo, i) = 0.5 * eps * C * std::exp(cplx(0, 0.3));
  }
  return {w, d};
}

NonlinearRun run_nonlinear(const ChannelProfile& p, const NonlinearConfig& cfg, const FieldState& init, double T,
                           bool keep_samples) {
  if (!(T > 0)) fail("RangeError", "T must be positive");
  NonlinearSolver solver(p, cfg);
  NonlinearRun run;
  run.dt = solver.default_dt();
  const Spectral& sp = solver.spectral();
  double scale = 0;
  for (size_t q = 0; q < init.omega.a.size(); ++q)
    scale = std::max({scale, std::abs(init.omega.a[q]), std::abs(init.d.a[q])});
  const double tol = cfg.support_tol * std::max(scale, 1e-300);

  const Vec quad = num::quad_weights(p.n - 1, p.h);
  auto mean_mass = [&](const FieldState& s) {
    double a = 0, b = 0;
    for (int i = 0; i < p.n; ++i) {
      const double w = quad[i];
      a += w * s.omega(0, i).real();
      b += w * s.d(0, i).real();
    }
    return std::make_pair(a, b);
  };
  const auto mass0 = mean_mass(init);
  std::vector<ModeField> W;
  DiagSeries& dg = run.diag;
  Vec ux_mean_first;
  std::vector<Vec> ux_means;
  auto record = [&](const FieldState& s) {
    ModeField psi = solver.stream(s.omega);
    ModeField psi_y = sp.dy(psi, p.h);
    ModeField uyf = sp.dx(psi);
    dg.t.push_back(s.t);
    dg.uy.push_back(solver.norm(uyf));
    dg.ux_neq.push_back(solver.norm(psi_y, true));
    dg.psi_neq.push_back(solver.norm(psi, true));
    dg.energy.push_back(solver.energy(s));
    auto [lo, hi] = solver.support(s, tol);
    dg.supp_lo.push_back(lo);
    dg.supp_hi.push_back(hi);
    Vec mean(p.n), ux0(p.n);
    for (int i = 0; i < p.n; ++i) {
      mean[i] = psi_y(0, i).real();
      ux0[i] = -mean[i];
    }
    dg.mean_dy_psi.push_back(mean);
    ux_means.push_back(ux0);
    W.push_back(solver.pullback(s));
    const size_t i = W.size() - 1;
    ModeField diff = W[i];
    for (size_t q = 0; q < diff.a.size(); ++q) diff.a[q] -= W[i / 2].a[q];
    dg.scat_dist.push_back(solver.norm(diff));
    const auto m = mean_mass(s);
    run.max_mean_drift = std::max({run.max_mean_drift, std::abs(m.first - mass0.first), std::abs(m.second - mass0.second)});
    if (keep_samples) run.samples.push_back(s);
  };

  FieldState s = init;
  record(s);
  const int nsamples = int(std::floor(T / cfg.sample_dt + 1e-9));
  for (int j = 1; j <= nsamples + (std::abs(nsamples * cfg.sample_dt - T) > 1e-9 ? 1 : 0); ++j) {
    const double target = std::min(T, j * cfg.sample_dt);
    while (s.t < target - 1e-12) {
      double h = run.dt;
      if (s.t + h > target || target - (s.t + h) < 1e-9 * run.dt) h = target - s.t;
      s = solver.step(s, h, tol);
      if (std::abs(s.t - target) < 1e-12) s.t = target;
      ++run.steps;
    }
    record(s);
  }
  // distance of the x-mean of U^x from its final value
  const Vec& last = ux_means.back();
  for (const Vec& v : ux_means) {
    CVec diff(p.n);
    for (int i = 0; i < p.n; ++i) diff[i] = v[i] - last[i];
    dg.ux_mean.push_back(l2_norm(diff, p.h));
  }
  return run;
}

// ---------------------------------------------------------------------------

std::vector<CoordState> coord_map(const ChannelProfile& p, const Vec& t, const std::vector<Vec>& mean_dy_psi) {
  if (t.size() != mean_dy_psi.size()) fail("ShapeMismatch", "one mean profile per time");
  const int n = p.n;
  std::vector<CoordState> out(t.size());
  Vec acc(n, 0.0);
  for (size_t s = 0; s < t.size(); ++s) {
    if (int(mean_dy_psi[s].size()) != n) fail("ShapeMismatch", "mean profiles live on the y grid");
    if (s > 0) {
      if (!(t[s] > t[s - 1])) fail("RangeError", "times must increase");
      for (int i = 0; i < n; ++i) acc[i] += 0.5 * (t[s] - t[s - 1]) * (mean_dy_psi[s][i] + mean_dy_psi[s - 1][i]);
    }
    CoordState& c = out[s];
    c.t = t[s];
    c.v.resize(n);
    c.phi.resize(n);
    Vec corr(n);
    for (int i = 0; i < n; ++i) {
      c.phi[i] = -acc[i];
      // the t -> 0 limit of the time average is the instantaneous mean
      const double avg = t[s] > 0 ? acc[i] / t[s] : mean_dy_psi[s][i];
      corr[i] = p.chi1[i] * avg;
      c.v[i] = p.u[i] - corr[i];
    }
    // h from the correction alone, so stencil error in u' does not enter
    c.h = num::d1(corr, p.h);
    c.dyv.resize(n);
    for (int i = 0; i < n; ++i) {
      c.h[i] = -c.h[i];
      c.dyv[i] = p.du[i] + c.h[i];
    }
  }
  for (size_t s = 0; s < t.size(); ++s) {
    CoordState& c = out[s];
    c.dtv.assign(n, 0.0);
    if (t.size() < 2) continue;
    const size_t a = s == 0 ? 0 : s - 1, b = s + 1 == t.size() ? s : s + 1;
    for (int i = 0; i < n; ++i) c.dtv[i] = (out[b].v[i] - out[a].v[i]) / (t[b] - t[a]);
  }
  return out;
}

std::vector<ModeField> scattering_profile(const ChannelProfile& p, const std::vector<FieldState>& samples) {
  std::vector<ModeField> out;
  for (const FieldState& s : samples) {
    if (s.omega.cols != p.n || int(s.phi.size()) != p.n) fail("ShapeMismatch", "sample does not match the profile grid");
    ModeField W = s.omega;
    for (int k = 1; k < W.rows; ++k)
      for (int i = 0; i < p.n; ++i) W(k, i) *= std::exp(cplx(0, k * (s.t * p.u[i] + s.phi[i])));
    out.push_back(std::move(W));
  }
  return out;
}

num::PowerFit fit_window(const Vec& t, const Vec& y, double t_lo, double t_hi) {
  if (t.size() != y.size()) fail("ShapeMismatch", "series lengths differ");
  Vec tt, yy;
  for (size_t i = 0; i < t.size(); ++i)
    if (t[i] >= t_lo && t[i] <= t_hi && t[i] > 0) {
      tt.push_back(t[i]);
      yy.push_back(y[i]);
    }
  if (tt.size() < 10 || tt.back() < 10 * tt.front())
    fail("WindowTooShort", "need >= 10 samples spanning a decade in [" + std::to_string(t_lo) + ", " +
                               std::to_string(t_hi) + "]");
  for (double v : yy)
    if (!(v > 0)) fail("RangeError", "power fits need positive values");
  return num::fit_power(tt, yy);
}

DampingFit damping_rates(const DiagSeries& d, double t_lo, double t_hi) {
  DampingFit f;
  f.t_lo = t_lo;
  f.t_hi = t_hi;
  f.uy = fit_window(d.t, d.uy, t_lo, t_hi);
  f.ux_neq = fit_window(d.t, d.ux_neq, t_lo, t_hi);
  for (double t : d.t) f.samples += t >= t_lo && t <= t_hi;
  // the last sample is the reference, so it is left out
  if (d.ux_mean.size() == d.t.size() && d.t.size() > 1) {
    Vec t(d.t.begin(), d.t.end() - 1), y(d.ux_mean.begin(), d.ux_mean.end() - 1);
    try {
      f.ux_mean = fit_window(t, y, t_lo, std::min(t_hi, t.back()));
    } catch (const Error&) {
      f.ux_mean = num::PowerFit{NAN, NAN, NAN};
    }
  }
  return f;
}

void write_diagnostics_csv(const std::string& path, const DiagSeries& d) {
  std::ofstream out(path);
  if (!out) fail("IOError", "cannot open " + path);
  out << "t,Uy_L2,Ux_neq_L2,psi_neq_L2,energy,supp_lo,supp_hi,scat_dist\n";
  char buf[512];
  for (size_t i = 0; i < d.t.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", d.t[i], d.uy[i], d.ux_neq[i],
                  d.psi_neq[i], d.energy[i], d.supp_lo[i], d.supp_hi[i], d.scat_dist[i]);
    out << buf;
  }
  if (!out) fail("IOError", "write failed for " + path);
}

void write_field_dump(const std::string& path, const FieldState& s) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("IOError", "cannot open " + path);
  out.write("CHDF", 4);
  const int32_t K = s.omega.rows - 1, n = s.omega.cols;
  out.write(reinterpret_cast<const char*>(&s.t), sizeof(double));
  out.write(reinterpret_cast<const char*>(&K), 4);
  out.write(reinterpret_cast<const char*>(&n), 4);
  for (const ModeField* f : {&s.omega, &s.d})
    out.write(reinterpret_cast<const char*>(f->a.data()), sizeof(cplx) * f->a.size());
  if (int(s.phi.size()) == n) out.write(reinterpret_cast<const char*>(s.phi.data()), sizeof(double) * n);
  if (!out) fail("IOError", "write failed for " + path);
}

FieldState read_field_dump(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("IOError", "cannot open " + path);
  char magic[4];
  int32_t K = 0, n = 0;
  FieldState s;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&s.t), sizeof(double));
  in.read(reinterpret_cast<char*>(&K), 4);
  in.read(reinterpret_cast<char*>(&n), 4);
  if (!in || std::memcmp(magic, "CHDF", 4) != 0 || K < 0 || n < 2 || K > 100000 || n > 1000000)
    fail("ParseError", path + " is not a field dump");
  s.omega = ModeField(K + 1, n);
  s.d = ModeField(K + 1, n);
  for (ModeField* f : {&s.omega, &s.d}) in.read(reinterpret_cast<char*>(f->a.data()), sizeof(cplx) * f->a.size());
  if (!in) fail("ParseError", path + " is truncated");
  s.phi.assign(n, 0.0);
  in.read(reinterpret_cast<char*>(s.phi.data()), sizeof(double) * n);
  if (in.gcount() != 0 && in.gcount() != std::streamsize(sizeof(double)) * n) fail("ParseError", path + " has a partial Phi block");
  return s;
}

}  // namespace chd
