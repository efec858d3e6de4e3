#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <random>

#include "chd/lab.hpp"
#include "chd/numerics.hpp"
#include "chd/rayleigh.hpp"
#include "chd/sturm.hpp"
#include "chd/waveop.hpp"

namespace chd {

using nlohmann::json;

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names{"phi1-oracle",      "spectral-scan",  "wave-identities", "green-audit",
                                              "multiplier-audit", "linear-damping", "cross-oracle",    "nonlinear-demo"};
  return names;
}

LabConfig default_config(const std::string& scenario) {
  const auto& names = scenario_names();
  if (std::find(names.begin(), names.end(), scenario) == names.end())
    fail("RangeError", "unknown scenario '" + scenario + "'");
  LabConfig c;
  c.scenario = scenario;
  ProfileSpec bump;
  bump.family = "couette_bump";
  bump.eps_u = 0.05;
  if (scenario == "phi1-oracle") {
    c.ks = {1, 3, 8};
  } else if (scenario == "spectral-scan") {
    c.profile = bump;
    c.ks = {1, 2, 4, 8};
  } else if (scenario == "wave-identities") {
    c.profile = bump;
    c.ks = {1, 2, 3};
  } else if (scenario == "green-audit") {
    c.profile = bump;
    c.profile.eps_theta = 0.02;
    c.ks = {1, 2, 5};
  } else if (scenario == "linear-damping" || scenario == "cross-oracle") {
    c.profile = bump;
  } else if (scenario == "nonlinear-demo") {
    // eps_theta = eps_u would make u'/theta constant and switch off the linear mixing term
    c.profile = bump;
    c.profile.eps_theta = 0.02;
  }
  return c;
}

namespace {

bool within(double v, double lo, double hi) { return std::isfinite(v) && v >= lo && v <= hi; }

struct Builder {
  ScenarioResult r;
  void check(int criterion, const std::string& name, bool pass, double value, double bound,
             const std::string& detail = "") {
    r.checks.push_back({criterion, name, pass, value, bound, detail});
  }
  // value <= bound
  void at_most(int criterion, const std::string& name, double value, double bound, const std::string& detail = "") {
    check(criterion, name, std::isfinite(value) && value <= bound, value, bound, detail);
  }
  void at_least(int criterion, const std::string& name, double value, double bound, const std::string& detail = "") {
    check(criterion, name, std::isfinite(value) && value >= bound, value, bound, detail);
  }
};

std::string ks_name(const std::string& what, int k) { return what + " k=" + std::to_string(k); }

CVec bump_on(const ChannelProfile& p, double a, double b) {
  Bump B{a, b};
  CVec w(p.n);
  for (int i = 0; i < p.n; ++i) w[i] = B.eval(p.y[i])[0];
  return w;
}

ProfileSpec with_n(ProfileSpec s, int n) {
  s.n_y = n;
  return s;
}

// ---- criterion 1 ----

double couette_phi1_error(int n, int k) {
  ChannelProfile c = couette_constant(n);
  HomSolutionTable t = hom_table(c, k);
  double e = 0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double x = std::abs(k) * (c.y[i] - c.y[j]);
      const double ex = x == 0 ? 1.0 : std::sinh(x) / x;
      e = std::max(e, std::abs(t.phi1(j, i) - ex) / ex);
    }
  return e;
}

ScenarioResult phi1_oracle(const LabConfig& c) {
  Builder b;
  const int n = c.profile.n_y;
  // n against twice the spacing, or against half the spacing when n is already the coarsest grid
  const int coarse = (n + 1) / 2 >= 33 ? (n + 1) / 2 : n, fine = coarse == n ? 2 * n - 1 : n;
  Table t{"phi1_errors", {"k", "n_y", "max_rel_err"}, {}};
  for (int k : c.ks) {
    const double ec = couette_phi1_error(coarse, k), ef = couette_phi1_error(fine, k);
    const double order = std::log2(ec / ef);
    t.rows.push_back({double(k), double(coarse), ec});
    t.rows.push_back({double(k), double(fine), ef});
    b.at_most(1, ks_name("phi1 max rel error vs sinh closed form", k), fine == n ? ef : ec, 1e-6,
              "n_y=" + std::to_string(n));
    b.at_least(1, ks_name("phi1 convergence order", k), order, 3.5,
               std::to_string(coarse) + " -> " + std::to_string(fine));
    b.r.metrics["order"][std::to_string(k)] = order;
    b.r.metrics["max_rel_err"][std::to_string(k)] = fine == n ? ef : ec;
  }
  b.r.tables.push_back(std::move(t));
  return b.r;
}

// ---- criteria 2 and 9 ----

ScenarioResult spectral_scan(const LabConfig& c) {
  Builder b;
  ChannelProfile p = build_profile(c.profile), q = couette_constant(c.profile.n_y);
  StabilityReport rq = spectral_assumption_check(q, c.kmax), rp = spectral_assumption_check(p, c.kmax);
  b.check(9, "couette_constant stable for |k| <= " + std::to_string(c.kmax), rq.verdict == "stable", rq.floor, 0,
          rq.verdict);
  b.check(9, p.spec.family + " stable for |k| <= " + std::to_string(c.kmax), rp.verdict == "stable", rp.floor, 0,
          rp.verdict);
  b.check(9, "normalized indicator floor positive", rp.floor > 0 && std::isfinite(rp.floor), rp.floor, 0);
  Table st{"stability",
           {"k", "couette_floor", "indicator_floor", "wronskian_floor", "limit_mismatch", "embedded_candidates", "stable"},
           {}};
  for (size_t i = 0; i < rp.per_k.size(); ++i) {
    const KStability& s = rp.per_k[i];
    st.rows.push_back({double(s.k), rq.per_k[i].indicator_floor, s.indicator_floor, s.wronskian_floor, s.limit_mismatch,
                       double(s.embedded_candidates.size()), s.stable ? 1.0 : 0.0});
  }
  b.r.tables.push_back(std::move(st));
  b.r.metrics["indicator_floor"] = rp.floor;
  b.r.metrics["verdict"] = rp.verdict;

  Table bt{"hom_bounds", {"k", "min_phi1", "monotone_violations", "c_growth", "c_log_deriv", "c_excess", "c_excess_upper"}, {}};
  Vec g, d, e;
  for (int k : c.ks) {
    HomSolutionTable t = hom_table(p, k);
    HomBounds hb = hom_bounds(p, t);
    b.check(2, ks_name("phi1 >= 1 and (y - y') d_y phi1 >= 0 pointwise", k), hb.monotone_violations == 0,
            double(hb.monotone_violations), 0);
    bt.rows.push_back({double(k), hb.min_phi1, double(hb.monotone_violations), hb.c_growth, hb.c_log_deriv, hb.c_excess,
                       hb.c_excess_upper});
    g.push_back(hb.c_growth);
    d.push_back(hb.c_log_deriv);
    e.push_back(hb.c_excess);
    if (k == c.ks.front()) {
      auto sf = std::make_shared<SpectralFunctions>(j_functions(p, t));
      b.r.files.push_back({"spectral_k" + std::to_string(k) + ".csv",
                           [sf](const std::string& path) { write_spectral_csv(path, *sf); }});
    }
  }
  auto spread = [](const Vec& v) {
    auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *hi / *lo;
  };
  if (!c.ks.empty()) {
    b.at_most(2, "growth constant spread across k", spread(g), 2);
    b.at_most(2, "log-derivative constant spread across k", spread(d), 2);
    b.at_most(2, "excess constant spread across k", spread(e), 2);
  }
  b.r.tables.push_back(std::move(bt));
  return b.r;
}

// ---- criterion 3 ----

double identity_deviation(const WaveKernelSet& w) {
  double m = 0;
  for (int i = 0; i < w.n; ++i)
    for (int j = 0; j < w.n; ++j) {
      const double id = i == j ? 1.0 : 0.0;
      m = std::max({m, std::abs(w.D(i, j) - id), std::abs(w.D1(i, j) - id), std::abs(w.Dinv(i, j) - id)});
    }
  return m;
}

ScenarioResult wave_identities(const LabConfig& c) {
  Builder b;
  const int n = c.profile.n_y, n2 = 2 * n - 1, n4 = 4 * n - 3;
  ChannelProfile q = couette_constant(n);
  ChannelProfile p = build_profile(c.profile), p2 = build_profile(with_n(c.profile, n2)),
                 p4 = build_profile(with_n(c.profile, n4));
  Table t{"wave_residuals",
          {"k", "intertwine", "intertwine_fine", "duality", "inverse", "n_inverse", "d_min", "d_max", "fitted_c"},
          {}};
  for (int k : c.ks) {
    b.at_most(3, ks_name("couette D, D1, Dinv equal the identity", k), identity_deviation(build_wave_set(q, k)), 0);
    double ra, rb, dual, inv, dmin, dmax, fc;
    {
      WaveKernelSet w = build_wave_set(p, k);
      ra = intertwine_residual(p, w, bump_on(p, 0.3, 0.7));
      CVec g(p.n);
      for (int i = 0; i < p.n; ++i) g[i] = std::sin(kPi * p.y[i]) * p.chi2[i];
      dual = duality_residual(w, g, g);
      dmin = w.d_min;
      dmax = w.d_max;
      fc = w.fitted_c();
      if (k == c.ks.front()) {
        auto D = std::make_shared<RMat>(w.D);
        b.r.files.push_back({"D_k" + std::to_string(k) + ".bin",
                             [D, k](const std::string& path) { write_kernel_binary(path, *D, k); }});
      }
    }
    rb = intertwine_residual(p2, build_wave_set(p2, k), bump_on(p2, 0.3, 0.7));
    {
      // the composition of two discretized singular operators needs the finer grid
      WaveKernelSet w = build_wave_set(p4, k);
      std::mt19937_64 rng(c.seed + uint64_t(k));
      std::uniform_real_distribution<double> coef(-1, 1);
      CVec f(p4.n, 0.0);
      for (int j = 1; j <= 4; ++j) {
        const double a = coef(rng);
        for (int i = 0; i < p4.n; ++i) f[i] += a * std::sin(j * kPi * p4.y[i]);
      }
      inv = inverse_residual(w, f);
    }
    b.at_most(3, ks_name("intertwine residual", k), ra, 1e-3, "n_y=" + std::to_string(n));
    b.at_least(3, ks_name("intertwine residual decrease under halving", k), ra / rb, 4,
               std::to_string(n) + " -> " + std::to_string(n2));
    b.at_most(3, ks_name("duality residual", k), dual, 1e-3);
    b.at_most(3, ks_name("|D Dinv - Id| on smooth data", k), inv, 1e-6, "n_y=" + std::to_string(n4));
    t.rows.push_back({double(k), ra, rb, dual, inv, double(n4), dmin, dmax, fc});
  }
  b.r.tables.push_back(std::move(t));
  return b.r;
}

// ---- criterion 4 ----

ScenarioResult green_audit(const LabConfig& c) {
  Builder b;
  const int n = c.profile.n_y;
  const Vec one(n, 1.0);
  const double h = 1.0 / (n - 1);
  ChannelProfile p = build_profile(c.profile);
  Table t{"green_residuals",
          {"k", "closed_form_err", "identity_couette", "identity_dirichlet", "identity_neumann", "action_discrepancy"},
          {}};
  Table samples{"green_samples", {"k", "y1", "y2", "G", "closed_form"}, {}};
  const int stride = std::max(1, (n - 1) / 32);
  for (int k : c.ks) {
    GreenKernelSet g = green_kernel(one, one, k, Bc::dirichlet);
    const double ak = std::abs(double(k));
    double e = 0;
    for (int i = 0; i < n; i += stride)
      for (int j = 0; j < n; j += stride) {
        const double a = std::min(i, j) * h, bb = std::max(i, j) * h;
        const double ex = std::sinh(ak * (1 - bb)) * std::sinh(ak * a) / (ak * std::sinh(ak));
        e = std::max(e, std::abs(g.G(i, j) - ex));
        if (i % (4 * stride) == 0 && j % (4 * stride) == 0) samples.rows.push_back({double(k), i * h, j * h, g.G(i, j), ex});
      }
    b.at_most(4, ks_name("Couette Dirichlet kernel vs sinh closed form", k), e, 1e-6);
    b.at_most(4, ks_name("operator o Green identity, Couette", k), g.identity_residual, 1e-8);
    GreenKernelSet gd = green_kernel(p, k, Bc::dirichlet), gn = green_kernel(p, k, Bc::neumann);
    b.at_most(4, ks_name("operator o Green identity, Dirichlet on " + p.spec.family, k), gd.identity_residual, 1e-8);
    b.at_most(4, ks_name("operator o Green identity, Neumann on " + p.spec.family, k), gn.identity_residual, 1e-8);
    t.rows.push_back({double(k), e, g.identity_residual, gd.identity_residual, gn.identity_residual, gd.action_discrepancy});
    if (k == 1) {
      const int i = int(std::lround(0.25 / h)), j = int(std::lround(0.5 / h));
      const double ex = std::sinh(1 - j * h) * std::sinh(i * h) / std::sinh(1.0);
      b.at_most(4, "G_1(0.25, 0.5) vs closed form", std::abs(g.G(i, j) - ex), 1e-6,
                "G = " + std::to_string(g.G(i, j)));
      b.r.metrics["G1_quarter_half"] = g.G(i, j);
    }
  }
  std::string kind = "none";
  try {
    green_kernel(one, one, 0, Bc::neumann);
  } catch (const Error& e) {
    kind = e.kind();
  }
  b.check(4, "Neumann k=0 rejected", kind == "NeumannZeroMode", 0, 0, kind);
  b.r.tables.push_back(std::move(t));
  b.r.tables.push_back(std::move(samples));
  return b.r;
}

// ---- criterion 5 ----

ScenarioResult multiplier_audit(const LabConfig& c) {
  Builder b;
  const MultiplierParams mp = c.multipliers.resolved();
  Vec etas;
  for (int i = 0; i <= 24; ++i) etas.push_back(std::pow(10.0, i / 6.0));
  double late = 0, junction = 0;
  Table jt{"junctions", {"eta", "max_residual"}, {}};
  for (double eta : etas) {
    double worst = 0;
    for (double sgn : {1.0, -1.0})
      for (int k = -5; k <= 12; ++k) {
        worst = std::max(worst, junction_residual(k, sgn * eta, mp));
        for (int j = 0; j <= 8; ++j) late = std::max(late, std::abs(w_value(2 * eta * (1 + 0.25 * j), k, sgn * eta, mp) - 1));
      }
    junction = std::max(junction, worst);
    jt.rows.push_back({eta, worst});
  }
  b.at_most(5, "w = 1 for t >= 2|eta|", late, 0);
  b.at_most(5, "junction continuity residual", junction, 1e-12);
  const RatioAudit a = ratio_audit(mp, c.audit_samples, c.seed);
  b.check(5, "ratio audit violations at fitted constants (" + std::to_string(c.audit_samples) + " samples)",
          a.violations() == 0, a.violations(), 0);
  b.r.metrics["ratio_audit"] = {{"samples", a.samples},         {"seed", a.seed},
                                {"c_nr_ratio", a.c_nr_ratio},   {"mu_fit", a.mu_fit},
                                {"c_rate_lo", a.c_rate_lo},     {"c_rate_hi", a.c_rate_hi},
                                {"c_rate_pair", a.c_rate_pair}, {"c_rate_sqrt", a.c_rate_sqrt},
                                {"max_fd_error", a.max_fd_error}};
  b.r.metrics["delta_lambda"] = mp.delta_lambda;
  b.r.metrics["q"] = mp.q;
  b.r.metrics["lambda_inf"] = lambda_at(INFINITY, mp);
  b.r.tables.push_back(std::move(jt));
  Vec ts;
  for (int i = 0; i <= 120; ++i) ts.push_back(2.5 * i);
  b.r.files.push_back({"multipliers_k1.csv", [ts, mp](const std::string& path) {
                         write_multiplier_csv(path, 1, ts, Vec{10, 50, 100}, mp);
                       }});
  return b.r;
}

// ---- criteria 6 and 7 ----

ScenarioResult cross_oracle(const LabConfig& c) {
  Builder b;
  const LinearSetup& l = c.linear;
  ChannelProfile p = build_profile(c.profile);
  CVec w0 = bump_on(p, l.data_lo, l.data_hi);
  LinearTrajectory tr = evolve_linear(p, l.k, w0, l.check_times, l.dt);
  std::vector<CVec> sp = evolve_linear_spectral(p, l.k, w0, l.check_times);
  Table t{"cross_oracle", {"t", "rel_l2_diff", "psi_l2"}, {}};
  for (size_t j = 0; j < l.check_times.size(); ++j) {
    const double r = rel_l2_diff(tr.psi[j], sp[j], p.h);
    char name[64];
    std::snprintf(name, sizeof name, "psi time stepping vs spectral at t=%g", l.check_times[j]);
    b.at_most(6, name, r, 1e-3);
    t.rows.push_back({l.check_times[j], r, l2_norm(sp[j], p.h)});
  }
  b.r.tables.push_back(std::move(t));
  return b.r;
}

ScenarioResult linear_damping(const LabConfig& c) {
  Builder b;
  const LinearSetup& l = c.linear;
  ChannelProfile p = build_profile(c.profile);
  Vec times;
  for (int j = 0; j * l.sample_dt <= l.t_max + 1e-9; ++j) times.push_back(j * l.sample_dt);
  LinearTrajectory tr = evolve_linear(p, l.k, bump_on(p, l.data_lo, l.data_hi), times, l.dt);
  DiagSeries d;
  Table t{"linear_norms", {"t", "Uy_L2", "Ux_neq_L2", "psi_L2"}, {}};
  for (size_t j = 0; j < times.size(); ++j) {
    const double psi = l2_norm(tr.psi[j], p.h);
    d.t.push_back(times[j]);
    d.uy.push_back(std::abs(l.k) * psi);
    d.ux_neq.push_back(l2_norm(num::d1(tr.psi[j], p.h), p.h));
    d.psi_neq.push_back(psi);
    t.rows.push_back({times[j], d.uy.back(), d.ux_neq.back(), psi});
  }
  DampingFit f = damping_rates(d, l.fit_lo, l.fit_hi);
  char win[64];
  std::snprintf(win, sizeof win, "t in [%g, %g]", l.fit_lo, l.fit_hi);
  b.check(7, "U^y decay exponent in [-2.5, -1.5]", within(f.uy.exponent, -2.5, -1.5), f.uy.exponent, -2, win);
  b.check(7, "U^x_neq decay exponent in [-1.4, -0.6]", within(f.ux_neq.exponent, -1.4, -0.6), f.ux_neq.exponent, -1, win);
  b.r.metrics["uy"] = {{"exponent", f.uy.exponent}, {"rms", f.uy.rms}};
  b.r.metrics["ux_neq"] = {{"exponent", f.ux_neq.exponent}, {"rms", f.ux_neq.rms}};
  b.r.metrics["samples"] = f.samples;
  b.r.tables.push_back(std::move(t));
  return b.r;
}

// ---- criterion 8 ----

ScenarioResult nonlinear_demo(const LabConfig& c) {
  Builder b;
  const NonlinearSetup& ns = c.nonlinear;
  ChannelProfile p = build_profile(c.profile);
  NonlinearSolver solver(p, ns.solver);
  auto [w, d] = bump_initial_data(p, ns.solver.K, ns.eps, ns.k_lo);
  NonlinearRun run;
  std::string breach;
  try {
    run = run_nonlinear(p, ns.solver, solver.initial_state(w, d), ns.T, true);
  } catch (const Error& e) {
    if (e.kind() != "SupportBreach") throw;
    breach = e.what();
  }
  const double band_lo = 2 * p.kappa0 - ns.solver.margin, band_hi = 1 - 2 * p.kappa0 + ns.solver.margin;
  if (!breach.empty()) {
    b.check(8, "omega, d supports inside the band plus margin", false, NAN, ns.solver.margin, breach);
    return b.r;
  }
  const DiagSeries& dg = run.diag;
  double drift = 0, lo = 1, hi = 0;
  for (size_t i = 0; i < dg.t.size(); ++i) {
    drift = std::max(drift, std::abs(dg.energy[i] - dg.energy[0]) / dg.energy[0]);
    if (!std::isnan(dg.supp_lo[i])) {
      lo = std::min(lo, dg.supp_lo[i]);
      hi = std::max(hi, dg.supp_hi[i]);
    }
  }
  b.at_most(8, "relative energy drift", drift, 1e-5);
  char band[96];
  std::snprintf(band, sizeof band, "support [%.4f, %.4f] in [%.4f, %.4f]", lo, hi, band_lo, band_hi);
  b.check(8, "omega, d supports inside the band plus margin", lo >= band_lo && hi <= band_hi,
          std::max(band_lo - lo, hi - band_hi), 0, band);
  const double fit_lo = ns.fit_lo > 0 ? ns.fit_lo : ns.T / 10;
  num::PowerFit sc = fit_window(dg.t, dg.scat_dist, fit_lo, ns.T);
  char win[64];
  std::snprintf(win, sizeof win, "t in [%g, %g]", fit_lo, ns.T);
  b.check(8, "scattering Cauchy difference exponent in [-1.5, -0.5]", within(sc.exponent, -1.5, -0.5), sc.exponent, -1,
          win);

  json& m = b.r.metrics;
  m["steps"] = run.steps;
  m["dt"] = run.dt;
  m["energy_drift"] = drift;
  m["max_mean_drift"] = run.max_mean_drift;
  m["support"] = {lo, hi};
  m["scattering"] = {{"exponent", sc.exponent}, {"rms", sc.rms}, {"fit_lo", fit_lo}, {"fit_hi", ns.T}};
  for (auto [key, series] : {std::pair<const char*, const Vec*>{"uy", &dg.uy}, {"ux_neq", &dg.ux_neq}}) {
    try {
      num::PowerFit f = fit_window(dg.t, *series, fit_lo, ns.T);
      m[key] = {{"exponent", f.exponent}, {"rms", f.rms}};
    } catch (const Error& e) {
      m[key] = {{"error", e.what()}};
    }
  }
  std::vector<CoordState> cs = coord_map(p, dg.t, dg.mean_dy_psi);
  double hmax = 0;
  for (const CoordState& s : cs)
    for (double v : s.h) hmax = std::max(hmax, std::abs(v));
  m["coord_max_abs_h"] = hmax;
  const CoordState& last = cs.back();
  Table ct{"coord_final", {"y", "v", "dyv", "dtv", "h", "phi_over_t"}, {}};
  for (int i = 0; i < p.n; ++i)
    ct.rows.push_back({p.y[i], last.v[i], last.dyv[i], last.dtv[i], last.h[i], last.phi[i] / last.t});
  b.r.tables.push_back(std::move(ct));

  auto diag = std::make_shared<DiagSeries>(dg);
  b.r.files.push_back({"diagnostics.csv", [diag](const std::string& path) { write_diagnostics_csv(path, *diag); }});
  auto final_state = std::make_shared<FieldState>(run.samples.back());
  b.r.files.push_back({"final_state.chdf", [final_state](const std::string& path) { write_field_dump(path, *final_state); }});
  return b.r;
}

}  // namespace

ScenarioResult run_scenario(const LabConfig& c) {
  validate_config(c);
  ScenarioResult r;
  if (c.scenario == "phi1-oracle") r = phi1_oracle(c);
  else if (c.scenario == "spectral-scan") r = spectral_scan(c);
  else if (c.scenario == "wave-identities") r = wave_identities(c);
  else if (c.scenario == "green-audit") r = green_audit(c);
  else if (c.scenario == "multiplier-audit") r = multiplier_audit(c);
  else if (c.scenario == "cross-oracle") r = cross_oracle(c);
  else if (c.scenario == "linear-damping") r = linear_damping(c);
  else r = nonlinear_demo(c);
  r.scenario = c.scenario;
  return r;
}

}  // namespace chd
