#include "chd/sturm.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace chd {

Bc parse_bc(const std::string& s) {
  if (s == "dirichlet") return Bc::dirichlet;
  if (s == "neumann") return Bc::neumann;
  fail("RangeError", "boundary condition must be dirichlet or neumann, got '" + s + "'");
}

const char* bc_name(Bc bc) { return bc == Bc::dirichlet ? "dirichlet" : "neumann"; }

namespace {

// Classical RK4 over the grid, coefficients taken at nodes and midpoints.
// f(state, node_or_mid_value_index) -> derivative; dir = +1 marches up, -1 down.
template <class F>
void march(int n, double h, int dir, std::array<double, 2> y0, std::vector<std::array<double, 2>>& out, F&& rhs) {
  out.assign(n, {0, 0});
  int i = dir > 0 ? 0 : n - 1;
  out[i] = y0;
  const double s = dir * h;
  for (int step = 0; step < n - 1; ++step) {
    const int j = i + dir, mid = std::min(i, j);
    auto y = out[i];
    auto k1 = rhs(y, 0, i, mid);
    auto k2 = rhs({y[0] + 0.5 * s * k1[0], y[1] + 0.5 * s * k1[1]}, 1, i, mid);
    auto k3 = rhs({y[0] + 0.5 * s * k2[0], y[1] + 0.5 * s * k2[1]}, 1, i, mid);
    auto k4 = rhs({y[0] + s * k3[0], y[1] + s * k3[1]}, 2, j, mid);
    out[j] = {y[0] + s / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
              y[1] + s / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])};
    i = j;
  }
}

}  // namespace

QSolutions q_solutions(const Vec& h1, const Vec& h2, int k) {
  const int n = int(h1.size());
  if (int(h2.size()) != n) fail("ShapeMismatch", "h1 and h2 must share the grid");
  if (k == 0) fail("RangeError", "homogeneous solutions need k != 0");
  for (int i = 0; i < n; ++i)
    if (!(h1[i] > 0 && h2[i] > 0)) fail("PositivityViolation", "h1, h2 must be positive");
  const double h = 1.0 / (n - 1), k2 = double(k) * k;
  Vec m1 = num::midpoints(h1), m2 = num::midpoints(h2);
  auto coef = [&](const Vec& node, const Vec& mid, int where, int i, int m) { return where == 1 ? mid[m] : node[i]; };
  // the linear march keeps the Wronskian to round-off; only switch to the
  // logarithmic form where e^{|k|} would overflow
  const bool logform = std::abs(k) > 300;
  QSolutions q;
  q.k = k;
  for (int dir : {1, -1}) {
    std::vector<std::array<double, 2>> out;
    if (logform) {
      // (log q)' = s / h1,  s' = k^2 h2 - s^2 / h1,  s = h1 q' / q
      march(n, h, dir, {0.0, 0.0}, out, [&](std::array<double, 2> y, int w, int i, int m) {
        const double a = coef(h1, m1, w, i, m), b = coef(h2, m2, w, i, m);
        return std::array<double, 2>{y[1] / a, k2 * b - y[1] * y[1] / a};
      });
      for (auto& v : out) {
        const double qq = std::exp(v[0]);
        v = {qq, v[1] * qq};
      }
    } else {
      march(n, h, dir, {1.0, 0.0}, out, [&](std::array<double, 2> y, int w, int i, int m) {
        return std::array<double, 2>{y[1] / coef(h1, m1, w, i, m), k2 * coef(h2, m2, w, i, m) * y[0]};
      });
    }
    Vec& qv = dir > 0 ? q.qa : q.qb;
    Vec& pv = dir > 0 ? q.pa : q.pb;
    qv.resize(n);
    pv.resize(n);
    for (int i = 0; i < n; ++i) {
      qv[i] = out[i][0];
      pv[i] = out[i][1];
    }
  }
  q.wronskian.resize(n);
  double mean = 0;
  for (int i = 0; i < n; ++i) mean += (q.wronskian[i] = q.pa[i] * q.qb[i] - q.qa[i] * q.pb[i]) / n;
  for (double w : q.wronskian) q.wronskian_spread = std::max(q.wronskian_spread, std::abs(w / mean - 1));
  return q;
}

SturmOperator::SturmOperator(const Vec& h1, const Vec& h2, int k, Bc bc)
    : n_(int(h1.size())), k_(k), bc_(bc), h_(1.0 / (h1.size() - 1)) {
  build(h1, num::d1(h1, h_), h2);
}

SturmOperator::SturmOperator(const Vec& h1, const Vec& dh1, const Vec& h2, int k, Bc bc)
    : n_(int(h1.size())), k_(k), bc_(bc), h_(1.0 / (h1.size() - 1)) {
  build(h1, dh1, h2);
}

void SturmOperator::build(const Vec& h1, const Vec& dh1, const Vec& h2) {
  const int n = n_;
  if (n < 7) fail("GridTooCoarse", "operator needs at least 7 nodes");
  if (int(h2.size()) != n || int(dh1.size()) != n) fail("ShapeMismatch", "coefficients must share the grid");
  if (bc_ == Bc::neumann && k_ == 0) fail("NeumannZeroMode", "k = 0 with Neumann data has constant null space");
  const double k2 = double(k_) * k_, h = h_;
  rows_.resize(n);
  Vec xs(6);
  for (int i = 0; i < n; ++i) {
    Row& r = rows_[i];
    if (i == 0 || i == n - 1) {
      if (bc_ == Bc::dirichlet) {
        r.start = i;
        r.len = 1;
        r.w[0] = 1.0;
      } else {
        // fourth-order one-sided first derivative, scaled by h
        static const double fw[5] = {-25.0 / 12, 4.0, -3.0, 4.0 / 3, -0.25};
        r.len = 5;
        r.start = i == 0 ? 0 : n - 5;
        for (int q = 0; q < 5; ++q) r.w[q] = i == 0 ? fw[q] : -fw[4 - q];
      }
      continue;
    }
    if (i >= 2 && i <= n - 3) {
      static const double c2[5] = {-1.0 / 12, 16.0 / 12, -30.0 / 12, 16.0 / 12, -1.0 / 12};
      static const double c1[5] = {1.0 / 12, -8.0 / 12, 0.0, 8.0 / 12, -1.0 / 12};
      r.start = i - 2;
      r.len = 5;
      for (int q = 0; q < 5; ++q) r.w[q] = -h1[i] * c2[q] / (h * h) - dh1[i] * c1[q] / h;
    } else {
      r.start = i == 1 ? 0 : n - 6;
      r.len = 6;
      for (int q = 0; q < 6; ++q) xs[q] = (r.start + q - i) * h;
      Vec a2 = num::fd_weights(0.0, xs, 2), a1 = num::fd_weights(0.0, xs, 1);
      for (int q = 0; q < 6; ++q) r.w[q] = -h1[i] * a2[q] - dh1[i] * a1[q];
    }
    r.w[i - r.start] += k2 * h2[i];
  }
  lu_ = num::BandLU(n, 4, [&](int i, int j) { return entry(i, j); });
}

double SturmOperator::entry(int i, int j) const {
  const Row& r = rows_[i];
  const int q = j - r.start;
  return q >= 0 && q < r.len ? r.w[q] : 0.0;
}

Vec SturmOperator::apply(const Vec& x) const {
  Vec y(n_, 0.0);
  for (int i = 0; i < n_; ++i)
    for (int q = 0; q < rows_[i].len; ++q) y[i] += rows_[i].w[q] * x[rows_[i].start + q];
  return y;
}

CVec SturmOperator::apply(const CVec& x) const {
  CVec y(n_, 0.0);
  for (int i = 0; i < n_; ++i)
    for (int q = 0; q < rows_[i].len; ++q) y[i] += rows_[i].w[q] * x[rows_[i].start + q];
  return y;
}

void SturmOperator::solve(Vec& f) const {
  f.front() = 0;
  f.back() = 0;
  lu_.solve(f);
}

void SturmOperator::solve(CVec& f) const {
  f.front() = 0;
  f.back() = 0;
  lu_.solve(f);
}

GreenKernelSet green_kernel(const Vec& h1, const Vec& h2, int k, Bc bc) {
  const int n = int(h1.size());
  if (bc == Bc::neumann && k == 0) fail("NeumannZeroMode", "k = 0 with Neumann data has constant null space");
  if (int(h2.size()) != n) fail("ShapeMismatch", "h1 and h2 must share the grid");
  const double h = 1.0 / (n - 1);
  GreenKernelSet g;
  g.k = k;
  g.bc = bc;
  g.h1 = h1;
  g.h2 = h2;
  // left solution yl (boundary data at 0), right solution yr (at 1), with h1 y'
  Vec yl(n), pl(n), yr(n), pr(n);
  if (k == 0) {
    Vec inv(n);
    for (int i = 0; i < n; ++i) inv[i] = 1.0 / h1[i];
    Vec c = num::cumulative(inv, h);
    for (int i = 0; i < n; ++i) {
      yl[i] = c[i];
      yr[i] = c.back() - c[i];
      pl[i] = 1.0;
      pr[i] = -1.0;
    }
  } else {
    g.q = q_solutions(h1, h2, k);
    const QSolutions& q = g.q;
    for (int i = 0; i < n; ++i) {
      if (bc == Bc::dirichlet) {
        yl[i] = q.qb[0] * q.qa[i] - q.qb[i];
        pl[i] = q.qb[0] * q.pa[i] - q.pb[i];
        yr[i] = q.qa[n - 1] * q.qb[i] - q.qa[i];
        pr[i] = q.qa[n - 1] * q.pb[i] - q.pa[i];
      } else {
        yl[i] = q.qa[i];
        pl[i] = q.pa[i];
        yr[i] = q.qb[i];
        pr[i] = q.pb[i];
      }
    }
  }
  double C = 0;
  for (int i = 0; i < n; ++i) C += (yl[i] * pr[i] - pl[i] * yr[i]) / n;
  g.G = RMat(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g.G(i, j) = -yl[std::min(i, j)] * yr[std::max(i, j)] / C;

  // cross-assembly through the discrete operator
  SturmOperator A(h1, h2, k, bc);
  Vec w = num::quad_weights(n - 1, h);
  g.G_fd = RMat(n, n);
  for (int j = 1; j < n - 1; ++j) {
    Vec e(n, 0.0);
    e[j] = 1.0;
    A.solve(e);
    for (int i = 0; i < n; ++i) g.G_fd(i, j) = e[i] / w[j];
  }
  for (int i = 0; i < n; ++i)
    for (int j = 1; j < n - 1; ++j) g.discrepancy = std::max(g.discrepancy, std::abs(g.G(i, j) - g.G_fd(i, j)));
  for (int j = 1; j < n - 1; ++j) {
    Vec col(n);
    for (int i = 0; i < n; ++i) col[i] = g.G_fd(i, j) * w[j];
    Vec r = A.apply(col);
    for (int i = 1; i < n - 1; ++i)
      g.identity_residual = std::max(g.identity_residual, std::abs(r[i] - (i == j ? 1.0 : 0.0)));
  }
  for (int which = 0; which < 2; ++which) {
    Vec f(n);
    for (int i = 0; i < n; ++i) {
      const double y = i * h;
      f[i] = which == 0 ? std::sin(kPi * y) + y : std::exp(y) * std::cos(3 * y);
    }
    Vec a = green_apply(g, f), b = f;
    A.solve(b);
    for (int i = 0; i < n; ++i) g.action_discrepancy = std::max(g.action_discrepancy, std::abs(a[i] - b[i]));
  }
  return g;
}

Vec green_apply(const GreenKernelSet& g, const Vec& f) {
  const int n = g.G.rows;
  if (int(f.size()) != n) fail("ShapeMismatch", "data must live on the kernel grid");
  const double h = 1.0 / (n - 1);
  std::vector<Vec> wts(n);
  for (int m = 0; m < n; ++m) wts[m] = num::quad_weights(m, h);
  Vec out(n, 0.0);
  for (int i = 0; i < n; ++i) {
    const Vec& wl = wts[i];
    const Vec& wr = wts[n - 1 - i];
    double s = 0;
    for (int j = 0; j <= i; ++j) s += wl[j] * g.G(i, j) * f[j];
    for (int j = i; j < n; ++j) s += wr[j - i] * g.G(i, j) * f[j];
    out[i] = s;
  }
  return out;
}

GreenKernelSet green_kernel(const ChannelProfile& p, int k, Bc bc) {
  Vec h1(p.n);
  for (int i = 0; i < p.n; ++i) h1[i] = bc == Bc::dirichlet ? 1.0 / p.theta[i] : p.theta[i];
  return green_kernel(h1, h1, k, bc);
}

namespace {
SturmOperator stream_operator(const ChannelProfile& p, int k) {
  Vec h1(p.n), dh1(p.n);
  for (int i = 0; i < p.n; ++i) {
    h1[i] = 1.0 / p.theta[i];
    dh1[i] = -p.dtheta[i] / (p.theta[i] * p.theta[i]);
  }
  return SturmOperator(h1, dh1, h1, k, Bc::dirichlet);
}
}  // namespace

StreamSolver::StreamSolver(const ChannelProfile& p, int k) : op_(stream_operator(p, k)) {}

CVec StreamSolver::solve(const CVec& omega_tilde) const {
  if (int(omega_tilde.size()) != op_.n()) fail("ShapeMismatch", "omega must live on the y grid");
  CVec f(omega_tilde.size());
  for (size_t i = 0; i < f.size(); ++i) f[i] = -omega_tilde[i];
  op_.solve(f);
  return f;
}

CVec solve_stream(const ChannelProfile& p, int k, const CVec& omega_tilde, CVec* ux) {
  CVec psi = StreamSolver(p, k).solve(omega_tilde);
  if (ux) *ux = num::d1(psi, p.h);
  return psi;
}

std::vector<SturmOperator> pressure_operators(const ChannelProfile& p, int K) {
  std::vector<SturmOperator> ops(K + 1);
  for (int k = 1; k <= K; ++k) ops[k] = SturmOperator(p.theta, p.dtheta, p.theta, k, Bc::neumann);
  return ops;
}

PressureResult solve_pressure(const ChannelProfile& p, const Spectral& sp, const ModeField& d,
                              const ModeField& rhs, const Vec& mean_accel, double tol, int max_iter,
                              const std::vector<SturmOperator>* given) {
  const int n = p.n, K = sp.K();
  if (d.cols != n || rhs.cols != n || int(mean_accel.size()) != n || d.rows != K + 1 || rhs.rows != K + 1)
    fail("ShapeMismatch", "pressure inputs must be (K+1) x n_y mode fields");
  PhysField dphys = sp.to_phys(d);
  double dmax = 0, thmin = 1e300;
  for (double v : dphys.a) dmax = std::max(dmax, std::abs(v));
  for (double v : p.theta) thmin = std::min(thmin, v);
  if (dmax >= 0.5 * thmin) fail("DensityTooLarge", "|d| must stay below min(theta)/2");

  std::vector<SturmOperator> own;
  if (!given) own = pressure_operators(p, K);
  else if (int(given->size()) != K + 1) fail("ShapeMismatch", "one pressure operator per mode");
  const std::vector<SturmOperator>& ops = given ? *given : own;

  PressureResult res;
  res.P = sp.zeros();
  ModeField& P = res.P;

  // coupling terms div(d grad P) for k >= 1 and P0(d dP/dy) without the mean of dP/dy
  auto coupling = [&](const ModeField& Pc, ModeField& div, Vec& mean_term) {
    ModeField Px = sp.dx(Pc), Py = sp.dy(Pc, p.h);
    for (int i = 0; i < n; ++i) Py(0, i) = 0.0;
    ModeField fy_fluct = product(sp, d, Py);
    for (int i = 0; i < n; ++i) {
      mean_term[i] = fy_fluct(0, i).real();
      Py(0, i) = Pc(0, i);  // the stored mean gradient
    }
    ModeField fx = product(sp, d, Px), fy = product(sp, d, Py);
    ModeField dfx = sp.dx(fx), dfy = sp.dy(fy, p.h);
    for (int k = 0; k <= K; ++k)
      for (int i = 0; i < n; ++i) div(k, i) = dfx(k, i) + dfy(k, i);
  };

  ModeField div = sp.zeros();
  Vec mean_term(n, 0.0);
  double prev_change = 1e300;
  int growth = 0;
  const bool coupled = dmax > 0;
  for (int it = 1; it <= max_iter; ++it) {
    if (coupled) coupling(P, div, mean_term);
    ModeField next = sp.zeros();
    for (int i = 0; i < n; ++i) next(0, i) = (-mean_accel[i] - mean_term[i]) / (p.theta[i] + d(0, i).real());
    for (int k = 1; k <= K; ++k) {
      CVec f(n);
      for (int i = 0; i < n; ++i) f[i] = -rhs(k, i) + div(k, i);
      ops[k].solve(f);
      std::copy(f.begin(), f.end(), next.row(k));
    }
    double change = 0, size = 0;
    for (size_t q = 0; q < P.a.size(); ++q) {
      change += std::norm(next.a[q] - P.a[q]);
      size += std::norm(next.a[q]);
    }
    change = std::sqrt(change / (size + 1e-300));
    P = std::move(next);
    res.iterations = it;
    res.residual = change;
    if (!coupled || change < tol) break;
    growth = change > prev_change ? growth + 1 : 0;
    if (growth >= 3 || !std::isfinite(change)) fail("IterationDiverged", "pressure fixed point is not contracting");
    prev_change = change;
  }
  if (coupled && res.residual >= tol) fail("IterationDiverged", "pressure iteration hit the iteration cap");
  return res;
}

}  // namespace chd
