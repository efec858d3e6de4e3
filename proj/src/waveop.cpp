#include "chd/waveop.hpp"

#include <fftw3.h>
#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <mutex>

#include "chd/numerics.hpp"
#include "chd/singular.hpp"
#include "chd/sturm.hpp"

namespace chd {

namespace {

// Extreme singular values by power iteration on A^T A and on its inverse.
void singular_values(const RMat& a, double& smax, double& smin) {
  const int n = a.rows;
  std::vector<double> lu(a.a);
  std::vector<int> piv(n);
  if (LAPACKE_dgetrf(LAPACK_ROW_MAJOR, n, n, lu.data(), n, piv.data()) != 0)
    fail("SingularOperator", "wave kernel is singular");
  auto normalize = [](Vec& x) {
    double s = 0;
    for (double v : x) s += v * v;
    s = std::sqrt(s);
    for (double& v : x) v /= s;
    return s;
  };
  Vec x(n), y(n);
  for (int i = 0; i < n; ++i) x[i] = 1.0 + 0.1 * std::sin(1.0 + i);
  normalize(x);
  double lam = 0;
  for (int it = 0; it < 300; ++it) {
    for (int i = 0; i < n; ++i) {
      double s = 0;
      for (int j = 0; j < n; ++j) s += a(i, j) * x[j];
      y[i] = s;
    }
    std::fill(x.begin(), x.end(), 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) x[j] += a(i, j) * y[i];
    const double next = normalize(x);
    if (std::abs(next - lam) < 1e-12 * next) {
      lam = next;
      break;
    }
    lam = next;
  }
  smax = std::sqrt(lam);
  for (int i = 0; i < n; ++i) x[i] = 1.0 + 0.1 * std::cos(2.0 + i);
  normalize(x);
  lam = 0;
  for (int it = 0; it < 300; ++it) {
    LAPACKE_dgetrs(LAPACK_ROW_MAJOR, 'T', n, 1, lu.data(), n, piv.data(), x.data(), 1);
    LAPACKE_dgetrs(LAPACK_ROW_MAJOR, 'N', n, 1, lu.data(), n, piv.data(), x.data(), 1);
    const double next = normalize(x);
    if (std::abs(next - lam) < 1e-12 * next) {
      lam = next;
      break;
    }
    lam = next;
  }
  smin = 1.0 / std::sqrt(lam);
}

double l2(const CVec& v, double h) {
  double s = 0;
  for (auto& x : v) s += std::norm(x);
  return std::sqrt(s * h);
}

}  // namespace

double WaveKernelSet::fitted_c() const {
  return std::max({d_max, 1 / d_min, d1_max, 1 / d1_min});
}

WaveKind parse_wave_kind(const std::string& s) {
  if (s == "forward") return WaveKind::forward;
  if (s == "dual") return WaveKind::dual;
  if (s == "inverse") return WaveKind::inverse;
  fail("RangeError", "wave operator must be forward, dual or inverse, got '" + s + "'");
}

namespace {

WaveKernelSet assemble(const ChannelProfile& p, int k, double near_threshold) {
  const int n = p.n;
  WaveKernelSet w;
  w.k = k;
  w.n = n;
  w.h = p.h;
  auto table = std::make_shared<HomSolutionTable>(hom_table(p, std::abs(k)));
  w.table = table;
  w.sf = j_functions(p, *table);
  for (int j = 0; j < n; ++j)
    if (w.sf.indicator[j] < near_threshold)
      fail("NearEigenvalue", "J1^2 + pi^2 J2^2 vanishes at y' = " + std::to_string(p.y[j]));
  w.ek = build_e_kernel(p, *table, w.sf);
  const EKernel& ek = w.ek;
  const SpectralFunctions& sf = w.sf;

  w.shear = p.shear_coef();
  w.b1.resize(n);
  w.b2.resize(n);
  for (int j = 0; j < n; ++j) {
    const double s = std::hypot(sf.J1[j], kPi * sf.J2[j]);
    // overall factor -1: J1 < 0, so this makes D the identity for Couette-like data
    w.b1[j] = -sf.J1[j] / s;
    w.b2[j] = sf.rho[j] * p.theta[j] / (p.du[j] * s);
  }

  w.KD = RMat(n, n);
  w.KI = RMat(n, n);
  num::parallel_for(n - 2, [&](int q) {
    const int i = q + 1;
    Vec pole(n), lg(n), left(n, 0.0), right(n, 0.0);
    num::SingularParts sp{&pole, &lg, &left, &right};
    // KD: integrate kappa(m, i) over m
    for (int m = 0; m < n; ++m) {
      pole[m] = -ek.g[i];
      lg[m] = table->phi1(i, m) * ek.L[i];
      if (m <= i) left[m] = ek.R0(i, m);
      if (m >= i) right[m] = ek.R1(i, m);
    }
    Vec r = num::singular_row(i, p.h, p.u, p.du[i], sp);
    std::copy(r.begin(), r.end(), w.KD.row(i));
    // KI: integrate kappa(i, m) over m
    std::fill(left.begin(), left.end(), 0.0);
    std::fill(right.begin(), right.end(), 0.0);
    for (int m = 0; m < n; ++m) {
      pole[m] = ek.g[m];
      lg[m] = table->phi1(m, i) * ek.L[m];
      if (m <= i) left[m] = ek.R1(m, i);
      if (m >= i) right[m] = ek.R0(m, i);
    }
    r = num::singular_row(i, p.h, p.u, p.du[i], sp);
    std::copy(r.begin(), r.end(), w.KI.row(i));
  });

  w.D = RMat(n, n);
  w.D1 = RMat(n, n);
  w.Dinv = RMat(n, n);
  for (int i = 0; i < n; ++i) {
    w.D(i, i) = w.D1(i, i) = w.Dinv(i, i) = w.b1[i];
    for (int m = 0; m < n; ++m) {
      w.D(i, m) += w.shear[i] * w.b2[i] * w.KD(i, m);
      w.D1(i, m) += w.b2[i] * w.KD(i, m) * w.shear[m];
      w.Dinv(i, m) += w.shear[i] * w.KI(i, m) * w.b2[m];
    }
  }
  return w;
}

}  // namespace

WaveKernelSet build_wave_set(const ChannelProfile& p, int k, double near_threshold) {
  if (k == 0) fail("MissingSpectralData", "wave operators exist for k != 0 only");
  WaveKernelSet w = assemble(p, k, near_threshold);
  singular_values(w.D, w.d_max, w.d_min);
  singular_values(w.D1, w.d1_max, w.d1_min);
  return w;
}

CVec apply_kernel(const RMat& a, const CVec& f) {
  if (int(f.size()) != a.cols) fail("ShapeMismatch", "profile length does not match the kernel");
  CVec out(a.rows, 0.0);
  for (int i = 0; i < a.rows; ++i) {
    const double* r = a.row(i);
    cplx s = 0;
    for (int m = 0; m < a.cols; ++m) s += r[m] * f[m];
    out[i] = s;
  }
  return out;
}

CVec apply_wave(const WaveKernelSet& set, WaveKind which, const CVec& f) {
  switch (which) {
    case WaveKind::forward: return apply_kernel(set.D, f);
    case WaveKind::dual: return apply_kernel(set.D1, f);
    default: return apply_kernel(set.Dinv, f);
  }
}

double intertwine_residual(const ChannelProfile& p, const WaveKernelSet& set, const CVec& omega) {
  const int n = p.n;
  if (int(omega.size()) != n) fail("ShapeMismatch", "omega must live on the y grid");
  const double norm = l2(omega, p.h);
  if (norm == 0) return 0.0;
  CVec psi = solve_stream(p, set.k, omega);
  CVec r(n);
  for (int i = 0; i < n; ++i) r[i] = p.u[i] * omega[i] - set.shear[i] * psi[i];
  CVec lhs = apply_kernel(set.D, r), rhs = apply_kernel(set.D, omega);
  for (int i = 0; i < n; ++i) lhs[i] -= p.u[i] * rhs[i];
  return l2(lhs, p.h) / norm;
}

double duality_residual(const WaveKernelSet& set, const CVec& omega, const CVec& g) {
  const double no = l2(omega, set.h), ng = l2(g, set.h);
  if (no == 0 || ng == 0) return 0.0;
  CVec a = apply_kernel(set.D, omega), b = apply_kernel(set.D1, g);
  CVec x(set.n), y(set.n);
  for (int i = 0; i < set.n; ++i) {
    x[i] = a[i] * b[i];
    y[i] = omega[i] * g[i];
  }
  const Vec w = num::quad_weights(set.n - 1, set.h);
  cplx s = 0;
  for (int i = 0; i < set.n; ++i) s += w[i] * (x[i] - y[i]);
  return std::abs(s) / (no * ng);
}

double inverse_residual(const WaveKernelSet& set, const CVec& f) {
  const double nf = l2(f, set.h);
  if (nf == 0) return 0.0;
  CVec r = apply_kernel(set.D, apply_kernel(set.Dinv, f));
  for (int i = 0; i < set.n; ++i) r[i] -= f[i];
  return l2(r, set.h) / nf;
}

double adjoint_residual(const WaveKernelSet& set) {
  // on a uniform grid the discrete pairing is h sum, so adjointness is transposition
  double m = 0, scale = 0;
  for (int i = 0; i < set.n; ++i)
    for (int j = 0; j < set.n; ++j) {
      m = std::max(m, std::abs(set.D1(i, j) - set.Dinv(j, i)));
      scale = std::max(scale, std::abs(set.D1(i, j)));
    }
  return m / scale;
}

double adjoint_pairing_residual(const WaveKernelSet& set, const CVec& f, const CVec& g) {
  const double nf = l2(f, set.h), ng = l2(g, set.h);
  if (nf == 0 || ng == 0) return 0.0;
  CVec a = apply_kernel(set.D1, g), b = apply_kernel(set.Dinv, f);
  cplx s = 0;
  for (int i = 0; i < set.n; ++i) s += a[i] * f[i] - g[i] * b[i];
  return std::abs(s * set.h) / (nf * ng);
}

RMat commutator_kernel(const WaveKernelSet& set) {
  RMat c(set.n, set.n);
  for (int i = 0; i < set.n; ++i)
    for (int m = 0; m < set.n; ++m) c(i, m) = set.b2[i] * (set.shear[i] - set.shear[m]) * set.KD(i, m);
  return c;
}

DecayAudit kernel_decay_audit(const ChannelProfile& p, const WaveKernelSet& set, double s) {
  const int N = p.n - 1;
  static std::mutex plan_mu;
  fftw_complex* buf = fftw_alloc_complex(size_t(N) * N);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lk(plan_mu);
    plan = fftw_plan_dft_2d(N, N, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
  }
  for (int i = 0; i < N; ++i)
    for (int m = 0; m < N; ++m) {
      const double v = p.chi2[i] * ((i == m ? -1.0 : 0.0) + set.D(i, m)) * p.chi2[m] / p.h;
      buf[size_t(i) * N + m][0] = v;
      buf[size_t(i) * N + m][1] = 0;
    }
  fftw_execute(plan);
  // entry (a, b) carries exp(-i (xi1 y + xi2' y')); the kernel pairs xi1 with xi2 = -xi2'
  const int half = N / 4;
  DecayAudit au;
  au.s = s;
  au.offsets.resize(half);
  au.amplitude.assign(half, 0.0);
  for (int x1 = -half; x1 <= half; ++x1)
    for (int x2 = -half; x2 <= half; ++x2) {
      const int off = std::abs(x1 - x2);
      if (off < 1 || off > half) continue;
      const int a = (x1 + N) % N, b = (-x2 + N) % N;
      const double amp = std::hypot(buf[size_t(a) * N + b][0], buf[size_t(a) * N + b][1]) * p.h * p.h;
      au.amplitude[off - 1] = std::max(au.amplitude[off - 1], amp);
    }
  {
    std::lock_guard<std::mutex> lk(plan_mu);
    fftw_destroy_plan(plan);
  }
  fftw_free(buf);
  // log A = log C - lambda m^s by least squares
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (int m = 1; m <= half; ++m) {
    au.offsets[m - 1] = m;
    if (au.amplitude[m - 1] <= 0) continue;
    const double x = std::pow(double(m), s), y = std::log(au.amplitude[m - 1]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++cnt;
  }
  if (cnt >= 2) {
    const double slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    au.lambda = -slope;
    au.C = std::exp((sy - slope * sx) / cnt);
    double r = 0;
    for (int m = 1; m <= half; ++m)
      if (au.amplitude[m - 1] > 0) {
        const double d = std::log(au.amplitude[m - 1]) - (std::log(au.C) - au.lambda * std::pow(double(m), s));
        r += d * d;
      }
    au.rms = std::sqrt(r / cnt);
  }
  return au;
}

void write_kernel_binary(const std::string& path, const RMat& a, int k) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("IOError", "cannot open " + path);
  const int32_t head[3] = {int32_t(k), int32_t(a.rows), 1};
  out.write("CHDK", 4);
  out.write(reinterpret_cast<const char*>(head), sizeof head);
  out.write(reinterpret_cast<const char*>(a.a.data()), std::streamsize(sizeof(double) * a.a.size()));
  if (!out) fail("IOError", "short write to " + path);
}

RMat read_kernel_binary(const std::string& path, int* k) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("IOError", "cannot open " + path);
  char magic[4];
  int32_t head[3];
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(head), sizeof head);
  if (!in || std::string(magic, 4) != "CHDK" || head[2] != 1 || head[1] < 1)
    fail("ParseError", path + " is not a kernel dump");
  RMat a(head[1], head[1]);
  in.read(reinterpret_cast<char*>(a.a.data()), std::streamsize(sizeof(double) * a.a.size()));
  if (!in) fail("ParseError", path + " is truncated");
  if (k) *k = head[0];
  return a;
}

void write_kernel_csv(const std::string& path, const RMat& a) {
  std::ofstream out(path);
  if (!out) fail("IOError", "cannot open " + path);
  char buf[32];
  for (int i = 0; i < a.rows; ++i) {
    for (int j = 0; j < a.cols; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", a(i, j));
      out << (j ? "," : "") << buf;
    }
    out << '\n';
  }
}

}  // namespace chd
