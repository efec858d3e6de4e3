#include "chd/numerics.hpp"

#include <lapacke.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

namespace chd {

int thread_count() {
  if (const char* s = std::getenv("CHANNEL_DAMP_THREADS")) {
    int v = std::atoi(s);
    if (v >= 1) return v;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : int(hc);
}

namespace num {

namespace {

template <class T>
std::vector<T> d1_impl(const std::vector<T>& f, double h) {
  const int n = int(f.size());
  std::vector<T> g(n);
  if (n < 5) throw Error("GridTooCoarse", "d1 needs at least 5 points");
  auto df = [&](int i, int j) { return f[j] - f[i]; };
  const double s = 1.0 / (12.0 * h);
  g[0] = s * (48.0 * df(0, 1) - 36.0 * df(0, 2) + 16.0 * df(0, 3) - 3.0 * df(0, 4));
  g[1] = s * (-3.0 * df(1, 0) + 18.0 * df(1, 2) - 6.0 * df(1, 3) + df(1, 4));
  for (int i = 2; i < n - 2; ++i)
    g[i] = s * (8.0 * (f[i + 1] - f[i - 1]) - (f[i + 2] - f[i - 2]));
  const int m = n - 1;
  g[m] = -s * (48.0 * df(m, m - 1) - 36.0 * df(m, m - 2) + 16.0 * df(m, m - 3) - 3.0 * df(m, m - 4));
  g[m - 1] = -s * (-3.0 * df(m - 1, m) + 18.0 * df(m - 1, m - 2) - 6.0 * df(m - 1, m - 3) +
                   df(m - 1, m - 4));
  return g;
}

template <class T>
std::vector<T> d2_impl(const std::vector<T>& f, double h) {
  const int n = int(f.size());
  std::vector<T> g(n);
  if (n < 6) throw Error("GridTooCoarse", "d2 needs at least 6 points");
  auto df = [&](int i, int j) { return f[j] - f[i]; };
  const double s = 1.0 / (12.0 * h * h);
  // one-sided six-point rows, written relative to the centre value
  auto edge0 = [&](int o, int dir) {
    return s * (-154.0 * df(o, o + dir) + 214.0 * df(o, o + 2 * dir) - 156.0 * df(o, o + 3 * dir) +
                61.0 * df(o, o + 4 * dir) - 10.0 * df(o, o + 5 * dir));
  };
  auto edge1 = [&](int o, int dir) {
    return s * (10.0 * df(o, o - dir) - 4.0 * df(o, o + dir) + 14.0 * df(o, o + 2 * dir) -
                6.0 * df(o, o + 3 * dir) + df(o, o + 4 * dir));
  };
  g[0] = edge0(0, 1);
  g[1] = edge1(1, 1);
  for (int i = 2; i < n - 2; ++i)
    g[i] = s * (16.0 * (df(i, i + 1) + df(i, i - 1)) - (df(i, i + 2) + df(i, i - 2)));
  g[n - 1] = edge0(n - 1, -1);
  g[n - 2] = edge1(n - 2, -1);
  return g;
}

template <class T>
std::vector<T> cumulative_impl(const std::vector<T>& f, double h) {
  const int n = int(f.size());
  std::vector<T> c(n, T{});
  if (n < 2) return c;
  if (n == 2) {
    c[1] = 0.5 * h * (f[0] + f[1]);
    return c;
  }
  if (n == 3) {
    c[1] = h * (5.0 * f[0] + 8.0 * f[1] - f[2]) / 12.0;
    c[2] = c[1] + h * (-f[0] + 8.0 * f[1] + 5.0 * f[2]) / 12.0;
    return c;
  }
  const double s = h / 24.0;
  for (int i = 0; i < n - 1; ++i) {
    T step;
    if (i == 0)
      step = s * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]);
    else if (i == n - 2)
      step = s * (f[n - 4] - 5.0 * f[n - 3] + 19.0 * f[n - 2] + 9.0 * f[n - 1]);
    else
      step = s * (-f[i - 1] + 13.0 * f[i] + 13.0 * f[i + 1] - f[i + 2]);
    c[i + 1] = c[i] + step;
  }
  return c;
}

}  // namespace

Vec d1(const Vec& f, double h) { return d1_impl(f, h); }
Vec d2(const Vec& f, double h) { return d2_impl(f, h); }
CVec d1(const CVec& f, double h) { return d1_impl(f, h); }
CVec d2(const CVec& f, double h) { return d2_impl(f, h); }

Vec fd_weights(double x0, const Vec& x, int m) {
  // Fornberg (1988)
  const int n = int(x.size());
  std::vector<Vec> c(n, Vec(m + 1, 0.0));
  double c1 = 1.0, c4 = x[0] - x0;
  c[0][0] = 1.0;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - x0;
    for (int j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  Vec w(n);
  for (int i = 0; i < n; ++i) w[i] = c[i][m];
  return w;
}

Vec quad_weights(int m, double h) {
  if (m < 1) return Vec(std::max(m + 1, 1), 0.0);
  Vec w(m + 1, 1.0);
  switch (m) {
    case 1: w = {0.5, 0.5}; break;
    case 2: w = {1.0 / 3, 4.0 / 3, 1.0 / 3}; break;
    case 3: w = {3.0 / 8, 9.0 / 8, 9.0 / 8, 3.0 / 8}; break;
    case 4: w = {14.0 / 45, 64.0 / 45, 24.0 / 45, 64.0 / 45, 14.0 / 45}; break;
    default:
      w[0] = w[m] = 3.0 / 8;
      w[1] = w[m - 1] = 7.0 / 6;
      w[2] = w[m - 2] = 23.0 / 24;
  }
  for (double& v : w) v *= h;
  return w;
}

double integrate(const Vec& f, double h) {
  Vec w = quad_weights(int(f.size()) - 1, h);
  double s = 0;
  for (size_t i = 0; i < f.size(); ++i) s += w[i] * f[i];
  return s;
}

cplx integrate(const CVec& f, double h) {
  Vec w = quad_weights(int(f.size()) - 1, h);
  cplx s = 0;
  for (size_t i = 0; i < f.size(); ++i) s += w[i] * f[i];
  return s;
}

Vec cumulative(const Vec& f, double h) { return cumulative_impl(f, h); }
CVec cumulative(const CVec& f, double h) { return cumulative_impl(f, h); }

std::vector<std::pair<int, double>> fill_stencil(int n, int i) {
  int lo = i - 3, hi = i + 3;
  if (lo < 0) { hi -= lo; lo = 0; }
  if (hi > n - 1) { lo -= hi - (n - 1); hi = n - 1; }
  lo = std::max(lo, 0);
  Vec x;
  std::vector<int> idx;
  for (int j = lo; j <= hi; ++j)
    if (j != i) { x.push_back(double(j)); idx.push_back(j); }
  Vec w = fd_weights(double(i), x, 0);
  std::vector<std::pair<int, double>> out;
  for (size_t q = 0; q < idx.size(); ++q) out.emplace_back(idx[q], w[q]);
  return out;
}

int Interp::stencil(double x, double w[6]) const {
  int j0 = int(std::floor(x / h)) - 2;
  j0 = std::clamp(j0, 0, n - 6);
  const double s = x / h - j0;
  for (int a = 0; a < 6; ++a) {
    double v = 1.0;
    for (int b = 0; b < 6; ++b)
      if (b != a) v *= (s - b) / double(a - b);
    w[a] = v;
  }
  return j0;
}

double Interp::eval(const Vec& f, double x) const {
  double w[6];
  int j0 = stencil(x, w);
  double s = 0;
  for (int a = 0; a < 6; ++a) s += w[a] * f[j0 + a];
  return s;
}

Vec midpoints(const Vec& f) {
  const int n = int(f.size());
  Interp ip{1.0 / (n - 1), n};
  Vec m(n - 1);
  for (int i = 0; i + 1 < n; ++i) {
    // symmetric six-point weights in the interior
    if (i >= 2 && i + 3 < n)
      m[i] = (150.0 * (f[i] + f[i + 1]) - 25.0 * (f[i - 1] + f[i + 2]) + 3.0 * (f[i - 2] + f[i + 3])) /
             256.0;
    else
      m[i] = ip.eval(f, (i + 0.5) * ip.h);
  }
  return m;
}

PowerFit fit_power(const Vec& t, const Vec& y) {
  const size_t n = std::min(t.size(), y.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  Vec lx(n), ly(n);
  for (size_t i = 0; i < n; ++i) {
    lx[i] = std::log(t[i]);
    ly[i] = std::log(y[i]);
    sx += lx[i]; sy += ly[i]; sxx += lx[i] * lx[i]; sxy += lx[i] * ly[i];
  }
  PowerFit p;
  const double den = n * sxx - sx * sx;
  if (n < 2 || den == 0) return p;
  p.exponent = (n * sxy - sx * sy) / den;
  p.log_amp = (sy - p.exponent * sx) / n;
  double r = 0;
  for (size_t i = 0; i < n; ++i) {
    double e = ly[i] - p.log_amp - p.exponent * lx[i];
    r += e * e;
  }
  p.rms = std::sqrt(r / n);
  return p;
}

void gauss_legendre(int m, Vec& x, Vec& w) {
  x.assign(m, 0.0);
  w.assign(m, 0.0);
  for (int i = 0; i < (m + 1) / 2; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (m + 0.5)), dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1, p1 = 0;
      for (int j = 1; j <= m; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j - 1) * z * p1 - (j - 1.0) * p2) / j;
      }
      dp = m * (z * p0 - p1) / (z * z - 1);
      double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = -z;
    x[m - 1 - i] = z;
    w[i] = w[m - 1 - i] = 2.0 / ((1 - z * z) * dp * dp);
  }
}

BandLU::BandLU(int n, int bw, const std::function<double(int, int)>& entry)
    : n_(n), kl_(bw), ku_(bw), ldab_(2 * bw + bw + 1), ab_(size_t(ldab_) * n, 0.0), piv_(n) {
  for (int j = 0; j < n; ++j)
    for (int i = std::max(0, j - ku_); i <= std::min(n - 1, j + kl_); ++i)
      ab_[size_t(j) * ldab_ + kl_ + ku_ + i - j] = entry(i, j);
  int info = LAPACKE_dgbtrf(LAPACK_COL_MAJOR, n, n, kl_, ku_, ab_.data(), ldab_, piv_.data());
  if (info != 0) throw Error("SingularOperator", "banded factorization failed");
}

void BandLU::solve(Vec& rhs) const {
  LAPACKE_dgbtrs(LAPACK_COL_MAJOR, 'N', n_, kl_, ku_, 1, ab_.data(), ldab_, piv_.data(), rhs.data(), n_);
}

void BandLU::solve(CVec& rhs) const {
  std::vector<double> b(2 * size_t(n_));
  for (int i = 0; i < n_; ++i) {
    b[i] = rhs[i].real();
    b[n_ + i] = rhs[i].imag();
  }
  LAPACKE_dgbtrs(LAPACK_COL_MAJOR, 'N', n_, kl_, ku_, 2, ab_.data(), ldab_, piv_.data(), b.data(), n_);
  for (int i = 0; i < n_; ++i) rhs[i] = {b[i], b[n_ + i]};
}

void parallel_for(int n, const std::function<void(int)>& f) {
  const int nt = std::min(thread_count(), n);
  if (nt <= 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr err;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (int t = 0; t < nt; ++t)
    pool.emplace_back([&] {
      try {
        for (int i = next++; i < n; i = next++) f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(mu);
        if (!err) err = std::current_exception();
        next = n;
      }
    });
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace num
}  // namespace chd
