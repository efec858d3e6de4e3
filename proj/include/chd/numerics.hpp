#pragma once

#include <functional>

#include "chd/common.hpp"

namespace chd::num {

// 4th-order finite differences on a uniform grid (one-sided near the ends).
// Stencils are written as sums of differences so constants map to exact zeros.
Vec d1(const Vec& f, double h);
Vec d2(const Vec& f, double h);
CVec d1(const CVec& f, double h);
CVec d2(const CVec& f, double h);

// Fornberg weights: derivative of order `m` at x0 from values at nodes x.
Vec fd_weights(double x0, const Vec& x, int m);

// Weights of a 4th-order rule on `m` equal intervals of width h (m >= 1).
// Small m use Newton-Cotes, m >= 5 the Gregory end-corrected trapezoid.
Vec quad_weights(int m, double h);

double integrate(const Vec& f, double h);
cplx integrate(const CVec& f, double h);

// Running integral from the first node, 4th order per interval.
Vec cumulative(const Vec& f, double h);
CVec cumulative(const CVec& f, double h);

// Six-point Lagrange value at node i from its neighbours, skipping node i.
// Returns (node, weight) pairs; used to fill removable 0/0 points.
std::vector<std::pair<int, double>> fill_stencil(int n, int i);

template <class T>
T fill_value(const std::vector<T>& f, int i) {
  T s{};
  for (auto [j, w] : fill_stencil(int(f.size()), i)) s += w * f[j];
  return s;
}

// Six-point interpolation of grid data at arbitrary x in [0, 1].
struct Interp {
  double h;
  int n;
  double eval(const Vec& f, double x) const;
  // Node index and weights, for repeated evaluation at the same x.
  int stencil(double x, double w[6]) const;
};

// Values halfway between consecutive nodes (n-1 entries).
Vec midpoints(const Vec& f);

// Least-squares line through (log t, log y).
struct PowerFit {
  double exponent = 0, log_amp = 0, rms = 0;
};
PowerFit fit_power(const Vec& t, const Vec& y);

// Gauss-Legendre nodes/weights on [-1, 1].
void gauss_legendre(int m, Vec& x, Vec& w);

// Banded LU factorization (LAPACK general band storage) reused across solves.
class BandLU {
public:
  BandLU() = default;
  // A given as dense rows restricted to |i-j| <= bw.
  BandLU(int n, int bw, const std::function<double(int, int)>& entry);
  void solve(Vec& rhs) const;
  void solve(CVec& rhs) const;
  int size() const { return n_; }

private:
  int n_ = 0, kl_ = 0, ku_ = 0, ldab_ = 0;
  std::vector<double> ab_;
  std::vector<int> piv_;
};

// Run f(i) for i in [0, n), split over thread_count() workers.
void parallel_for(int n, const std::function<void(int)>& f);

}  // namespace chd::num
