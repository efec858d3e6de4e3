#include "chd/singular.hpp"

#include <algorithm>
#include <cmath>

#include "chd/numerics.hpp"

namespace chd::num {

namespace {

// d^{p+1} (log|d| - 1/(p+1)) / (p+1), the antiderivative of d^p log|d|
double log_moment(int p, double d) {
  if (d == 0.0) return 0.0;
  const double q = p + 1.0;
  return std::pow(d, q) * (std::log(std::abs(d)) - 1.0 / q) / q;
}

}  // namespace

Vec singular_row(int i, double h, const Vec& u, double du_i, const SingularParts& parts) {
  const int n = int(u.size());
  Vec r(n, 0.0);
  const Vec wg = quad_weights(n - 1, h);
  const double xi = i * h, len = (n - 1) * h;

  if (parts.pole) {
    const Vec& q = *parts.pole;
    if (i == 0 || i == n - 1) {
      // callers only hit this when q vanishes near the wall
      for (int m = 0; m < n; ++m)
        if (m != i) r[m] += wg[m] * q[m] / (u[m] - u[i]);
    } else {
      Vec c = wg;
      c[i] = 0.0;
      for (auto [m, w] : fill_stencil(n, i)) c[m] += wg[i] * w;
      double sing = 0;
      for (int m = 0; m < n; ++m) {
        if (m == i) continue;
        r[m] += c[m] * q[m] / (u[m] - u[i]);
        sing += c[m] / ((m - i) * h);
      }
      r[i] += q[i] / du_i * (std::log((len - xi) / xi) - sing);
    }
  }

  if (parts.logc) {
    const Vec& g = *parts.logc;
    // log|u - u_i| = log|x - x_i| + log((u - u_i)/(x - x_i)); the second factor is smooth
    for (int m = 0; m < n; ++m) {
      if (m == i) continue;
      const double d = (m - i) * h;
      r[m] += wg[m] * g[m] * (std::log(std::abs(d)) + std::log((u[m] - u[i]) / d));
    }
    r[i] += wg[i] * g[i] * std::log(du_i);
    // cubic Taylor part of g f about x_i integrated exactly against log|x - x_i|
    int lo = std::clamp(i - 3, 0, n - 7);
    Vec nodes(7);
    for (int q = 0; q < 7; ++q) nodes[q] = double(lo + q);
    double fact = 1.0;
    for (int p = 0; p <= 3; ++p) {
      if (p > 0) fact *= p;
      double c = (log_moment(p, len - xi) - log_moment(p, -xi)) / fact;
      for (int m = 0; m < n; ++m) {
        if (m == i) continue;
        const double d = (m - i) * h;
        c -= wg[m] * std::pow(d, p) / fact * std::log(std::abs(d));
      }
      if (p == 0) {
        r[i] += c * g[i];
      } else {
        Vec s = fd_weights(double(i), nodes, p);
        const double hp = std::pow(h, p);
        for (int q = 0; q < 7; ++q) r[lo + q] += c * s[q] / hp * g[lo + q];
      }
    }
  }

  if (parts.left && i > 0) {
    const Vec wl = quad_weights(i, h);
    for (int m = 0; m <= i; ++m) r[m] += wl[m] * (*parts.left)[m];
  }
  if (parts.right && i < n - 1) {
    const Vec wr = quad_weights(n - 1 - i, h);
    for (int m = i; m < n; ++m) r[m] += wr[m - i] * (*parts.right)[m];
  }
  return r;
}

}  // namespace chd::num
