#pragma once

#include "chd/common.hpp"

namespace chd::num {

// Coefficient arrays of an integrand with a singular point at node i:
//   pole(x) f(x) / (u(x) - u_i)          principal value
// + logc(x) f(x) log|u(x) - u_i|
// + left(x) f(x) on [0, x_i], right(x) f(x) on [x_i, 1]   (one-sided smooth)
// Any of the pointers may be null.  pole, logc must be smooth through x_i.
struct SingularParts {
  const Vec* pole = nullptr;
  const Vec* logc = nullptr;
  const Vec* left = nullptr;
  const Vec* right = nullptr;
};

// Quadrature weights r with  integral ~ sum_m r[m] f[m]  on the uniform grid
// over [0, 1]; u is the increasing map in the denominators, du_i = u'(x_i).
Vec singular_row(int i, double h, const Vec& u, double du_i, const SingularParts& parts);

}  // namespace chd::num
