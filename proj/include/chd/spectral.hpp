#pragma once

#include <memory>

#include "chd/common.hpp"

namespace chd {

// Fourier modes k = 0..K of a real field on [0, 2 pi) x [0, 1]:
//   f(x, y) = sum_{|k| <= K} f_k(y) e^{ikx},  f_{-k} = conj(f_k).
// Row k of a ModeField holds f_k over the y grid.
using ModeField = Mat<cplx>;

// Physical samples at x_j = 2 pi j / M; row i is the x-line at y_i.
using PhysField = Mat<double>;

class Spectral {
public:
  Spectral(int K, int M, int n);
  ~Spectral();
  Spectral(const Spectral&) = delete;
  Spectral& operator=(const Spectral&) = delete;

  int K() const { return K_; }
  int M() const { return M_; }
  int n() const { return n_; }

  PhysField to_phys(const ModeField& f) const;
  ModeField to_modes(const PhysField& f) const;  // keeps k <= K
  ModeField dx(const ModeField& f) const;
  ModeField dy(const ModeField& f, double h) const;
  ModeField zeros() const { return ModeField(K_ + 1, n_); }

private:
  struct Plans;
  int K_, M_, n_;
  std::unique_ptr<Plans> plans_;
};

// Dealiased product: modes of the product of two mode fields.
ModeField product(const Spectral& sp, const ModeField& a, const ModeField& b);

}  // namespace chd
