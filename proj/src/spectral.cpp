#include "chd/spectral.hpp"

#include <fftw3.h>

#include <cstring>
#include <mutex>

#include "chd/numerics.hpp"

namespace chd {

namespace {
std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct Spectral::Plans {
  fftw_plan fwd = nullptr, bwd = nullptr;
  double* real = nullptr;
  fftw_complex* spec = nullptr;
};

Spectral::Spectral(int K, int M, int n) : K_(K), M_(M), n_(n), plans_(std::make_unique<Plans>()) {
  if (K < 0 || M < 2 * K + 2 || n < 2) fail("RangeError", "spectral grid too small for the requested modes");
  const int hc = M / 2 + 1;
  std::lock_guard<std::mutex> lk(plan_mutex());
  plans_->real = fftw_alloc_real(size_t(M) * n);
  plans_->spec = fftw_alloc_complex(size_t(hc) * n);
  int len[1] = {M};
  plans_->fwd = fftw_plan_many_dft_r2c(1, len, n, plans_->real, nullptr, 1, M, plans_->spec, nullptr, 1, hc,
                                       FFTW_ESTIMATE);
  plans_->bwd = fftw_plan_many_dft_c2r(1, len, n, plans_->spec, nullptr, 1, hc, plans_->real, nullptr, 1, M,
                                       FFTW_ESTIMATE);
}

Spectral::~Spectral() {
  std::lock_guard<std::mutex> lk(plan_mutex());
  fftw_destroy_plan(plans_->fwd);
  fftw_destroy_plan(plans_->bwd);
  fftw_free(plans_->real);
  fftw_free(plans_->spec);
}

PhysField Spectral::to_phys(const ModeField& f) const {
  const int hc = M_ / 2 + 1;
  std::memset(plans_->spec, 0, sizeof(fftw_complex) * size_t(hc) * n_);
  for (int k = 0; k <= K_ && k < f.rows; ++k)
    for (int i = 0; i < n_; ++i) {
      // the mean mode of a real field is real
      const cplx v = k == 0 ? cplx(f(0, i).real(), 0.0) : f(k, i);
      plans_->spec[size_t(i) * hc + k][0] = v.real();
      plans_->spec[size_t(i) * hc + k][1] = v.imag();
    }
  fftw_execute(plans_->bwd);
  PhysField out(n_, M_);
  std::memcpy(out.a.data(), plans_->real, sizeof(double) * size_t(M_) * n_);
  return out;
}

ModeField Spectral::to_modes(const PhysField& f) const {
  const int hc = M_ / 2 + 1;
  std::memcpy(plans_->real, f.a.data(), sizeof(double) * size_t(M_) * n_);
  fftw_execute(plans_->fwd);
  ModeField out(K_ + 1, n_);
  const double s = 1.0 / M_;
  for (int k = 0; k <= K_; ++k)
    for (int i = 0; i < n_; ++i)
      out(k, i) = s * cplx(plans_->spec[size_t(i) * hc + k][0], plans_->spec[size_t(i) * hc + k][1]);
  for (int i = 0; i < n_; ++i) out(0, i) = out(0, i).real();
  return out;
}

ModeField Spectral::dx(const ModeField& f) const {
  ModeField out(f.rows, f.cols);
  for (int k = 0; k < f.rows; ++k)
    for (int i = 0; i < f.cols; ++i) out(k, i) = cplx(0, k) * f(k, i);
  return out;
}

ModeField Spectral::dy(const ModeField& f, double h) const {
  ModeField out(f.rows, f.cols);
  for (int k = 0; k < f.rows; ++k) {
    CVec r(f.row(k), f.row(k) + f.cols);
    CVec d = num::d1(r, h);
    std::copy(d.begin(), d.end(), out.row(k));
  }
  return out;
}

ModeField product(const Spectral& sp, const ModeField& a, const ModeField& b) {
  PhysField pa = sp.to_phys(a), pb = sp.to_phys(b);
  for (size_t q = 0; q < pa.a.size(); ++q) pa.a[q] *= pb.a[q];
  return sp.to_modes(pa);
}

}  // namespace chd
