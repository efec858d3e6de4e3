#pragma once

#include <memory>
#include <string>

#include "chd/rayleigh.hpp"

namespace chd {

// Wave operators as dense kernels on the y grid; (A f)_i = sum_m A(i, m) f_m.
// Normalized so that all three reduce to the identity when (u'/theta)' = 0:
//   D    = b1 + shear b2 KD
//   D1   = b1 + b2 KD shear
//   Dinv = b1 + shear KI b2
// with KD f(y) = pv int e(y', y)/(u(y') - u(y)) f(y') dy' and
//      KI f(y) = pv int e(y, y')/(u(y) - u(y')) f(y') dy'.
struct WaveKernelSet {
  int k = 0, n = 0;
  double h = 0;
  std::shared_ptr<const HomSolutionTable> table;
  SpectralFunctions sf;
  EKernel ek;
  Vec b1, b2, shear;
  RMat KD, KI;
  RMat D, D1, Dinv;
  // singular values of D and D1 under the grid L2 pairing
  double d_max = 0, d_min = 0, d1_max = 0, d1_min = 0;
  double fitted_c() const;
  double e(int a, int b) const { return ek.e(a, b); }
};

WaveKernelSet build_wave_set(const ChannelProfile& p, int k, double near_threshold = 1e-8);

enum class WaveKind { forward, dual, inverse };
WaveKind parse_wave_kind(const std::string& s);

CVec apply_wave(const WaveKernelSet& set, WaveKind which, const CVec& f);
CVec apply_kernel(const RMat& a, const CVec& f);

// ||D(R omega) - u D(omega)|| / ||omega||, R omega = u omega - (u'/theta)' Dt^-1 omega.
double intertwine_residual(const ChannelProfile& p, const WaveKernelSet& set, const CVec& omega);
// |int D(omega) D1(g) - int omega g| / (||omega|| ||g||)
double duality_residual(const WaveKernelSet& set, const CVec& omega, const CVec& g);
// ||D Dinv f - f|| / ||f||
double inverse_residual(const WaveKernelSet& set, const CVec& f);
// max |D1 - Dinv^T| relative to max |D1|: entrywise, so O(h) near the diagonal
double adjoint_residual(const WaveKernelSet& set);
// |<D1 g, f> - <g, Dinv f>| / (||f|| ||g||) under the discrete L2 pairing
double adjoint_pairing_residual(const WaveKernelSet& set, const CVec& f, const CVec& g);

// D - D1 from the commutator of (u'/theta)' with KD.
RMat commutator_kernel(const WaveKernelSet& set);

// Decay of the Fourier transform of chi2 (D - Id) chi2 away from the diagonal:
// max |K(xi1, xi2)| at |xi1 - xi2| = m fitted by C exp(-lambda m^s).
struct DecayAudit {
  Vec offsets, amplitude;
  double C = 0, lambda = 0, s = 0.6, rms = 0;
};
DecayAudit kernel_decay_audit(const ChannelProfile& p, const WaveKernelSet& set, double s = 0.6);

// Row-major binary dump: "CHDK" magic, int32 k, int32 n_y, int32 element
// type (1 = float64), then n_y * n_y values.  CSV writes one row per line.
void write_kernel_binary(const std::string& path, const RMat& a, int k);
RMat read_kernel_binary(const std::string& path, int* k = nullptr);
void write_kernel_csv(const std::string& path, const RMat& a);

}  // namespace chd
