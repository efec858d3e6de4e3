#pragma once

#include <string>
#include <vector>

#include "chd/profiles.hpp"
#include "chd/spectral.hpp"
#include "chd/sturm.hpp"

namespace chd {

// omega~ = omega/theta - theta'/theta^2 d_y psi for one Fourier mode, and back.
CVec good_unknown(const ChannelProfile& p, const CVec& omega, const CVec& psi);
CVec from_good_unknown(const ChannelProfile& p, const CVec& omega_tilde, const CVec& psi);

// ---- linear evolution of a single mode k of the good unknown ----

struct LinearTrajectory {
  int k = 0;
  Vec t;
  std::vector<CVec> omega_tilde, psi;
  int steps = 0;
};

// Method of lines for d_t w = -ik(u w - (u'/theta)' psi), psi = Dtilde_k^-1 w,
// classical RK4 with step dt; snapshots at the requested times (increasing,
// >= 0), reached exactly by shortening the last step before each.
// CFLViolation if dt > 0.5 / (|k| max|u|).
LinearTrajectory evolve_linear(const ChannelProfile& p, int k, const CVec& omega_tilde0, const Vec& times, double dt);

// Same snapshots from the spectral representation, no time stepping.
std::vector<CVec> evolve_linear_spectral(const ChannelProfile& p, int k, const CVec& omega_tilde0, const Vec& times);

// sqrt(int |f|^2 dy), fourth-order quadrature
double l2_norm(const CVec& f, double h);
double rel_l2_diff(const CVec& a, const CVec& b, double h);

// ---- nonlinear perturbation system on T x [0, 1] ----

struct NonlinearConfig {
  int K = 32, M = 128;     // retained modes, x samples (M > 3K dealiases products)
  double cfl = 0.5;        // dt = cfl / (K max|u|) unless dt > 0
  double dt = 0;
  double margin = 0.02;    // allowed spill past [2 kappa0, 1 - 2 kappa0]
  double support_tol = 1e-8;  // relative to the initial sup of omega and d
  double sample_dt = 0.5;
  double pressure_tol = 1e-12;
};

struct FieldState {
  double t = 0;
  ModeField omega, d;  // rows k = 0..K; the mean rows are real
  Vec phi;             // Phi(t, y) = int_0^t x-mean of U^x
};

struct DiagSeries {
  Vec t, uy, ux_neq, psi_neq, energy, supp_lo, supp_hi, scat_dist;
  Vec ux_mean;            // |P0 U^x(t) - P0 U^x(T)|, filled at the end of a run
  std::vector<Vec> mean_dy_psi;  // x-mean of d_y psi at each sample, for coord_map
};

class NonlinearSolver {
public:
  NonlinearSolver(const ChannelProfile& p, const NonlinearConfig& cfg);
  const Spectral& spectral() const { return sp_; }
  const NonlinearConfig& config() const { return cfg_; }
  double default_dt() const;

  FieldState initial_state(const ModeField& omega, const ModeField& d) const;
  ModeField stream(const ModeField& omega) const;
  // time derivatives of omega, d, phi
  FieldState rhs(const FieldState& s) const;
  // one RK4 step; DensityTooLarge, SupportBreach (absolute tolerance tol), NonFinite
  FieldState step(const FieldState& s, double dt, double tol) const;

  double energy(const FieldState& s) const;
  // support of max(|omega|, |d|) above tol: first and last y, or NaN if none
  std::pair<double, double> support(const FieldState& s, double tol) const;
  // pullback omega(t, x + t u + Phi, y) by modes
  ModeField pullback(const FieldState& s) const;
  // sqrt(2 pi sum_k int |f_k|^2) over all modes, or k != 0 only
  double norm(const ModeField& f, bool skip_mean = false) const;

private:
  const ChannelProfile& p_;
  NonlinearConfig cfg_;
  Spectral sp_;
  std::vector<SturmOperator> poisson_, pressure_ops_;
  Vec quad_;
};

FieldState step_nonlinear(const NonlinearSolver& solver, const FieldState& s, double dt);

struct NonlinearRun {
  DiagSeries diag;
  std::vector<FieldState> samples;
  int steps = 0;
  double dt = 0;
  double max_mean_drift = 0;  // |int int omega| and |int int d| change
};

// Marches to T and records diagnostics every sample_dt.  scat_dist at sample i
// is |W(t_i) - W(t_{i/2})| (index halved, rounded down).
NonlinearRun run_nonlinear(const ChannelProfile& p, const NonlinearConfig& cfg, const FieldState& init, double T,
                           bool keep_samples = true);

// Compactly supported test data of size eps: Gevrey bumps on [3 kappa0, 1 - 3 kappa0]
// in y times x modes k_lo and k_lo + 1.
std::pair<ModeField, ModeField> bump_initial_data(const ChannelProfile& p, int K, double eps, int k_lo = 1);

// ---- diagnostics ----

struct CoordState {
  double t = 0;
  Vec v, dyv, dtv, phi, h;
};

// v = u - (chi1 / t) int_0^t P0(d_y psi), Phi = -int_0^t P0(d_y psi), running
// trapezoid over the samples; d_t v by differences in time.
std::vector<CoordState> coord_map(const ChannelProfile& p, const Vec& t, const std::vector<Vec>& mean_dy_psi);

// W_k(t, y) = omega_k e^{ik(t u + Phi)} for every sample
std::vector<ModeField> scattering_profile(const ChannelProfile& p, const std::vector<FieldState>& samples);

struct DampingFit {
  double t_lo = 0, t_hi = 0;
  int samples = 0;
  num::PowerFit uy, ux_neq, ux_mean;
};
// least-squares slopes over t in [t_lo, t_hi]; WindowTooShort unless >= 10
// samples spanning a decade
DampingFit damping_rates(const DiagSeries& d, double t_lo, double t_hi);
num::PowerFit fit_window(const Vec& t, const Vec& y, double t_lo, double t_hi);

// columns t, Uy_L2, Ux_neq_L2, psi_neq_L2, energy, supp_lo, supp_hi, scat_dist
void write_diagnostics_csv(const std::string& path, const DiagSeries& d);
// "CHDF", double t, int32 K, int32 n_y, then omega and d, k-major rows of
// complex (re, im) doubles, then Phi (n_y doubles; optional on read, zero if absent)
void write_field_dump(const std::string& path, const FieldState& s);
FieldState read_field_dump(const std::string& path);

}  // namespace chd
