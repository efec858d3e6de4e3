#pragma once

#include <string>

#include "chd/numerics.hpp"
#include "chd/profiles.hpp"
#include "chd/spectral.hpp"

namespace chd {

enum class Bc { dirichlet, neumann };
Bc parse_bc(const std::string& s);
const char* bc_name(Bc bc);

// Solutions of (h1 q')' = k^2 h2 q anchored at the walls:
// qa(0) = 1, qa'(0) = 0 and qb(1) = 1, qb'(1) = 0.  pa = h1 qa', pb = h1 qb'.
struct QSolutions {
  int k = 0;
  Vec qa, pa, qb, pb;
  Vec wronskian;             // pa qb - qa pb, constant in exact arithmetic
  double wronskian_spread = 0;  // max relative deviation from its mean
};

// Marches log q and h1 q'/q once e^{|k|} would overflow.
QSolutions q_solutions(const Vec& h1, const Vec& h2, int k);

// Fourth-order discretization of the positive operator  -(h1 Q')' + k^2 h2 Q
// on the uniform grid, with the boundary rows replaced by the boundary condition.
class SturmOperator {
public:
  SturmOperator() = default;
  SturmOperator(const Vec& h1, const Vec& h2, int k, Bc bc);
  SturmOperator(const Vec& h1, const Vec& dh1, const Vec& h2, int k, Bc bc);

  int n() const { return n_; }
  int k() const { return k_; }
  Bc bc() const { return bc_; }
  double entry(int i, int j) const;
  Vec apply(const Vec& q) const;
  CVec apply(const CVec& q) const;
  // Solves in place; boundary entries of the right-hand side are overwritten
  // with homogeneous data.
  void solve(Vec& f) const;
  void solve(CVec& f) const;

private:
  struct Row {
    int start = 0;
    double w[6] = {0, 0, 0, 0, 0, 0};
    int len = 0;
  };
  void build(const Vec& h1, const Vec& dh1, const Vec& h2);
  int n_ = 0, k_ = 0;
  Bc bc_ = Bc::dirichlet;
  double h_ = 0;
  std::vector<Row> rows_;
  num::BandLU lu_;
};

struct GreenKernelSet {
  int k = 0;
  Bc bc = Bc::dirichlet;
  Vec h1, h2;
  QSolutions q;
  RMat G;      // from the homogeneous solutions
  RMat G_fd;   // inverse of the discrete operator over the quadrature weights
  double discrepancy = 0;         // max |G - G_fd|, interior columns
  double identity_residual = 0;   // max |A G_fd W - I| over interior rows
  double action_discrepancy = 0;  // max |int G f - A^-1 f| over smooth f
};

// int G(y, y') f(y') dy' with the quadrature split at the kink y' = y.
Vec green_apply(const GreenKernelSet& g, const Vec& f);

// Kernel of the inverse of -(h1 Q')' + k^2 h2 Q; the laboratory's elliptic
// operators d(h1 d) - k^2 h2 invert to minus this kernel.
GreenKernelSet green_kernel(const Vec& h1, const Vec& h2, int k, Bc bc);
// Coefficients 1/theta (Dirichlet, stream function) or theta (Neumann, pressure).
GreenKernelSet green_kernel(const ChannelProfile& p, int k, Bc bc);

// Solves d(theta^-1 d psi) - k^2 theta^-1 psi = omega_tilde, psi = 0 at the walls.
class StreamSolver {
public:
  StreamSolver(const ChannelProfile& p, int k);
  CVec solve(const CVec& omega_tilde) const;
  const SturmOperator& op() const { return op_; }

private:
  SturmOperator op_;
};

CVec solve_stream(const ChannelProfile& p, int k, const CVec& omega_tilde, CVec* ux = nullptr);

// Pressure of the perturbed flow.  Modes k = 0..K of real fields in x, each a
// row over the y grid.  The nonzero modes solve div((theta + d) grad P) = rhs with
// dP/dy = 0 at the walls; the mean mode only enters through dP0/dy, fixed by
//   (theta + P0 d) dP0/dy + P0[(d - P0 d) dP/dy] = -mean_accel,
// where mean_accel is the x-mean of U.grad U^y.
struct PressureResult {
  ModeField P;  // row 0 holds the mean mode of dP/dy, rows k >= 1 hold P_k
  int iterations = 0;
  double residual = 0;
};

// ops, if given, holds the Neumann operators for k = 0..K (entry 0 unused).
PressureResult solve_pressure(const ChannelProfile& p, const Spectral& sp, const ModeField& d,
                              const ModeField& rhs, const Vec& mean_accel, double tol = 1e-10,
                              int max_iter = 100, const std::vector<SturmOperator>* ops = nullptr);
std::vector<SturmOperator> pressure_operators(const ChannelProfile& p, int K);

}  // namespace chd
