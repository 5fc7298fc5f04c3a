#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <complex>
#include <vector>

#include "qbeats/level_scheme.hpp"
#include "qbeats/params.hpp"

namespace qbeats {

using SparseOp = Eigen::SparseMatrix<std::complex<double>>;
using DenseOp = Eigen::MatrixXcd;

// Hamiltonian and jump operators over atom (x) Fock(V) (x) Fock(H), in the
// drive rotating frame.  The drive enters as i*kappa*alpha*scale*(aV^ - aV),
// which fills the empty cavity to amplitude alpha*scale.
struct SystemOperators {
  int nv = 0, nh = 0, dim = 0;

  SparseOp hamiltonian;  // full H at the requested drive scale
  std::vector<SparseOp> jumps;  // sqrt(2k) aV, sqrt(2k) aH, then spontaneous channels
  SparseOp h_eff;        // H - (i/2) sum C^C

  // Pieces used by the propagation engines.
  SparseOp h_no_drive;   // H with the drive term removed
  SparseOp drive_unit;   // i (aV^ - aV); drive term = kappa*alpha*scale * drive_unit
  SparseOp a_v, a_h;
  SparseOp sigma_v;      // atomic pi lowering operator lifted to the full space
  SparseOp sigma_h;      // atomic sigma lowering operator (full H coupling)
  SparseOp sigma_h_det;  // detection form |g0><e+| + |g0><e-|
  double drive_amplitude = 0.0;  // kappa*alpha*scale actually applied

  int index(int atom, int v, int h) const { return (atom * (nv + 1) + v) * (nh + 1) + h; }
};

SystemOperators build_operators(const SystemParams& params, const LevelScheme& scheme,
                                double drive_scale);

// sum of C^C over the spontaneous channels only (sum rule diagnostics).
DenseOp spontaneous_rate_operator(const SystemOperators& ops, std::size_t first_spont = 2);

// Trace over the cavity modes: <a| Tr_field rho |b> for atomic levels a, b.
std::complex<double> atomic_matrix_element(const SystemOperators& ops, const DenseOp& rho,
                                           int bra_atom, int ket_atom);

// Population of the highest retained Fock level of each mode (truncation check).
double top_fock_population_v(const SystemOperators& ops, const DenseOp& rho);
double top_fock_population_h(const SystemOperators& ops, const DenseOp& rho);

}  // namespace qbeats
