#include "qbeats/operators.hpp"

#include <cmath>

namespace qbeats {

namespace {

using Triplet = Eigen::Triplet<std::complex<double>>;
using cd = std::complex<double>;

constexpr cd iu{0.0, 1.0};

struct Builder {
  const SystemParams& p;
  const LevelScheme& scheme;
  int nv, nh, dim;

  int idx(int a, int v, int h) const { return (a * (nv + 1) + v) * (nh + 1) + h; }

  SparseOp from_triplets(std::vector<Triplet>& t) const {
    SparseOp m(dim, dim);
    m.setFromTriplets(t.begin(), t.end());
    m.makeCompressed();
    return m;
  }

  // |g><e| (x) I (x) I summed with weights.
  SparseOp atomic_lowering(const std::vector<std::pair<std::pair<int, int>, double>>& lines) const {
    std::vector<Triplet> t;
    for (const auto& [ge, w] : lines) {
      if (w == 0.0) continue;
      for (int v = 0; v <= nv; ++v)
        for (int h = 0; h <= nh; ++h)
          t.emplace_back(idx(ge.first, v, h), idx(ge.second, v, h), cd(w, 0.0));
    }
    return from_triplets(t);
  }

  SparseOp annihilation_v() const {
    std::vector<Triplet> t;
    for (int a = 0; a < n_atom_levels; ++a)
      for (int v = 1; v <= nv; ++v)
        for (int h = 0; h <= nh; ++h)
          t.emplace_back(idx(a, v - 1, h), idx(a, v, h), cd(std::sqrt(double(v)), 0.0));
    return from_triplets(t);
  }

  SparseOp annihilation_h() const {
    std::vector<Triplet> t;
    for (int a = 0; a < n_atom_levels; ++a)
      for (int v = 0; v <= nv; ++v)
        for (int h = 1; h <= nh; ++h)
          t.emplace_back(idx(a, v, h - 1), idx(a, v, h), cd(std::sqrt(double(h)), 0.0));
    return from_triplets(t);
  }

  SparseOp diagonal(const std::array<double, n_atom_levels>& atom_energy, double photon_energy) const {
    std::vector<Triplet> t;
    for (int a = 0; a < n_atom_levels; ++a)
      for (int v = 0; v <= nv; ++v)
        for (int h = 0; h <= nh; ++h) {
          double e = atom_energy[a] + photon_energy * (v + h);
          if (e != 0.0) t.emplace_back(idx(a, v, h), idx(a, v, h), cd(e, 0.0));
        }
    return from_triplets(t);
  }
};

}  // namespace

SystemOperators build_operators(const SystemParams& params, const LevelScheme& scheme,
                                double drive_scale) {
  params.validate();
  scheme.validate();
  if (drive_scale < 0) throw std::invalid_argument("build_operators: drive_scale must be >= 0");

  SystemOperators ops;
  ops.nv = params.n_max_v;
  ops.nh = params.n_max_h;
  ops.dim = n_atom_levels * (ops.nv + 1) * (ops.nh + 1);

  Builder b{params, scheme, ops.nv, ops.nh, ops.dim};

  ops.a_v = b.annihilation_v();
  ops.a_h = b.annihilation_h();

  ops.sigma_v = b.atomic_lowering({{{GMinus, EMinus}, scheme.pi_weight[0]},
                                   {{GZero, EZero}, scheme.pi_weight[1]},
                                   {{GPlus, EPlus}, scheme.pi_weight[2]}});
  ops.sigma_h = b.atomic_lowering({{{GZero, EPlus}, scheme.sigma_g0_eplus},
                                   {{GZero, EMinus}, scheme.sigma_g0_eminus},
                                   {{GMinus, EZero}, scheme.sigma_gminus_e0},
                                   {{GPlus, EZero}, scheme.sigma_gplus_e0}});
  ops.sigma_h_det = b.atomic_lowering({{{GZero, EPlus}, 1.0}, {{GZero, EMinus}, 1.0}});

  // Level energies in the rotating frame; cavity resonant with the bare
  // g0-e0 transition, so each photon carries excited_offset - delta_drive.
  std::array<double, n_atom_levels> energy{};
  energy[GMinus] = -params.delta_g;
  energy[GZero] = 0.0;
  energy[GPlus] = params.delta_g;
  energy[EMinus] = -params.delta_e + scheme.excited_offset - params.delta_drive;
  energy[EZero] = scheme.excited_offset - params.delta_drive;
  energy[EPlus] = params.delta_e + scheme.excited_offset - params.delta_drive;
  SparseOp h_diag = b.diagonal(energy, scheme.excited_offset - params.delta_drive);

  SparseOp coupling =
      (params.g * (SparseOp(ops.a_v.adjoint()) * ops.sigma_v + SparseOp(ops.sigma_v.adjoint()) * ops.a_v) +
       params.g * (SparseOp(ops.a_h.adjoint()) * ops.sigma_h + SparseOp(ops.sigma_h.adjoint()) * ops.a_h))
          .pruned();

  ops.drive_unit = (iu * (SparseOp(ops.a_v.adjoint()) - ops.a_v)).pruned();
  ops.drive_amplitude = params.kappa * params.alpha * drive_scale;

  ops.h_no_drive = (h_diag + coupling).pruned();
  ops.hamiltonian = (ops.h_no_drive + ops.drive_amplitude * ops.drive_unit).pruned();

  // Cavity outputs.
  double k2 = std::sqrt(2.0 * params.kappa);
  ops.jumps.push_back(k2 * ops.a_v);
  ops.jumps.push_back(k2 * ops.a_h);

  // Free-space decay, renormalized per excited state so each excited level
  // decays at gamma split branch_pi : branch_sigma.  Channels stay coherent
  // across transitions of equal polarization.
  auto transitions = scheme.transitions();
  std::array<double, n_atom_levels> w_pi{}, w_sigma{};
  for (const auto& t : transitions) {
    (t.pol == Polarization::Pi ? w_pi : w_sigma)[t.upper] += t.weight * t.weight;
  }
  auto spontaneous = [&](Polarization pol, double branch) {
    std::vector<std::pair<std::pair<int, int>, double>> lines;
    for (const auto& t : transitions) {
      if (t.pol != pol || t.weight == 0.0) continue;
      double wtot = (pol == Polarization::Pi) ? w_pi[t.upper] : w_sigma[t.upper];
      double rate = params.gamma * branch * t.weight * t.weight / wtot;
      lines.push_back({{t.lower, t.upper}, std::sqrt(rate)});
    }
    return b.atomic_lowering(lines);
  };
  if (params.branch_pi > 0) ops.jumps.push_back(spontaneous(Polarization::Pi, params.branch_pi));
  if (params.branch_sigma > 0) {
    ops.jumps.push_back(spontaneous(Polarization::SigmaPlus, params.branch_sigma));
    ops.jumps.push_back(spontaneous(Polarization::SigmaMinus, params.branch_sigma));
  }

  SparseOp decay(ops.dim, ops.dim);
  for (const auto& c : ops.jumps) decay += SparseOp(c.adjoint()) * c;
  ops.h_eff = (ops.hamiltonian - cd(0.0, 0.5) * decay).pruned();

  return ops;
}

DenseOp spontaneous_rate_operator(const SystemOperators& ops, std::size_t first_spont) {
  DenseOp sum = DenseOp::Zero(ops.dim, ops.dim);
  for (std::size_t k = first_spont; k < ops.jumps.size(); ++k)
    sum += DenseOp(SparseOp(ops.jumps[k].adjoint()) * ops.jumps[k]);
  return sum;
}

std::complex<double> atomic_matrix_element(const SystemOperators& ops, const DenseOp& rho,
                                           int bra_atom, int ket_atom) {
  std::complex<double> s = 0.0;
  for (int v = 0; v <= ops.nv; ++v)
    for (int h = 0; h <= ops.nh; ++h) s += rho(ops.index(bra_atom, v, h), ops.index(ket_atom, v, h));
  return s;
}

double top_fock_population_v(const SystemOperators& ops, const DenseOp& rho) {
  double s = 0.0;
  for (int a = 0; a < n_atom_levels; ++a)
    for (int h = 0; h <= ops.nh; ++h) s += rho(ops.index(a, ops.nv, h), ops.index(a, ops.nv, h)).real();
  return s;
}

double top_fock_population_h(const SystemOperators& ops, const DenseOp& rho) {
  double s = 0.0;
  for (int a = 0; a < n_atom_levels; ++a)
    for (int v = 0; v <= ops.nv; ++v) s += rho(ops.index(a, v, ops.nh), ops.index(a, v, ops.nh)).real();
  return s;
}

}  // namespace qbeats
