#pragma once

#include "tbg/hartree_fock.hpp"

namespace tbg {

// Exact diagonalization of the projected interacting Hamiltonian
// H = H0 - Hsub + H_I on a tiny k grid. Orbitals are (k, m) with
// orbital = 4*ik + m; determinants are occupation bitmasks over at most 16
// orbitals at fixed electron number N_e = 2 nk.
struct FockSpaceProblem {
  KGrid grid;
  int norb = 0;
  int nelec = 0;
  BlockSeq hcore;  // H0 - Hsub per k

  // Two-body vertex V[p,q,r,s] of H_I = 1/2 sum V f+_p f+_q f_s f_r, with
  // momentum conservation k_p + k_q = k_r + k_s (mod reciprocal) baked in.
  // Stored dense over orbital quadruples (norb <= 16 keeps this tiny).
  std::vector<cxd> vertex;
  cxd v(int p, int q, int r, int s) const {
    return vertex[((static_cast<size_t>(p) * norb + q) * norb + r) * norb + s];
  }

  size_t hilbertDim() const;
};

// Builds the second-quantized problem from the same ingredients the HF solver
// uses; refuses grids with more than 4 k points.
FockSpaceProblem build_problem(const FormFactorTensor& ff, const ScreenedPotential& pot,
                               const BlockSeq& h0, const BlockSeq& hsub, const KGrid& grid,
                               double moireCellArea);

struct EdResult {
  std::vector<double> energies;  // ascending, all requested roots (meV, total)
  MatX vectors;                  // columns in the determinant basis
  std::vector<uint32_t> dets;    // determinant bitmasks, basis order
  int groundDegeneracy = 0;      // eigenvalues within 1e-8 meV of the minimum
};

// Dense diagonalization, momentum-sector by momentum-sector (sectors indexed
// by total crystal momentum). With blocked=false the full Hamiltonian is
// diagonalized in one piece (used as a cross-check on the smallest grids).
EdResult ground_state(const FockSpaceProblem& prob, int nroots, bool blocked = true);

// <Psi_S | H | Psi_S> for the Slater determinant with per-k occupied orbital
// pairs given by a translation-invariant 1-RDM's occupied eigenvectors.
double slater_expectation(const FockSpaceProblem& prob, const OneRdm& P);

// E_corr = E_ED - E_HF per moire site (<= 0 by the variational principle).
double correlation_energy(const FockSpaceProblem& prob, double hfTotalEnergy);

}  // namespace tbg
