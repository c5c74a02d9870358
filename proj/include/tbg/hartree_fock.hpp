#pragma once

#include "tbg/gauge.hpp"

namespace tbg {

// One- and two-body ingredients of the projected interacting model, all in
// the current gauge of the band set they were built from.
using BlockSeq = std::vector<Mat4>;  // one 4x4 per k

// H0(k) = U(k)^dag diag(eps) U(k): flat-band energies rotated by the
// accumulated gauge. In the raw gauge this is diagonal.
BlockSeq h0_matrix(const FlatBandSet& bands, const GaugeUnitaries* gauge = nullptr);

// Coulomb operator J[P](k) = (1/|supercell|) sum_G V(G)
//   [sum_k' tr(rho_{k'k'}(-G) P(k'))] rho_{kk}(G).
BlockSeq hartree(const OneRdm& P, const FormFactorTensor& ff, const ScreenedPotential& pot,
                 double moireCellArea);

// Exchange operator K[P](k) = (1/|supercell|) sum_{k',G} V(k'-k+G)
//   rho_{k,k'}(G) P(k') rho_{k,k'}(G)^dag.
BlockSeq fock_exchange(const OneRdm& P, const FormFactorTensor& ff, const ScreenedPotential& pot,
                       double moireCellArea);

// Average subtraction H_sub = J[P0] - K[P0] with P0 = I/2 at every k.
BlockSeq subtraction(const FormFactorTensor& ff, const ScreenedPotential& pot,
                     double moireCellArea);

// E = sum_k tr[(H0 - Hsub) P] + 1/2 sum_k tr[(J - K) P], in meV (total, not
// per site). The one-half counts <H_I> = tr((J-K)P)/2 once.
double hf_energy(const OneRdm& P, const BlockSeq& H0, const BlockSeq& Hsub, const BlockSeq& J,
                 const BlockSeq& K);

struct ScfOptions {
  int maxIter = 500;
  double tolCommutator = 1e-8;   // on ||[F,P]||_F / ||F||_F
  double tolEnergyPerSite = 1e-9;  // meV per moire site
  double mixing = 0.3;           // linear fallback mixing on the Fock matrix
  int diisHistory = 8;
};

struct ScfReport {
  double totalEnergy = 0.0;       // meV
  double energyPerSite = 0.0;     // meV per moire site
  double homoLumoGap = 0.0;       // meV
  int iterations = 0;
  bool converged = false;
  double finalCommutator = 0.0;   // ||[F,P]|| / ||F||
  bool fermiDegenerate = false;   // degeneracy at the occupation edge hit
  bool perKFermiMismatch = false; // global aufbau would differ from per-k filling
  std::vector<double> energyTrace;
  std::vector<double> commutatorTrace;
  std::vector<double> gapTrace;
};

struct ScfProblem {
  BlockSeq H0;
  BlockSeq Hsub;
  const FormFactorTensor* ff = nullptr;
  ScreenedPotential pot;
  double moireCellArea = 0.0;
};

// Self-consistent field with fixed two electrons per k (translation-invariant
// sector), Pulay mixing on the Fock matrices with a monotone accepted-step
// policy, and overlap tie-breaking at a degenerate occupation edge.
std::pair<OneRdm, ScfReport> scf_solve(const OneRdm& init, const ScfProblem& prob,
                                       const ScfOptions& opts = {});

// Fock matrix F[P](k) = H0 - Hsub + J[P] - K[P].
BlockSeq fock_matrix(const OneRdm& P, const ScfProblem& prob);

// min over unoccupied Fock eigenvalues minus max over occupied, across all k,
// with the fixed per-k filling of two.
double homo_lumo_gap(const BlockSeq& F, const OneRdm& P);

double commutator_norm(const BlockSeq& F, const OneRdm& P);

// CSV trace of an SCF run: iteration, energy, commutator, gap.
void write_scf_trace(const ScfReport& rep, const std::string& path);

// Converged 1-RDM serialized as JSON with complex entries as [re, im].
void write_rdm_json(const OneRdm& P, const std::string& gaugeTag, const std::string& path);
OneRdm read_rdm_json(const std::string& path);

}  // namespace tbg
