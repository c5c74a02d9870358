#pragma once

#include "tbg/form_factors.hpp"

namespace tbg {

// Per-k unitaries mapping the raw flat-band basis to the (valley, sublattice)
// labeled basis, 2x2 block diagonal in valley. After application the basis
// order is ((K,A),(K,B),(K',A),(K',B)).
struct GaugeUnitaries {
  std::vector<Mat4> U;
  int pivotA = -1, pivotB = -1;  // selected basis columns at the anchor k
  double pivotRatio = 0.0;
  bool pivotAmbiguous = false;   // ratio < 1.1; labels fell back to weight argmax
};

// SCDM-k gauge: column-pivoted QR on the anchor-k density-matrix columns
// (anchor = the Gamma_m grid point), propagated to every k by projection and
// Loewdin orthogonalization. Phases are then normalized so that the nu_x T
// sewing matrix is the plain valley swap and the C2zT sewing phases obey
// beta = b_K conj(b_K') = -1.
GaugeUnitaries scdm_gauge(const FlatBandSet& bands);

// Rotate a flat-band set into the gauge; marks it SublatticePolarized.
FlatBandSet apply_gauge(const FlatBandSet& bands, const GaugeUnitaries& g);

// Translation-invariant 1-RDM: a 4x4 Hermitian block per k.
struct OneRdm {
  std::vector<Mat4> P;

  int nk() const { return static_cast<int>(P.size()); }
  double totalTrace() const;
  double hermitianDefect() const;
  double projectorDefect() const;
};

enum class CandidateState { QH, VH, VP, KIVC, TIVC };

CandidateState candidate_from_name(const std::string& name);
std::string candidate_name(CandidateState s);

// The five chiral-limit candidate 1-RDMs in the sublattice-polarized basis;
// P(k) is the same 4x4 projector of trace 2 at every k.
OneRdm candidate_state(CandidateState which, double phi, const KGrid& grid);
Mat4 candidate_block(CandidateState which, double phi);

struct SewingMatrix {
  Symmetry sym;
  std::vector<Mat4> B;
  double maxUnitarityDefect = 0.0;
};

// B_k(S)_{mn} = <u_{mk}, S u_{nk}> for the antiunitary symmetry S acting on
// the envelope coefficients. All three symmetries preserve the relative
// wave-vector under the opposite-orientation K' convention used here; the
// order parameters for nu_x T / nu_y T still compare against P(-k) as
// displayed. Requires the grid to be closed under k -> -k, which every
// Monkhorst-Pack grid is.
SewingMatrix sewing_matrix(const FlatBandSet& bands, Symmetry sym);

// O_S = (1/N_K) sum_k || B_k conj(P(k_S)) B_k^{-1} - P(k) ||_F / 2 with
// k_S = -k for the valley-swapping symmetries and k otherwise. The 1/2
// normalization of the Frobenius norm is fixed operationally by Table 1.
double order_parameter(const OneRdm& P, const SewingMatrix& B, const KGrid& grid);

struct OrderParameters {
  double c2zt = 0.0, nuxT = 0.0, nuyT = 0.0;
};

OrderParameters all_order_parameters(const OneRdm& P, const FlatBandSet& bands);

}  // namespace tbg
