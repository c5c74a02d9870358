#pragma once

#include <optional>

#include "tbg/continuum.hpp"

namespace tbg {

// Double-gate screened Coulomb potential. epsilon is the relative
// permittivity, d the gate distance in Angstrom.
struct ScreenedPotential {
  double epsilon = 10.79;
  double d = 300.0;
};

// V(q) in meV * Angstrom^2, with e^2/(4 pi eps0) folded in. The q -> 0 limit
// is handled analytically: V(0) = prefactor * (2 pi / eps) * d/2.
double v_hat(const ScreenedPotential& pot, const Vec2& q);

enum class GaugeTag { Raw, SublatticePolarized };

// Flat-band envelopes on a Monkhorst-Pack grid: two states per valley per k.
// Coefficients are stored per valley over the plane-wave basis (dim 4*ng);
// the K' states are built from the K states through time reversal,
// u_K'(G) = conj(u_K(-G)), which realizes the valleyful conjugation relation
// exactly. State order within a valley is (band 1, band 2) in the raw gauge
// and (A, B) after sublattice polarization.
struct FlatBandSet {
  MoireGeometry geom;
  PlaneWaveBasis basis;
  KGrid grid;
  GaugeTag gauge = GaugeTag::Raw;
  std::vector<MatX> cK;    // per k: dim x 2
  std::vector<MatX> cKp;   // per k: dim x 2
  std::vector<Eigen::Vector4d> eps;  // energies (meV) in state order (K1,K2,K'1,K'2)
  double minRemoteGap = 0.0;         // smallest flat-to-remote gap over the grid
  double maxFlatSpread = 0.0;        // largest flat-band spread over the grid

  int nk() const { return grid.size(); }
  // Coefficient of state m in {0..3} = ((K,0),(K,1),(K',0),(K',1)).
  const MatX& block(int ik, int valley) const { return valley == 0 ? cK[ik] : cKp[ik]; }
};

// Diagonalize the model on the grid and keep the two middle bands per valley.
// Throws when the flat bands touch the remote bands anywhere on the grid.
FlatBandSet compute_flat_bands(const ModelSpec& spec, const MoireGeometry& geom,
                               const PlaneWaveBasis& basis, const KGrid& grid);

// Pair products rho_{k,k'}(G)[m,n] = sum_{G',s,l} conj(u_{mk}(G')) u_{nk'}(G'+G),
// i.e. the Fourier coefficients (1/|Gamma_m|) int e^{-iG.r} conj(u_m) u_n with
// u(r) = sum_G e^{iG.r} u(G). Valley off-diagonal entries are structural zeros.
struct FormFactorTensor {
  KGrid grid;
  std::vector<Vec2i> gset;   // interaction G list (moire reciprocal coordinates)
  std::vector<Vec2> gvecs;
  std::vector<Mat4> rho;     // [(ik*nk + ikp)*nG + ig]
  int nG() const { return static_cast<int>(gset.size()); }
  const Mat4& at(int ik, int ikp, int ig) const {
    return rho[(static_cast<size_t>(ik) * grid.size() + ikp) * gset.size() + ig];
  }
  int gIndex(const Vec2i& mn) const;  // -1 when absent
};

// gcut is in units of |b1|; it must not exceed twice the basis cutoff (beyond
// that every coefficient overlap is empty).
FormFactorTensor form_factors(const FlatBandSet& bands, double gcut);

}  // namespace tbg
