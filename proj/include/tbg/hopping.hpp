#pragma once

#include <array>
#include <string>

#include "tbg/geometry.hpp"
#include "tbg/types.hpp"

namespace tbg {

using Mat2c = Eigen::Matrix2cd;

// A 2x2 complex matrix together with its k-gradient (a 2x2 matrix of complex
// 2-vectors), i.e. M(k) = M + Mgrad . k.
struct HopMatrix {
  Mat2c m = Mat2c::Zero();         // meV
  std::array<Mat2c, 2> grad{};     // meV * Angstrom, grad[0] = d/dkx, grad[1] = d/dky

  Mat2c at(const Vec2& k) const { return m + grad[0] * k.x() + grad[1] * k.y(); }
  HopMatrix adjoint() const;
};

// Parameters of the relaxed continuum model: corrected-Dirac constants plus
// 12 intralayer hop matrices per layer and 12 interlayer hop matrices, on the
// hop sets produced by hop_shells().
struct HoppingTables {
  double theta_deg = 0.0;  // twist angle the tables were computed at
  double v = 0.0;          // meV * Angstrom
  double v1 = 0.0;         // meV * Angstrom^2
  double v2 = 0.0;         // meV * Angstrom^2
  std::array<double, 2> sinTheta{};  // sin(theta_l) per layer
  std::array<std::array<HopMatrix, 12>, 2> intra;  // [layer][hop j]
  std::array<HopMatrix, 12> inter;                 // [hop j]
};

// Per-step C3 completion: rotating a hop by 120 degrees keeps AA/BB entries,
// multiplies AB by e^{-2 pi i/3} and BA by its conjugate, and rotates the
// gradient vectors. Holds for both intralayer and interlayer hops.
HopMatrix rotate_hop_120(const HopMatrix& h);

// (A,B)->(B,A) completion from C2z T invariance: BB = conj(AA), BA = conj(AB),
// applied entrywise to the constant and gradient parts.
HopMatrix complete_c2zt(cxd aa, cxd ab, const Eigen::Vector2cd& aaGrad,
                        const Eigen::Vector2cd& abGrad);

// Layer-2 intralayer matrix from layer 1 via the C2y T relation:
// A^(2) on hop -Mx P equals conj(A^(1)) on hop P, with the gradient mapped by
// -Mx (x component conjugated, y component negated-conjugated).
HopMatrix mirror_layer(const HopMatrix& h);

// The bundled tables at 1.05 degrees: representative values completed to the
// full 12+12+12 hop set by the symmetry rules above.
HoppingTables bundled_tables_1p05();

HoppingTables load_tables(const std::string& path);
void save_tables(const HoppingTables& t, const std::string& path);

// Index of the hop -Mx P_j (interlayer: Mx Q_j) used by the layer mirror;
// computed on the hop-shell coordinate lists.
int mirrored_intra_hop(const HopShells& shells, const MoireGeometry& geom, int j);

}  // namespace tbg
