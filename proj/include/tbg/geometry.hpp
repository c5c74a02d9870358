#pragma once

#include <vector>

#include "tbg/types.hpp"

namespace tbg {

// Single graphene sheet. Columns of A are the primitive vectors
// a1 = (a/2)(1, sqrt3), a2 = (a/2)(-1, sqrt3); B is the reciprocal matrix,
// A^T B = 2 pi I.
struct MonolayerLattice {
  double a = 0.0;   // lattice constant, Angstrom
  Mat2 A;           // columns a1, a2
  Mat2 B;           // reciprocal, columns b1, b2
  Vec2 tauA, tauB;  // sublattice positions in the cell
  double delta = 0.0;  // |tauB - tauA| = a/sqrt(3)

  static MonolayerLattice make(double a);
};

// Twisted-bilayer geometry: rotated layer lattices, moire lattice and
// reciprocal matrices, Dirac points of both layers and the derived momenta
// sTilde = (K1+K2)/2 and s1 = K1 - K2.
struct MoireGeometry {
  double theta_deg = 0.0;
  MonolayerLattice mono;
  Mat2 A1, A2;  // rotated fundamental matrices, layer 1 at -theta/2
  Mat2 B1, B2;  // rotated monolayer reciprocal matrices
  Vec2 tau1A, tau1B, tau2A, tau2B;
  Mat2 Am;  // moire fundamental matrix
  Mat2 Bm;  // moire reciprocal matrix, Am^T Bm = 2 pi I
  Vec2 K1, K2, K1p, K2p;
  Vec2 sTilde;
  Vec2 s1;

  // G = m*b1 + n*b2 for integer moire reciprocal coordinates.
  Vec2 gvec(const Vec2i& mn) const { return Bm * mn.cast<double>(); }
  double moireCellArea() const { return std::abs(Am.determinant()); }
};

MoireGeometry build_geometry(double theta_deg, double a);

// Monkhorst-Pack grid over the moire Brillouin zone: point(i,j) =
// (i/nkx) b1 + (j/nky) b2. Index layout is i-major.
struct KGrid {
  int nkx = 0, nky = 0;
  std::vector<Vec2> points;

  int size() const { return nkx * nky; }
  int index(int i, int j) const { return i * nky + j; }
  std::pair<int, int> coords(int idx) const { return {idx / nky, idx % nky}; }
  // Grid arithmetic modulo the reciprocal lattice.
  int add(int ka, int kb) const;
  int sub(int ka, int kb) const;
  int neg(int ka) const;
};

KGrid mp_grid(const MoireGeometry& geom, int nkx, int nky);

// Momentum-hop shells for the relaxed model. Interlayer hops are the first
// three shells of {s1 + G}; intralayer hops the first two shells of nonzero
// moire reciprocal vectors. Each list has exactly 12 entries, ordered shell by
// shell and within a shell by polar angle so that consecutive same-orbit hops
// are 120-degree rotations of each other (1,3,5 / 2,4,6 alternation in
// six-vector shells, 1,2,3 in three-vector shells).
struct HopShells {
  std::vector<Vec2i> interQ;    // moire reciprocal coordinates Q_j, shift = s1 + Q_j
  std::vector<Vec2> interS;     // physical interlayer shifts s1 + Q_j
  std::vector<int> interShell;  // 0-based shell index per hop
  std::vector<Vec2i> intraP;    // moire reciprocal coordinates P_j
  std::vector<Vec2> intraPvec;
  std::vector<int> intraShell;
};

HopShells hop_shells(const MoireGeometry& geom);

// C3 action on integer moire reciprocal coordinates: R(120) (m b1 + n b2) =
// (-n) b1 + (m-n) b2.
inline Vec2i rotate120(const Vec2i& mn) { return Vec2i(-mn.y(), mn.x() - mn.y()); }

}  // namespace tbg
