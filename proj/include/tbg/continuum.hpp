#pragma once

#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "tbg/geometry.hpp"
#include "tbg/hopping.hpp"

namespace tbg {

// Plane-wave envelope basis for one valley. Orbital index layout within a G
// block is (layer, sublattice): idx = 4*ig + 2*layer + sub. The G list is
// sorted by |G| then lexicographically and is closed under negation.
struct PlaneWaveBasis {
  std::vector<Vec2i> g;
  std::unordered_map<long long, int> lookup;
  double cutoff = 0.0;  // in units of |b1|

  int ng() const { return static_cast<int>(g.size()); }
  int dim() const { return 4 * ng(); }  // single-valley matrix dimension
  int index(int ig, int layer, int sub) const { return 4 * ig + 2 * layer + sub; }
  // Index of G' = g[ig] + shift, or -1 when outside the cutoff set.
  int shifted(int ig, const Vec2i& shift) const;
  int negated(int ig) const;

  static PlaneWaveBasis make(double cutoff_b1);
};

// Which single-particle model a Bloch matrix represents. Interpolated models
// hold their two endpoints; describe() gives a canonical string used for
// cache keys and manifests.
// Dirac velocity of the BM/chiral models in meV*Angstrom, overridable through
// the run config. The default puts theta = 1.05 deg, w1 = 113.25 meV at the
// first chiral magic angle (alpha = w1/(v dK) = 0.5857): the chiral middle
// bands are then flat to 5e-5 meV, which the flat-band projection and the
// chiral-limit ground-state degeneracy both rely on. The relaxed model uses
// the Dirac constants from its own tables instead.
inline constexpr double kDefaultDiracV = 6196.92;

struct ModelSpec {
  enum class Family { BM, Chiral, Relaxed, Interpolated };
  Family family = Family::Chiral;
  double w0 = 0.0;     // meV
  double w1 = 113.25;  // meV
  double v = kDefaultDiracV;
  std::shared_ptr<const HoppingTables> tables;
  double lambda = 0.0;
  std::shared_ptr<const ModelSpec> left, right;  // interpolation endpoints

  static ModelSpec bm(double w0, double w1, double v = kDefaultDiracV);
  static ModelSpec chiral(double w1, double v = kDefaultDiracV);
  static ModelSpec relaxed(std::shared_ptr<const HoppingTables> t);
  static ModelSpec interpolated(const ModelSpec& chiralEnd, const ModelSpec& target,
                                double lambda);
  std::string describe() const;
};

struct BlochHamiltonian {
  Vec2 k;
  MatX H;
  std::string tag;
};

// Single-valley (K) assembly at relative wave-vector k. Layer 1 carries the
// +s1/2 momentum offset, layer 2 the -s1/2 offset.
MatX assemble_bm(const MoireGeometry& geom, const PlaneWaveBasis& basis, const Vec2& k,
                 double w0, double w1, double v = kDefaultDiracV);
MatX assemble_chiral(const MoireGeometry& geom, const PlaneWaveBasis& basis, const Vec2& k,
                     double w1, double v = kDefaultDiracV);
MatX assemble_relaxed(const MoireGeometry& geom, const PlaneWaveBasis& basis, const Vec2& k,
                      const HoppingTables& tables);

// Dispatch on the model spec (single valley).
MatX assemble_model(const ModelSpec& spec, const MoireGeometry& geom,
                    const PlaneWaveBasis& basis, const Vec2& k);

// K' block from the K block through time reversal:
// H'(k)[G,G'] = conj(H(k)[-G,-G']).
MatX conjugate_valley_block(const MatX& hk, const PlaneWaveBasis& basis);

// Valleyful Hamiltonian: direct sum of the K block and its time-reversal
// image; exactly block diagonal in valley.
BlochHamiltonian assemble_valleyful(const ModelSpec& spec, const MoireGeometry& geom,
                                    const PlaneWaveBasis& basis, const Vec2& k);

ModelSpec interpolate_model(const ModelSpec& chiralEnd, const ModelSpec& target, double lam);

struct EigenSolution {
  VecXd evals;  // ascending, meV
  MatX evecs;   // orthonormal columns
};

// Hermitian eigensolve with a deterministic phase fix: inside every
// degenerate cluster (gap < 1e-8 meV) and for isolated bands alike, the
// largest-magnitude component of each eigenvector is made real positive.
EigenSolution eigensolve(const MatX& H, int nbands = -1);

double hermiticity_defect(const MatX& H);

// Antiunitary symmetries of the valleyful Hamiltonian. C2zT acts within each
// valley (sublattice swap + conjugation); NuxT and NuyT swap valleys with a
// G -> -G map. All three preserve the relative wave-vector.
enum class Symmetry { C2zT, NuxT, NuyT };

// Unitary part S of the antiunitary symmetry on the valleyful basis, so the
// symmetry acts as v -> S conj(v). Commutation holds when S conj(H) S^dag = H.
MatX symmetry_unitary(Symmetry s, const PlaneWaveBasis& basis);

// Relative Frobenius norm of S conj(H) S^dag - H.
double symmetry_commutator(Symmetry s, const MatX& Hvalleyful, const PlaneWaveBasis& basis);

struct BandStructure {
  std::vector<double> pathParam;
  std::vector<Vec2> kpts;
  std::vector<VecXd> energies;       // per k, ascending, meV
  int flatLow = 0, flatHigh = 0;     // indices of the two middle bands (per valley)
};

// Bands of the single-valley model along a k path. Waypoints are connected
// with `resolution` segments each.
BandStructure band_path(const ModelSpec& spec, const MoireGeometry& geom,
                        const PlaneWaveBasis& basis, const std::vector<Vec2>& waypoints,
                        int resolution);

// Standard path corners Km -> Gamma_m -> Mm -> K'm in the relative-wave-vector
// frame (the layer Dirac momenta sit at +-s1/2).
std::vector<Vec2> standard_waypoints(const MoireGeometry& geom);

void write_band_csv(const BandStructure& bs, int nbands, const std::string& path);

}  // namespace tbg
