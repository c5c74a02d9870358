#include "tbg/continuum.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace tbg {

namespace {

long long gkey(const Vec2i& mn) {
  return (static_cast<long long>(mn.x()) << 32) ^ (mn.y() & 0xffffffffLL);
}

}  // namespace

int PlaneWaveBasis::shifted(int ig, const Vec2i& shift) const {
  auto it = lookup.find(gkey(Vec2i(g[ig] + shift)));
  return it == lookup.end() ? -1 : it->second;
}

int PlaneWaveBasis::negated(int ig) const {
  auto it = lookup.find(gkey(Vec2i(-g[ig])));
  if (it == lookup.end())
    throw Error("internal", "plane-wave basis is not closed under negation");
  return it->second;
}

PlaneWaveBasis PlaneWaveBasis::make(double cutoff_b1) {
  if (cutoff_b1 <= 0.0) throw Error("config", "G cutoff must be positive");
  PlaneWaveBasis b;
  b.cutoff = cutoff_b1;
  const long cut2 = static_cast<long>(std::floor(cutoff_b1 * cutoff_b1 + 1e-9));
  const int R = static_cast<int>(std::ceil(cutoff_b1)) + 1;
  for (int m = -R; m <= R; ++m)
    for (int n = -R; n <= R; ++n)
      if (static_cast<long>(m) * m + static_cast<long>(n) * n - static_cast<long>(m) * n <= cut2)
        b.g.emplace_back(m, n);
  std::sort(b.g.begin(), b.g.end(), [](const Vec2i& p, const Vec2i& q) {
    const long np = long(p.x()) * p.x() + long(p.y()) * p.y() - long(p.x()) * p.y();
    const long nq = long(q.x()) * q.x() + long(q.y()) * q.y() - long(q.x()) * q.y();
    if (np != nq) return np < nq;
    if (p.x() != q.x()) return p.x() < q.x();
    return p.y() < q.y();
  });
  for (int i = 0; i < b.ng(); ++i) b.lookup[gkey(b.g[i])] = i;
  return b;
}

// ---------------------------------------------------------------------------
// Model specs

ModelSpec ModelSpec::bm(double w0, double w1, double v) {
  if (w1 <= 0.0) throw Error("config", "w1 must be positive");
  if (w0 < 0.0) throw Error("config", "w0 must be non-negative");
  if (w0 / w1 > 0.95 + 1e-12)
    throw Error("config", "kappa = w0/w1 > 0.95: flat bands are no longer separated");
  ModelSpec s;
  s.family = Family::BM;
  s.w0 = w0;
  s.w1 = w1;
  s.v = v;
  return s;
}

ModelSpec ModelSpec::chiral(double w1, double v) {
  ModelSpec s = bm(0.0, w1, v);
  s.family = Family::Chiral;
  return s;
}

ModelSpec ModelSpec::relaxed(std::shared_ptr<const HoppingTables> t) {
  if (!t) throw Error("config", "relaxed model requires hopping tables");
  ModelSpec s;
  s.family = Family::Relaxed;
  s.tables = std::move(t);
  return s;
}

ModelSpec ModelSpec::interpolated(const ModelSpec& chiralEnd, const ModelSpec& target,
                                  double lambda) {
  return interpolate_model(chiralEnd, target, lambda);
}

ModelSpec interpolate_model(const ModelSpec& chiralEnd, const ModelSpec& target, double lam) {
  if (lam < 0.0 || lam > 1.0) throw Error("config", "interpolation parameter must be in [0,1]");
  ModelSpec s;
  s.family = ModelSpec::Family::Interpolated;
  s.lambda = lam;
  s.left = std::make_shared<ModelSpec>(chiralEnd);
  s.right = std::make_shared<ModelSpec>(target);
  return s;
}

std::string ModelSpec::describe() const {
  char buf[128];
  switch (family) {
    case Family::BM:
      std::snprintf(buf, sizeof(buf), "bm(w0=%.6g,w1=%.6g,v=%.6g)", w0, w1, v);
      return buf;
    case Family::Chiral:
      std::snprintf(buf, sizeof(buf), "chiral(w1=%.6g,v=%.6g)", w1, v);
      return buf;
    case Family::Relaxed:
      std::snprintf(buf, sizeof(buf), "relaxed(theta=%.6g,v=%.6g,T1ab=%.6g)", tables->theta_deg,
                    tables->v, std::abs(tables->inter[0].m(0, 1)));
      return buf;
    case Family::Interpolated:
      std::snprintf(buf, sizeof(buf), "interp(lambda=%.8g;", lambda);
      return std::string(buf) + left->describe() + ";" + right->describe() + ")";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Assembly

namespace {

// 2x2 Dirac block v sigma.q on the sublattice index.
Mat2c dirac_block(double v, const Vec2& q) {
  Mat2c d;
  d << 0.0, v * cxd(q.x(), -q.y()), v * cxd(q.x(), q.y()), 0.0;
  return d;
}

// Corrected Dirac operator of the relaxed model:
// v [s0 - i sin(theta_l) s3] (sigma.q) + v1 q^2 s0 + v2 [s1 (q2^2-q1^2) + 2 s2 q1 q2].
Mat2c dirac_corrected(const HoppingTables& t, int layer, const Vec2& q) {
  Mat2c sq = dirac_block(t.v, q);
  Mat2c rot;
  const cxd f(0.0, -t.sinTheta[layer]);
  rot << 1.0 + f, 0.0, 0.0, 1.0 - f;
  Mat2c d = rot * sq;
  const double q2 = q.squaredNorm();
  d(0, 0) += t.v1 * q2;
  d(1, 1) += t.v1 * q2;
  const double w1 = q.y() * q.y() - q.x() * q.x();
  const double w2 = 2.0 * q.x() * q.y();
  d(0, 0) += 0.0;
  d(0, 1) += t.v2 * cxd(w1, -w2);
  d(1, 0) += t.v2 * cxd(w1, w2);
  return d;
}

void add_block(MatX& H, const PlaneWaveBasis& basis, int ig, int igp, int layer, int layerp,
               const Mat2c& m) {
  for (int s = 0; s < 2; ++s)
    for (int sp = 0; sp < 2; ++sp)
      H(basis.index(ig, layer, s), basis.index(igp, layerp, sp)) += m(s, sp);
}

Mat2c bm_tunneling(double w0, double w1, int j) {
  // First-shell interlayer matrices; hop 0 is the s1 hop, hops 1,2 its
  // 120-degree rotations with the orbit phase on the off-diagonal entries.
  const cxd ph = std::exp(cxd(0.0, -2.0 * kPi * j / 3.0));
  Mat2c t;
  t << w0, w1 * ph, w1 * std::conj(ph), w0;
  return t;
}

}  // namespace

MatX assemble_bm(const MoireGeometry& geom, const PlaneWaveBasis& basis, const Vec2& k,
                 double w0, double w1, double v) {
  if (w1 <= 0.0) throw Error("config", "w1 must be positive");
  if (w0 < 0.0 || w0 / w1 > 0.95 + 1e-12)
    throw Error("config", "kappa = w0/w1 outside [0, 0.95]");
  const auto shells = hop_shells(geom);
  MatX H = MatX::Zero(basis.dim(), basis.dim());
  for (int ig = 0; ig < basis.ng(); ++ig) {
    const Vec2 G = geom.gvec(basis.g[ig]);
    add_block(H, basis, ig, ig, 0, 0, dirac_block(v, k + 0.5 * geom.s1 + G));
    add_block(H, basis, ig, ig, 1, 1, dirac_block(v, k - 0.5 * geom.s1 + G));
  }
  // Interlayer: first shell only; the (1,2) block carries T_j on G = G' + Q_j.
  for (int j = 0; j < 3; ++j) {
    const Mat2c T = bm_tunneling(w0, w1, j);
    for (int igp = 0; igp < basis.ng(); ++igp) {
      const int ig = basis.shifted(igp, shells.interQ[j]);
      if (ig < 0) continue;
      add_block(H, basis, ig, igp, 0, 1, T);
      add_block(H, basis, igp, ig, 1, 0, T.adjoint());
    }
  }
  return H;
}

MatX assemble_chiral(const MoireGeometry& geom, const PlaneWaveBasis& basis, const Vec2& k,
                     double w1, double v) {
  return assemble_bm(geom, basis, k, 0.0, w1, v);
}

MatX assemble_relaxed(const MoireGeometry& geom, const PlaneWaveBasis& basis, const Vec2& k,
                      const HoppingTables& tables) {
  const auto shells = hop_shells(geom);
  MatX H = MatX::Zero(basis.dim(), basis.dim());
  for (int ig = 0; ig < basis.ng(); ++ig) {
    const Vec2 G = geom.gvec(basis.g[ig]);
    add_block(H, basis, ig, ig, 0, 0, dirac_corrected(tables, 0, k + 0.5 * geom.s1 + G));
    add_block(H, basis, ig, ig, 1, 1, dirac_corrected(tables, 1, k - 0.5 * geom.s1 + G));
  }
  // Intralayer hops A_j^(l)(k +- s1/2) on G = G' + P_j; the argument carries
  // no G, as displayed.
  for (int layer = 0; layer < 2; ++layer) {
    const Vec2 karg = k + (layer == 0 ? 0.5 : -0.5) * geom.s1;
    for (int j = 0; j < 12; ++j) {
      const Mat2c A = tables.intra[layer][j].at(karg);
      for (int igp = 0; igp < basis.ng(); ++igp) {
        const int ig = basis.shifted(igp, shells.intraP[j]);
        if (ig < 0) continue;
        add_block(H, basis, ig, igp, layer, layer, A);
      }
    }
  }
  for (int j = 0; j < 12; ++j) {
    const Mat2c T = tables.inter[j].at(k);
    for (int igp = 0; igp < basis.ng(); ++igp) {
      const int ig = basis.shifted(igp, shells.interQ[j]);
      if (ig < 0) continue;
      add_block(H, basis, ig, igp, 0, 1, T);
      add_block(H, basis, igp, ig, 1, 0, T.adjoint());
    }
  }
  // The tabulated hops are written one-directionally; enforce Hermiticity by
  // mirroring onto the conjugate transpose.
  MatX Hs = 0.5 * (H + H.adjoint());
  return Hs;
}

MatX assemble_model(const ModelSpec& spec, const MoireGeometry& geom,
                    const PlaneWaveBasis& basis, const Vec2& k) {
  switch (spec.family) {
    case ModelSpec::Family::BM:
      return assemble_bm(geom, basis, k, spec.w0, spec.w1, spec.v);
    case ModelSpec::Family::Chiral:
      return assemble_chiral(geom, basis, k, spec.w1, spec.v);
    case ModelSpec::Family::Relaxed:
      return assemble_relaxed(geom, basis, k, *spec.tables);
    case ModelSpec::Family::Interpolated:
      return (1.0 - spec.lambda) * assemble_model(*spec.left, geom, basis, k) +
             spec.lambda * assemble_model(*spec.right, geom, basis, k);
  }
  throw Error("internal", "unknown model family");
}

MatX conjugate_valley_block(const MatX& hk, const PlaneWaveBasis& basis) {
  const int n = basis.dim();
  MatX hp(n, n);
  for (int ig = 0; ig < basis.ng(); ++ig) {
    const int mg = basis.negated(ig);
    for (int igp = 0; igp < basis.ng(); ++igp) {
      const int mgp = basis.negated(igp);
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
          hp(4 * ig + a, 4 * igp + b) = std::conj(hk(4 * mg + a, 4 * mgp + b));
    }
  }
  return hp;
}

BlochHamiltonian assemble_valleyful(const ModelSpec& spec, const MoireGeometry& geom,
                                    const PlaneWaveBasis& basis, const Vec2& k) {
  const int n = basis.dim();
  BlochHamiltonian bh;
  bh.k = k;
  bh.tag = spec.describe();
  bh.H = MatX::Zero(2 * n, 2 * n);
  const MatX hk = assemble_model(spec, geom, basis, k);
  bh.H.topLeftCorner(n, n) = hk;
  bh.H.bottomRightCorner(n, n) = conjugate_valley_block(hk, basis);
  return bh;
}

// ---------------------------------------------------------------------------
// Eigensolve

double hermiticity_defect(const MatX& H) {
  const double n = H.norm();
  return n == 0.0 ? 0.0 : (H - MatX(H.adjoint())).norm() / n;
}

EigenSolution eigensolve(const MatX& H, int nbands) {
  if (hermiticity_defect(H) > 1e-10)
    throw Error("numerics", "matrix handed to eigensolve is not Hermitian to 1e-10");
  Eigen::SelfAdjointEigenSolver<MatX> solver(0.5 * (H + H.adjoint()));
  if (solver.info() != Eigen::Success)
    throw Error("numerics", "self-adjoint eigensolver failed");
  EigenSolution sol;
  sol.evals = solver.eigenvalues();
  sol.evecs = solver.eigenvectors();
  // Deterministic phase: largest-magnitude component real positive.
  for (int c = 0; c < sol.evecs.cols(); ++c) {
    int imax = 0;
    double vmax = 0.0;
    for (int r = 0; r < sol.evecs.rows(); ++r) {
      const double a = std::abs(sol.evecs(r, c));
      if (a > vmax + 1e-15) {
        vmax = a;
        imax = r;
      }
    }
    const cxd z = sol.evecs(imax, c);
    if (std::abs(z) > 0.0) sol.evecs.col(c) *= std::conj(z) / std::abs(z);
  }
  if (nbands > 0 && nbands < sol.evals.size()) {
    // Keep the nbands states nearest zero, preserving ascending order.
    const int n = static_cast<int>(sol.evals.size());
    int lo = 0;
    while (lo < n && sol.evals(lo) < 0.0) ++lo;
    int a = lo, b = lo;  // window [a, b)
    while (b - a < nbands) {
      const double below = a > 0 ? std::abs(sol.evals(a - 1)) : 1e300;
      const double above = b < n ? std::abs(sol.evals(b)) : 1e300;
      if (below <= above)
        --a;
      else
        ++b;
    }
    EigenSolution cut;
    cut.evals = sol.evals.segment(a, nbands);
    cut.evecs = sol.evecs.middleCols(a, nbands);
    return cut;
  }
  return sol;
}

// ---------------------------------------------------------------------------
// Symmetry representations

MatX symmetry_unitary(Symmetry s, const PlaneWaveBasis& basis) {
  const int n = basis.dim();
  MatX U = MatX::Zero(2 * n, 2 * n);
  auto idx = [&](int valley, int ig, int layer, int sub) {
    return valley * n + basis.index(ig, layer, sub);
  };
  for (int ig = 0; ig < basis.ng(); ++ig) {
    const int mg = basis.negated(ig);
    for (int layer = 0; layer < 2; ++layer)
      for (int sub = 0; sub < 2; ++sub) {
        switch (s) {
          case Symmetry::C2zT:
            // sublattice swap, valley and G preserved
            U(idx(0, ig, layer, sub), idx(0, ig, layer, 1 - sub)) = 1.0;
            U(idx(1, ig, layer, sub), idx(1, ig, layer, 1 - sub)) = 1.0;
            break;
          case Symmetry::NuxT:
            // valley swap with G -> -G
            U(idx(0, ig, layer, sub), idx(1, mg, layer, sub)) = 1.0;
            U(idx(1, ig, layer, sub), idx(0, mg, layer, sub)) = 1.0;
            break;
          case Symmetry::NuyT:
            U(idx(0, ig, layer, sub), idx(1, mg, layer, sub)) = -I1;
            U(idx(1, ig, layer, sub), idx(0, mg, layer, sub)) = I1;
            break;
        }
      }
  }
  return U;
}

double symmetry_commutator(Symmetry s, const MatX& Hv, const PlaneWaveBasis& basis) {
  const MatX U = symmetry_unitary(s, basis);
  const MatX transformed = U * Hv.conjugate() * U.adjoint();
  const double n = Hv.norm();
  return n == 0.0 ? 0.0 : (transformed - Hv).norm() / n;
}

// ---------------------------------------------------------------------------
// Band paths

std::vector<Vec2> standard_waypoints(const MoireGeometry& geom) {
  // Valley Brillouin-zone hexagon: the layer Dirac momenta +-s1/2 are two
  // adjacent corners; the hexagon center sits perpendicular to s1 at radius
  // sqrt(3)/2 |s1| from their midpoint. Mm is the edge midpoint between K'm
  // and its next corner around the hexagon.
  const Vec2 Km = 0.5 * geom.s1;
  const Vec2 Kpm = -0.5 * geom.s1;
  Vec2 perp(-geom.s1.y(), geom.s1.x());
  perp.normalize();
  const Vec2 center = perp * (std::sqrt(3.0) / 2.0) * geom.s1.norm();
  const Vec2 nextCorner = center + rotation(-kPi / 3.0) * (Kpm - center);
  const Vec2 Mm = 0.5 * (Kpm + nextCorner);
  return {Km, center, Mm, Kpm};
}

BandStructure band_path(const ModelSpec& spec, const MoireGeometry& geom,
                        const PlaneWaveBasis& basis, const std::vector<Vec2>& waypoints,
                        int resolution) {
  if (waypoints.empty()) throw Error("config", "band path needs at least one waypoint");
  if (resolution < 1) resolution = 1;
  BandStructure bs;
  std::vector<Vec2> kpts;
  if (waypoints.size() == 1) {
    kpts.push_back(waypoints[0]);
  } else {
    for (size_t w = 0; w + 1 < waypoints.size(); ++w)
      for (int s = 0; s < resolution; ++s)
        kpts.push_back(waypoints[w] +
                       (waypoints[w + 1] - waypoints[w]) * (double(s) / resolution));
    kpts.push_back(waypoints.back());
  }
  double param = 0.0;
  for (size_t i = 0; i < kpts.size(); ++i) {
    if (i > 0) param += (kpts[i] - kpts[i - 1]).norm();
    const MatX H = assemble_model(spec, geom, basis, kpts[i]);
    EigenSolution sol = eigensolve(H);
    bs.pathParam.push_back(param);
    bs.kpts.push_back(kpts[i]);
    bs.energies.push_back(sol.evals);
  }
  const int dim = static_cast<int>(bs.energies.front().size());
  bs.flatLow = dim / 2 - 1;
  bs.flatHigh = dim / 2;
  return bs;
}

void write_band_csv(const BandStructure& bs, int nbands, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("io", "cannot open " + path + " for writing");
  const int dim = static_cast<int>(bs.energies.front().size());
  const int nb = std::min(nbands, dim);
  const int lo = std::max(0, dim / 2 - nb / 2);
  out << "# tbg-bands-v1, energies in meV\n";
  out << "path_param,kx,ky";
  for (int b = 0; b < nb; ++b) out << ",e" << (b + 1);
  out << "\n";
  char buf[64];
  for (size_t i = 0; i < bs.kpts.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%.10g", bs.pathParam[i], bs.kpts[i].x(),
                  bs.kpts[i].y());
    out << buf;
    for (int b = 0; b < nb; ++b) {
      std::snprintf(buf, sizeof(buf), ",%.10g", bs.energies[i](lo + b));
      out << buf;
    }
    out << "\n";
  }
}

}  // namespace tbg
