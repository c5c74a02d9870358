#include "tbg/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace tbg {

MonolayerLattice MonolayerLattice::make(double a) {
  if (a <= 0.0) throw Error("config", "lattice constant must be positive");
  MonolayerLattice m;
  m.a = a;
  m.A << 0.5 * a, -0.5 * a, 0.5 * std::sqrt(3.0) * a, 0.5 * std::sqrt(3.0) * a;
  m.B = 2.0 * kPi * m.A.inverse().transpose();
  m.tauA.setZero();
  m.delta = a / std::sqrt(3.0);
  m.tauB = Vec2(0.0, m.delta);
  return m;
}

MoireGeometry build_geometry(double theta_deg, double a) {
  if (!(theta_deg > 0.0 && theta_deg < 5.0))
    throw Error("config", "twist angle must lie in (0, 5) degrees; Am is singular at theta = 0");
  MoireGeometry g;
  g.theta_deg = theta_deg;
  g.mono = MonolayerLattice::make(a);

  const double th = deg2rad(theta_deg);
  const Mat2 R1 = rotation(-0.5 * th);
  const Mat2 R2 = rotation(+0.5 * th);
  g.A1 = R1 * g.mono.A;
  g.A2 = R2 * g.mono.A;
  g.B1 = R1 * g.mono.B;
  g.B2 = R2 * g.mono.B;
  g.tau1A = R1 * g.mono.tauA;
  g.tau1B = R1 * g.mono.tauB;
  g.tau2A = R2 * g.mono.tauA;
  g.tau2B = R2 * g.mono.tauB;

  g.Am = (g.A1.inverse() - g.A2.inverse()).inverse();
  g.Bm = 2.0 * kPi * g.Am.inverse().transpose();

  const Vec2 K(4.0 * kPi / (3.0 * a), 0.0);
  g.K1 = R1 * K;
  g.K2 = R2 * K;
  g.K1p = -g.K1;
  g.K2p = -g.K2;
  g.sTilde = 0.5 * (g.K1 + g.K2);
  g.s1 = g.K1 - g.K2;
  return g;
}

int KGrid::add(int ka, int kb) const {
  auto [ia, ja] = coords(ka);
  auto [ib, jb] = coords(kb);
  return index((ia + ib) % nkx, (ja + jb) % nky);
}

int KGrid::sub(int ka, int kb) const {
  auto [ia, ja] = coords(ka);
  auto [ib, jb] = coords(kb);
  return index(((ia - ib) % nkx + nkx) % nkx, ((ja - jb) % nky + nky) % nky);
}

int KGrid::neg(int ka) const {
  auto [i, j] = coords(ka);
  return index((nkx - i) % nkx, (nky - j) % nky);
}

KGrid mp_grid(const MoireGeometry& geom, int nkx, int nky) {
  if (nkx < 1 || nky < 1) throw Error("config", "Monkhorst-Pack grid sizes must be >= 1");
  KGrid grid;
  grid.nkx = nkx;
  grid.nky = nky;
  grid.points.reserve(static_cast<size_t>(nkx) * nky);
  for (int i = 0; i < nkx; ++i)
    for (int j = 0; j < nky; ++j)
      grid.points.push_back(geom.Bm * Vec2(double(i) / nkx, double(j) / nky));
  return grid;
}

namespace {

// Integer |m b1 + n b2|^2 in units of |b1|^2 for the hexagonal reciprocal
// lattice: m^2 + n^2 - m n. Exact shell grouping with no tolerance.
long normsq_moire(const Vec2i& mn) {
  const long m = mn.x(), n = mn.y();
  return m * m + n * n - m * n;
}

// Same quadratic form for thirds-coordinates (3m', 3n') of s1 + G.
long normsq_thirds(long m, long n) { return m * m + n * n - m * n; }

struct AngleLess {
  double ref;  // reference angle; sort by (angle - ref) mod 2pi
  const MoireGeometry* geom;
  bool inter;
  bool operator()(const Vec2i& a, const Vec2i& b) const {
    return key(a) < key(b);
  }
  double key(const Vec2i& mn) const {
    Vec2 v = geom->gvec(mn);
    if (inter) v += geom->s1;
    double ang = std::atan2(v.y(), v.x()) - ref;
    while (ang < -1e-12) ang += 2.0 * kPi;
    return ang;
  }
};

}  // namespace

HopShells hop_shells(const MoireGeometry& geom) {
  HopShells h;

  // Intralayer: first two shells of nonzero moire reciprocal vectors.
  {
    std::map<long, std::vector<Vec2i>> shells;
    const int R = 4;
    for (int m = -R; m <= R; ++m)
      for (int n = -R; n <= R; ++n) {
        Vec2i mn(m, n);
        if (mn == Vec2i(0, 0)) continue;
        shells[normsq_moire(mn)].push_back(mn);
      }
    int count = 0;
    for (auto& [nrm, vecs] : shells) {
      if (count >= 2) break;
      std::sort(vecs.begin(), vecs.end(), AngleLess{0.0, &geom, false});
      for (const auto& mn : vecs) {
        h.intraP.push_back(mn);
        h.intraPvec.push_back(geom.gvec(mn));
        h.intraShell.push_back(count);
      }
      ++count;
    }
  }

  // Interlayer: first three shells of {s1 + G}, angles measured from s1.
  {
    const double ref = std::atan2(geom.s1.y(), geom.s1.x());
    // s1 = (b1 - b2)/3; thirds-coordinates of s1 + m b1 + n b2 are
    // (3m + 1, 3n - 1).
    std::map<long, std::vector<Vec2i>> shells;
    const int R = 4;
    for (int m = -R; m <= R; ++m)
      for (int n = -R; n <= R; ++n)
        shells[normsq_thirds(3 * m + 1, 3 * n - 1)].push_back(Vec2i(m, n));
    int count = 0;
    for (auto& [nrm, vecs] : shells) {
      if (count >= 3) break;
      std::sort(vecs.begin(), vecs.end(), AngleLess{ref, &geom, true});
      for (const auto& mn : vecs) {
        h.interQ.push_back(mn);
        h.interS.push_back(geom.s1 + geom.gvec(mn));
        h.interShell.push_back(count);
      }
      ++count;
    }
  }

  if (h.interQ.size() != 12 || h.intraP.size() != 12)
    throw Error("internal", "hop shell enumeration did not produce 12+12 hops");
  return h;
}

}  // namespace tbg
