#include "tbg/form_factors.hpp"

#include <cmath>

namespace tbg {

double v_hat(const ScreenedPotential& pot, const Vec2& q) {
  if (pot.epsilon <= 0.0 || pot.d <= 0.0)
    throw Error("config", "screened potential needs epsilon > 0 and d > 0");
  const double qn = q.norm();
  const double pref = kCoulombMeVAngstrom * 2.0 * kPi / pot.epsilon;
  const double x = qn * pot.d / 2.0;
  if (x < 1e-8) return pref * (pot.d / 2.0) * (1.0 - x * x / 3.0);
  return pref * std::tanh(x) / qn;
}

FlatBandSet compute_flat_bands(const ModelSpec& spec, const MoireGeometry& geom,
                               const PlaneWaveBasis& basis, const KGrid& grid) {
  FlatBandSet fb;
  fb.geom = geom;
  fb.basis = basis;
  fb.grid = grid;
  fb.cK.resize(grid.size());
  fb.cKp.resize(grid.size());
  fb.eps.resize(grid.size());
  fb.minRemoteGap = 1e300;
  fb.maxFlatSpread = 0.0;

  const int dim = basis.dim();
  const int lo = dim / 2 - 1, hi = dim / 2;
  for (int ik = 0; ik < grid.size(); ++ik) {
    const MatX hk = assemble_model(spec, geom, basis, grid.points[ik]);
    const auto sol = eigensolve(hk);
    const double spread = sol.evals(hi) - sol.evals(lo);
    const double gapBelow = sol.evals(lo) - sol.evals(lo - 1);
    const double gapAbove = sol.evals(hi + 1) - sol.evals(hi);
    const double remote = std::min(gapBelow, gapAbove);
    fb.minRemoteGap = std::min(fb.minRemoteGap, remote);
    fb.maxFlatSpread = std::max(fb.maxFlatSpread, spread);
    if (remote <= 1e-9)
      throw Error("physics",
                  "flat bands touch the remote bands on the grid; stay within kappa <= 0.95");
    fb.cK[ik] = sol.evecs.middleCols(lo, 2);
    // K' flat bands through time reversal: u'(G) = conj(u(-G)), same energies.
    fb.cKp[ik].resize(dim, 2);
    for (int c = 0; c < 2; ++c)
      for (int ig = 0; ig < basis.ng(); ++ig) {
        const int mg = basis.negated(ig);
        for (int a = 0; a < 4; ++a)
          fb.cKp[ik](4 * ig + a, c) = std::conj(fb.cK[ik](4 * mg + a, c));
      }
    fb.eps[ik] =
        Eigen::Vector4d(sol.evals(lo), sol.evals(hi), sol.evals(lo), sol.evals(hi));
  }
  return fb;
}

int FormFactorTensor::gIndex(const Vec2i& mn) const {
  for (int i = 0; i < nG(); ++i)
    if (gset[i] == mn) return i;
  return -1;
}

FormFactorTensor form_factors(const FlatBandSet& bands, double gcut) {
  const auto& basis = bands.basis;
  if (gcut > 2.0 * basis.cutoff)
    throw Error("config", "form-factor G cutoff " + std::to_string(gcut) +
                              " |b1| exceeds the maximum supported by the basis (" +
                              std::to_string(2.0 * basis.cutoff) + " |b1|)");
  FormFactorTensor ff;
  ff.grid = bands.grid;
  const long cut2 = static_cast<long>(std::floor(gcut * gcut + 1e-9));
  const int R = static_cast<int>(std::ceil(gcut)) + 1;
  for (int m = -R; m <= R; ++m)
    for (int n = -R; n <= R; ++n)
      if (long(m) * m + long(n) * n - long(m) * n <= cut2) {
        ff.gset.emplace_back(m, n);
        ff.gvecs.push_back(bands.geom.gvec(Vec2i(m, n)));
      }

  const int nk = bands.nk();
  const int nG = ff.nG();
  const int ng = basis.ng();
  ff.rho.assign(static_cast<size_t>(nk) * nk * nG, Mat4::Zero());

  // Per G, precompute the index pairing ig -> index(g + G).
  std::vector<std::vector<int>> shift(nG, std::vector<int>(ng));
  for (int ig = 0; ig < nG; ++ig)
    for (int i = 0; i < ng; ++i) shift[ig][i] = basis.shifted(i, ff.gset[ig]);

  for (int ik = 0; ik < nk; ++ik)
    for (int ikp = 0; ikp < nk; ++ikp)
      for (int ig = 0; ig < nG; ++ig) {
        Mat4& r = ff.rho[(static_cast<size_t>(ik) * nk + ikp) * nG + ig];
        for (int v = 0; v < 2; ++v) {
          const MatX& L = bands.block(ik, v);
          const MatX& Rb = bands.block(ikp, v);
          Eigen::Matrix2cd blk = Eigen::Matrix2cd::Zero();
          for (int i = 0; i < ng; ++i) {
            const int j = shift[ig][i];
            if (j < 0) continue;
            for (int a = 0; a < 4; ++a)
              for (int m = 0; m < 2; ++m)
                for (int n = 0; n < 2; ++n)
                  blk(m, n) += std::conj(L(4 * i + a, m)) * Rb(4 * j + a, n);
          }
          r.block<2, 2>(2 * v, 2 * v) = blk;
        }
      }
  return ff;
}

}  // namespace tbg
