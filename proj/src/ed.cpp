#include "tbg/ed.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

namespace tbg {

namespace {

size_t binom(int n, int k) {
  if (k < 0 || k > n) return 0;
  size_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

int popcount_below(uint32_t mask, int pos) {
  return __builtin_popcount(mask & ((1u << pos) - 1u));
}

struct TermList {
  // nonzero two-body terms 1/2 V f+_p f+_q f_s f_r
  struct Quartic {
    uint8_t p, q, r, s;
    cxd v;  // includes the 1/2
  };
  std::vector<Quartic> terms;
  // one-body terms
  struct Single {
    uint8_t a, b;
    cxd v;
  };
  std::vector<Single> singles;
};

TermList make_terms(const FockSpaceProblem& prob) {
  TermList t;
  const int M = prob.norb;
  for (int ik = 0; ik < prob.grid.size(); ++ik)
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) {
        const cxd h = prob.hcore[ik](a, b);
        if (std::abs(h) > 1e-14) t.singles.push_back({uint8_t(4 * ik + a), uint8_t(4 * ik + b), h});
      }
  for (int p = 0; p < M; ++p)
    for (int q = 0; q < M; ++q)
      for (int r = 0; r < M; ++r)
        for (int s = 0; s < M; ++s) {
          const cxd v = prob.v(p, q, r, s);
          if (std::abs(v) > 1e-14)
            t.terms.push_back({uint8_t(p), uint8_t(q), uint8_t(r), uint8_t(s), 0.5 * v});
        }
  return t;
}

// Apply H to a vector in the determinant basis.
void apply_h(const TermList& tl, const std::vector<uint32_t>& dets,
             const std::unordered_map<uint32_t, int>& rank, const VecX& x, VecX& y) {
  y.setZero();
  for (size_t id = 0; id < dets.size(); ++id) {
    const uint32_t D = dets[id];
    const cxd amp = x(id);
    if (amp == cxd(0.0)) continue;
    for (const auto& s1 : tl.singles) {
      if (!(D & (1u << s1.b))) continue;
      uint32_t D1 = D & ~(1u << s1.b);
      int sign = popcount_below(D, s1.b) & 1 ? -1 : 1;
      if (D1 & (1u << s1.a)) continue;
      int sgn2 = popcount_below(D1, s1.a) & 1 ? -1 : 1;
      uint32_t D2 = D1 | (1u << s1.a);
      auto it = rank.find(D2);
      y(it->second) += double(sign * sgn2) * s1.v * amp;
    }
    for (const auto& q4 : tl.terms) {
      // f+_p f+_q f_s f_r acting rightmost-first
      if (!(D & (1u << q4.r))) continue;
      uint32_t D1 = D & ~(1u << q4.r);
      int sgn = popcount_below(D, q4.r) & 1 ? -1 : 1;
      if (!(D1 & (1u << q4.s))) continue;
      if (popcount_below(D1, q4.s) & 1) sgn = -sgn;
      uint32_t D2 = D1 & ~(1u << q4.s);
      if (D2 & (1u << q4.q)) continue;
      if (popcount_below(D2, q4.q) & 1) sgn = -sgn;
      uint32_t D3 = D2 | (1u << q4.q);
      if (D3 & (1u << q4.p)) continue;
      if (popcount_below(D3, q4.p) & 1) sgn = -sgn;
      uint32_t D4 = D3 | (1u << q4.p);
      auto it = rank.find(D4);
      y(it->second) += double(sgn) * q4.v * amp;
    }
  }
}

std::vector<uint32_t> enumerate_dets(int norb, int nelec) {
  std::vector<uint32_t> dets;
  dets.reserve(binom(norb, nelec));
  // lowest nelec bits set, iterate Gosper's hack
  uint32_t v = (1u << nelec) - 1u;
  const uint32_t limit = 1u << norb;
  while (v < limit) {
    dets.push_back(v);
    const uint32_t t = v | (v - 1);
    v = (t + 1) | (((~t & -(~t)) - 1) >> (__builtin_ctz(v) + 1));
    if (nelec == 0) break;
  }
  return dets;
}

std::pair<int, int> det_momentum(const FockSpaceProblem& prob, uint32_t D) {
  int si = 0, sj = 0;
  for (int orb = 0; orb < prob.norb; ++orb)
    if (D & (1u << orb)) {
      auto [i, j] = prob.grid.coords(orb / 4);
      si += i;
      sj += j;
    }
  return {si % prob.grid.nkx, sj % prob.grid.nky};
}

}  // namespace

size_t FockSpaceProblem::hilbertDim() const { return binom(norb, nelec); }

FockSpaceProblem build_problem(const FormFactorTensor& ff, const ScreenedPotential& pot,
                               const BlockSeq& h0, const BlockSeq& hsub, const KGrid& grid,
                               double moireCellArea) {
  if (grid.size() > 4)
    throw Error("config", "ED guard: grid has " + std::to_string(grid.size()) +
                              " k points; at 4 the Hilbert dimension is already C(16,8) = " +
                              std::to_string(binom(16, 8)));
  FockSpaceProblem prob;
  prob.grid = grid;
  prob.norb = 4 * grid.size();
  prob.nelec = 2 * grid.size();
  prob.hcore.resize(grid.size());
  for (int ik = 0; ik < grid.size(); ++ik) prob.hcore[ik] = h0[ik] - hsub[ik];

  const int M = prob.norb;
  prob.vertex.assign(static_cast<size_t>(M) * M * M * M, cxd(0.0));
  const double norm = 1.0 / (grid.size() * moireCellArea);
  for (int kp = 0; kp < grid.size(); ++kp)
    for (int kq = 0; kq < grid.size(); ++kq)
      for (int kr = 0; kr < grid.size(); ++kr) {
        // momentum conservation fixes k_s
        const int ks = grid.sub(grid.add(kp, kq), kr);
        const Vec2 dk = grid.points[kr] - grid.points[kp];
        // wrap vector: (k_r - k_p) + (k_s - k_q) is a reciprocal vector W;
        // the second pair product sits at -G - W
        const auto [ip, jp] = grid.coords(kp);
        const auto [iq, jq] = grid.coords(kq);
        const auto [ir, jr] = grid.coords(kr);
        const auto [is_, js] = grid.coords(ks);
        const Vec2i W((ir + is_ - ip - iq) / grid.nkx, (jr + js - jp - jq) / grid.nky);
        for (int ig = 0; ig < ff.nG(); ++ig) {
          const double V = v_hat(pot, dk + ff.gvecs[ig]) * norm;
          const Mat4& rhoPR = ff.at(kp, kr, ig);
          const int igNeg = ff.gIndex(Vec2i(-ff.gset[ig] - W));
          if (igNeg < 0) continue;  // beyond the tensor cutoff
          const Mat4& rhoQS = ff.at(kq, ks, igNeg);
          for (int mp = 0; mp < 4; ++mp)
            for (int mr = 0; mr < 4; ++mr) {
              const cxd a = rhoPR(mp, mr);
              if (std::abs(a) < 1e-16) continue;
              for (int mq = 0; mq < 4; ++mq)
                for (int ms = 0; ms < 4; ++ms) {
                  const cxd b = rhoQS(mq, ms);
                  if (std::abs(b) < 1e-16) continue;
                  const int p = 4 * kp + mp, q = 4 * kq + mq, r = 4 * kr + mr, s = 4 * ks + ms;
                  prob.vertex[((static_cast<size_t>(p) * M + q) * M + r) * M + s] += V * a * b;
                }
            }
        }
      }
  return prob;
}

EdResult ground_state(const FockSpaceProblem& prob, int nroots, bool blocked) {
  const auto tl = make_terms(prob);
  const auto dets = enumerate_dets(prob.norb, prob.nelec);
  EdResult res;
  res.dets = dets;

  struct Root {
    double e;
    int sector;
    int idxInSector;
  };
  std::vector<Root> roots;
  std::vector<std::vector<int>> sectorMembers;
  std::vector<MatX> sectorVecs;

  // Partition by total crystal momentum (a single sector when unblocked).
  std::map<std::pair<int, int>, std::vector<int>> sectors;
  if (blocked) {
    for (size_t i = 0; i < dets.size(); ++i) sectors[det_momentum(prob, dets[i])].push_back(i);
  } else {
    std::vector<int> all(dets.size());
    for (size_t i = 0; i < dets.size(); ++i) all[i] = i;
    sectors[{0, 0}] = std::move(all);
  }

  for (auto& [mom, members] : sectors) {
    const int dim = static_cast<int>(members.size());
    std::unordered_map<uint32_t, int> rank;
    rank.reserve(2 * dim);
    for (int i = 0; i < dim; ++i) rank[dets[members[i]]] = i;
    std::vector<uint32_t> sdets(dim);
    for (int i = 0; i < dim; ++i) sdets[i] = dets[members[i]];

    // dense build column by column
    MatX H = MatX::Zero(dim, dim);
    VecX x = VecX::Zero(dim), y = VecX::Zero(dim);
    for (int c = 0; c < dim; ++c) {
      x.setZero();
      x(c) = 1.0;
      apply_h(tl, sdets, rank, x, y);
      H.col(c) = y;
    }
    const double herm = (H - MatX(H.adjoint())).norm() / std::max(1.0, H.norm());
    if (herm > 1e-10)
      throw Error("numerics", "assembled many-body Hamiltonian is not Hermitian");
    Eigen::SelfAdjointEigenSolver<MatX> es(0.5 * (H + H.adjoint()));
    if (es.info() != Eigen::Success) throw Error("numerics", "ED eigensolver failed");
    const int sidx = static_cast<int>(sectorMembers.size());
    sectorMembers.push_back(members);
    sectorVecs.push_back(es.eigenvectors());
    for (int i = 0; i < dim; ++i) roots.push_back({es.eigenvalues()(i), sidx, i});
  }

  std::sort(roots.begin(), roots.end(), [](const Root& a, const Root& b) { return a.e < b.e; });
  const int keep = std::min<int>(nroots, static_cast<int>(roots.size()));
  res.energies.resize(keep);
  res.vectors = MatX::Zero(dets.size(), keep);
  for (int i = 0; i < keep; ++i) {
    res.energies[i] = roots[i].e;
    const auto& members = sectorMembers[roots[i].sector];
    const auto& vecs = sectorVecs[roots[i].sector];
    for (size_t j = 0; j < members.size(); ++j)
      res.vectors(members[j], i) = vecs(j, roots[i].idxInSector);
  }
  res.groundDegeneracy = 0;
  for (const auto& r : roots)
    if (r.e < roots.front().e + 1e-8) ++res.groundDegeneracy;
  return res;
}

double slater_expectation(const FockSpaceProblem& prob, const OneRdm& P) {
  if (P.nk() != prob.grid.size()) throw Error("config", "1-RDM grid mismatch in ED expectation");
  // Occupied pair per k from the projector's eigenvectors.
  std::vector<Eigen::Matrix<cxd, 4, 2>> occ(prob.grid.size());
  for (int ik = 0; ik < prob.grid.size(); ++ik) {
    Eigen::SelfAdjointEigenSolver<Mat4> es(P.P[ik]);
    if (std::abs(es.eigenvalues()(2) - 1.0) > 1e-8 || std::abs(es.eigenvalues()(1)) > 1e-8)
      throw Error("config", "1-RDM block is not a rank-2 projector");
    occ[ik] = es.eigenvectors().rightCols(2);
  }

  const auto dets = enumerate_dets(prob.norb, prob.nelec);
  std::unordered_map<uint32_t, int> rank;
  rank.reserve(2 * dets.size());
  for (size_t i = 0; i < dets.size(); ++i) rank[dets[i]] = i;

  // Product state: amplitude = prod_k det of the chosen 2x4 minor.
  VecX v = VecX::Zero(dets.size());
  const int nk = prob.grid.size();
  const std::array<std::pair<int, int>, 6> pairList = {
      {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};
  std::vector<int> choice(nk, 0);
  while (true) {
    uint32_t D = 0;
    cxd amp = 1.0;
    for (int ik = 0; ik < nk; ++ik) {
      const auto [a, b] = pairList[choice[ik]];
      D |= (1u << (4 * ik + a)) | (1u << (4 * ik + b));
      amp *= occ[ik](a, 0) * occ[ik](b, 1) - occ[ik](b, 0) * occ[ik](a, 1);
    }
    v(rank.at(D)) += amp;
    int pos = 0;
    while (pos < nk && ++choice[pos] == 6) choice[pos++] = 0;
    if (pos == nk) break;
  }
  v.normalize();

  const auto tl = make_terms(prob);
  VecX hv = VecX::Zero(dets.size());
  apply_h(tl, dets, rank, v, hv);
  const cxd e = v.dot(hv);
  return e.real();
}

double correlation_energy(const FockSpaceProblem& prob, double hfTotalEnergy) {
  const auto res = ground_state(prob, 1);
  const double corr = (res.energies.front() - hfTotalEnergy) / prob.grid.size();
  if (corr > 1e-9)
    throw Error("physics",
                "correlation energy came out positive: the variational bound is violated");
  return corr;
}

}  // namespace tbg
