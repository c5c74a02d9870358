#include "tbg/hartree_fock.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>

#include <json.hpp>

namespace tbg {

BlockSeq h0_matrix(const FlatBandSet& bands, const GaugeUnitaries* gauge) {
  BlockSeq h(bands.nk());
  for (int ik = 0; ik < bands.nk(); ++ik) {
    const Mat4 diag = bands.eps[ik].cast<cxd>().asDiagonal();
    if (gauge)
      h[ik] = gauge->U[ik].adjoint() * diag * gauge->U[ik];
    else
      h[ik] = diag;
  }
  return h;
}

BlockSeq hartree(const OneRdm& P, const FormFactorTensor& ff, const ScreenedPotential& pot,
                 double moireCellArea) {
  const int nk = ff.grid.size();
  if (P.nk() != nk) throw Error("config", "1-RDM and form factors live on different grids");
  const double norm = 1.0 / (nk * moireCellArea);

  // Hartree weights: for every G, sum_k' tr(rho_{k'k'}(-G) P(k')).
  std::vector<cxd> weight(ff.nG());
  std::vector<int> negIndex(ff.nG());
  for (int ig = 0; ig < ff.nG(); ++ig) {
    negIndex[ig] = ff.gIndex(Vec2i(-ff.gset[ig]));
    if (negIndex[ig] < 0) throw Error("internal", "form-factor G set not negation closed");
  }
  for (int ig = 0; ig < ff.nG(); ++ig) {
    cxd acc = 0.0;
    for (int ikp = 0; ikp < nk; ++ikp)
      acc += (ff.at(ikp, ikp, negIndex[ig]) * P.P[ikp]).trace();
    weight[ig] = acc;
  }

  BlockSeq J(nk, Mat4::Zero());
  for (int ik = 0; ik < nk; ++ik) {
    Mat4 acc = Mat4::Zero();
    for (int ig = 0; ig < ff.nG(); ++ig)
      acc += v_hat(pot, ff.gvecs[ig]) * weight[ig] * ff.at(ik, ik, ig);
    J[ik] = norm * 0.5 * (acc + acc.adjoint().eval());
  }
  return J;
}

BlockSeq fock_exchange(const OneRdm& P, const FormFactorTensor& ff, const ScreenedPotential& pot,
                       double moireCellArea) {
  const int nk = ff.grid.size();
  if (P.nk() != nk) throw Error("config", "1-RDM and form factors live on different grids");
  const double norm = 1.0 / (nk * moireCellArea);
  BlockSeq K(nk, Mat4::Zero());
  for (int ik = 0; ik < nk; ++ik) {
    Mat4 acc = Mat4::Zero();
    for (int ikp = 0; ikp < nk; ++ikp) {
      const Vec2 dk = ff.grid.points[ikp] - ff.grid.points[ik];
      for (int ig = 0; ig < ff.nG(); ++ig) {
        const Mat4& r = ff.at(ik, ikp, ig);
        acc += v_hat(pot, dk + ff.gvecs[ig]) * (r * P.P[ikp] * r.adjoint());
      }
    }
    K[ik] = norm * 0.5 * (acc + acc.adjoint().eval());
  }
  return K;
}

BlockSeq subtraction(const FormFactorTensor& ff, const ScreenedPotential& pot,
                     double moireCellArea) {
  OneRdm half;
  half.P.assign(ff.grid.size(), 0.5 * Mat4::Identity());
  const BlockSeq J = hartree(half, ff, pot, moireCellArea);
  const BlockSeq K = fock_exchange(half, ff, pot, moireCellArea);
  BlockSeq sub(ff.grid.size());
  for (size_t i = 0; i < sub.size(); ++i) sub[i] = J[i] - K[i];
  return sub;
}

double hf_energy(const OneRdm& P, const BlockSeq& H0, const BlockSeq& Hsub, const BlockSeq& J,
                 const BlockSeq& K) {
  cxd e = 0.0;
  for (int ik = 0; ik < P.nk(); ++ik) {
    e += ((H0[ik] - Hsub[ik]) * P.P[ik]).trace();
    e += 0.5 * ((J[ik] - K[ik]) * P.P[ik]).trace();
  }
  if (std::abs(e.imag()) > 1e-6)
    throw Error("numerics", "Hartree-Fock energy picked up an imaginary part");
  return e.real();
}

BlockSeq fock_matrix(const OneRdm& P, const ScfProblem& prob) {
  const BlockSeq J = hartree(P, *prob.ff, prob.pot, prob.moireCellArea);
  const BlockSeq K = fock_exchange(P, *prob.ff, prob.pot, prob.moireCellArea);
  BlockSeq F(P.nk());
  for (int ik = 0; ik < P.nk(); ++ik)
    F[ik] = prob.H0[ik] - prob.Hsub[ik] + J[ik] - K[ik];
  return F;
}

double commutator_norm(const BlockSeq& F, const OneRdm& P) {
  double num = 0.0, den = 0.0;
  for (int ik = 0; ik < P.nk(); ++ik) {
    num += (F[ik] * P.P[ik] - P.P[ik] * F[ik]).squaredNorm();
    den += F[ik].squaredNorm();
  }
  return den == 0.0 ? 0.0 : std::sqrt(num / den);
}

double homo_lumo_gap(const BlockSeq& F, const OneRdm& P) {
  double occMax = -1e300, virMin = 1e300;
  for (int ik = 0; ik < P.nk(); ++ik) {
    Eigen::SelfAdjointEigenSolver<Mat4> es(F[ik]);
    // occupied = the two lowest per k (fixed per-k filling); when P deviates
    // from the aufbau filling the gap is still measured on the Fock spectrum.
    occMax = std::max(occMax, es.eigenvalues()(1));
    virMin = std::min(virMin, es.eigenvalues()(2));
  }
  return virMin - occMax;
}

namespace {

// Aufbau within each k block at fixed filling two, with overlap tie-breaking
// against the previous occupied space inside a degenerate cluster at the edge.
OneRdm aufbau(const BlockSeq& F, const OneRdm* prev, bool* degenerateEdge) {
  OneRdm next;
  next.P.resize(F.size());
  if (degenerateEdge) *degenerateEdge = false;
  for (size_t ik = 0; ik < F.size(); ++ik) {
    Eigen::SelfAdjointEigenSolver<Mat4> es(F[ik]);
    const auto& w = es.eigenvalues();
    const Mat4& V = es.eigenvectors();
    const double tie = 1e-9;
    if (w(2) - w(1) < tie) {
      if (degenerateEdge) *degenerateEdge = true;
      // cluster spanning the edge: [lo, hi)
      int lo = 1, hi = 2;
      while (lo > 0 && w(1) - w(lo - 1) < tie) --lo;
      while (hi < 4 && w(hi) - w(1) < tie) ++hi;
      const int need = 2 - lo;  // states to pick from the cluster
      MatX C = V.middleCols(lo, hi - lo);
      Eigen::Matrix4cd Pprev =
          prev ? prev->P[ik] : Eigen::Matrix4cd(0.5 * Mat4::Identity());
      // occupy the cluster directions with largest overlap with prev
      MatX M = C.adjoint() * Pprev * C;
      Eigen::SelfAdjointEigenSolver<MatX> ses(0.5 * (M + M.adjoint()));
      // eigenvalues ascending: take the top `need`
      MatX pick = C * ses.eigenvectors().rightCols(need);
      Mat4 P = V.leftCols(lo) * V.leftCols(lo).adjoint();
      P += pick * pick.adjoint();
      next.P[ik] = P;
    } else {
      next.P[ik] = V.leftCols(2) * V.leftCols(2).adjoint();
    }
  }
  return next;
}

struct DiisState {
  std::deque<BlockSeq> fockHist;
  std::deque<BlockSeq> errHist;
  int history = 8;

  void push(const BlockSeq& F, const OneRdm& P) {
    BlockSeq err(F.size());
    for (size_t ik = 0; ik < F.size(); ++ik)
      err[ik] = F[ik] * P.P[ik] - P.P[ik] * F[ik];
    fockHist.push_back(F);
    errHist.push_back(err);
    while (static_cast<int>(fockHist.size()) > history) {
      fockHist.pop_front();
      errHist.pop_front();
    }
  }

  static cxd dot(const BlockSeq& a, const BlockSeq& b) {
    cxd s = 0.0;
    for (size_t ik = 0; ik < a.size(); ++ik)
      s += (a[ik].adjoint() * b[ik]).trace();
    return s;
  }

  // Pulay extrapolation; empty result when the system is singular.
  std::optional<BlockSeq> extrapolate() const {
    const int m = static_cast<int>(fockHist.size());
    if (m < 2) return std::nullopt;
    MatX B = MatX::Zero(m + 1, m + 1);
    VecX rhs = VecX::Zero(m + 1);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) B(i, j) = dot(errHist[i], errHist[j]);
    for (int i = 0; i < m; ++i) {
      B(i, m) = -1.0;
      B(m, i) = -1.0;
    }
    rhs(m) = -1.0;
    Eigen::FullPivLU<MatX> lu(B);
    if (!lu.isInvertible()) return std::nullopt;
    const VecX c = lu.solve(rhs);
    BlockSeq F(fockHist[0].size(), Mat4::Zero());
    for (int i = 0; i < m; ++i)
      for (size_t ik = 0; ik < F.size(); ++ik) F[ik] += c(i) * fockHist[i][ik];
    for (auto& f : F) f = 0.5 * (f + f.adjoint().eval());
    return F;
  }
};

}  // namespace

std::pair<OneRdm, ScfReport> scf_solve(const OneRdm& init, const ScfProblem& prob,
                                       const ScfOptions& opts) {
  const int nk = static_cast<int>(prob.H0.size());
  if (init.nk() != nk) throw Error("config", "initial 1-RDM grid mismatch");
  if (init.hermitianDefect() > 1e-10 || init.projectorDefect() > 1e-6 ||
      std::abs(init.totalTrace() - 2.0 * nk) > 1e-8)
    throw Error("config", "initial 1-RDM must be a Hermitian projector with trace 2 per k");

  OneRdm P = init;
  ScfReport rep;
  DiisState diis;
  diis.history = opts.diisHistory;

  auto energyOf = [&](const OneRdm& p) {
    const BlockSeq J = hartree(p, *prob.ff, prob.pot, prob.moireCellArea);
    const BlockSeq K = fock_exchange(p, *prob.ff, prob.pot, prob.moireCellArea);
    return hf_energy(p, prob.H0, prob.Hsub, J, K);
  };

  BlockSeq F = fock_matrix(P, prob);
  double E = energyOf(P);
  BlockSeq Fused = F;

  for (int it = 0; it < opts.maxIter; ++it) {
    diis.push(F, P);
    rep.iterations = it + 1;

    const double comm = commutator_norm(F, P);
    const double gap = homo_lumo_gap(F, P);
    rep.energyTrace.push_back(E);
    rep.commutatorTrace.push_back(comm);
    rep.gapTrace.push_back(gap);

    const bool energyFlat =
        it > 0 && std::abs(rep.energyTrace[it] - rep.energyTrace[it - 1]) / nk <
                      opts.tolEnergyPerSite;
    if (comm < opts.tolCommutator && energyFlat) {
      rep.converged = true;
      break;
    }

    // Proposal 1: DIIS-extrapolated Fock; fallback: damped linear mixing.
    bool degenerate = false;
    OneRdm Pnew;
    double Enew = 0.0;
    bool accepted = false;
    if (auto Fd = diis.extrapolate()) {
      Pnew = aufbau(*Fd, &P, &degenerate);
      Enew = energyOf(Pnew);
      if (Enew <= E + 1e-10) {
        accepted = true;
        Fused = *Fd;
      }
    }
    if (!accepted) {
      BlockSeq Fmix(nk);
      for (int ik = 0; ik < nk; ++ik)
        Fmix[ik] = (1.0 - opts.mixing) * Fused[ik] + opts.mixing * F[ik];
      Pnew = aufbau(Fmix, &P, &degenerate);
      Enew = energyOf(Pnew);
      Fused = Fmix;
    }
    rep.fermiDegenerate = rep.fermiDegenerate || degenerate;
    P = Pnew;
    E = Enew;
    F = fock_matrix(P, prob);
  }

  rep.totalEnergy = E;
  rep.energyPerSite = E / nk;
  rep.finalCommutator = commutator_norm(F, P);
  rep.homoLumoGap = homo_lumo_gap(F, P);

  // Detect whether global aufbau across k would have filled differently.
  {
    std::vector<double> occ, vir;
    for (int ik = 0; ik < nk; ++ik) {
      Eigen::SelfAdjointEigenSolver<Mat4> es(F[ik]);
      occ.push_back(es.eigenvalues()(1));
      vir.push_back(es.eigenvalues()(2));
    }
    const double occMax = *std::max_element(occ.begin(), occ.end());
    const double virMin = *std::min_element(vir.begin(), vir.end());
    rep.perKFermiMismatch = occMax > virMin + 1e-12;
  }
  return {P, rep};
}

void write_scf_trace(const ScfReport& rep, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("io", "cannot open " + path + " for writing");
  out << "# tbg-scf-trace-v1\niteration,energy_mev,commutator,gap_mev\n";
  char buf[128];
  for (size_t i = 0; i < rep.energyTrace.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.12g,%.12g,%.12g\n", i, rep.energyTrace[i],
                  rep.commutatorTrace[i], rep.gapTrace[i]);
    out << buf;
  }
}

void write_rdm_json(const OneRdm& P, const std::string& gaugeTag, const std::string& path) {
  nlohmann::json j;
  j["schema"] = "tbg-onerdm-v1";
  j["gauge"] = gaugeTag;
  j["basis_order"] = {"K,A", "K,B", "K',A", "K',B"};
  auto& blocks = j["blocks"];
  for (const auto& p : P.P) {
    nlohmann::json m = nlohmann::json::array();
    for (int r = 0; r < 4; ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (int c = 0; c < 4; ++c) row.push_back({p(r, c).real(), p(r, c).imag()});
      m.push_back(row);
    }
    blocks.push_back(m);
  }
  std::ofstream out(path);
  if (!out) throw Error("io", "cannot open " + path + " for writing");
  out << j.dump(1) << "\n";
}

OneRdm read_rdm_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open " + path);
  nlohmann::json j;
  in >> j;
  if (j.value("schema", "") != "tbg-onerdm-v1") throw Error("parse", "unknown 1-RDM schema");
  OneRdm P;
  for (const auto& m : j.at("blocks")) {
    Mat4 p;
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c)
        p(r, c) = cxd(m.at(r).at(c).at(0).get<double>(), m.at(r).at(c).at(1).get<double>());
    P.P.push_back(p);
  }
  return P;
}

}  // namespace tbg
