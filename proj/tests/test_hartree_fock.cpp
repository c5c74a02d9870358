#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "tbg/hartree_fock.hpp"

using namespace tbg;

namespace {

struct HfFixture {
  MoireGeometry g = build_geometry(1.05, 2.46);
  PlaneWaveBasis b = PlaneWaveBasis::make(4.0);
  KGrid grid;
  FlatBandSet pol;
  GaugeUnitaries gauge;
  FormFactorTensor ff;
  ScreenedPotential pot;
  ScfProblem prob;

  explicit HfFixture(int nkx, int nky, const ModelSpec& spec) {
    grid = mp_grid(g, nkx, nky);
    auto raw = compute_flat_bands(spec, g, b, grid);
    gauge = scdm_gauge(raw);
    pol = apply_gauge(raw, gauge);
    ff = form_factors(pol, 4.0);
    prob.H0 = h0_matrix(raw, &gauge);
    prob.moireCellArea = g.moireCellArea();
    prob.pot = pot;
    prob.ff = &ff;
    prob.Hsub = subtraction(ff, pot, prob.moireCellArea);
  }
};

}  // namespace

TEST_CASE("h0_matrix: gauge rotation preserves spectrum and trace") {
  HfFixture f(2, 2, ModelSpec::bm(60.0, 113.25));
  auto raw = compute_flat_bands(ModelSpec::bm(60.0, 113.25), f.g, f.b, f.grid);
  const auto H0raw = h0_matrix(raw);
  const auto H0rot = h0_matrix(raw, &f.gauge);
  for (int ik = 0; ik < f.grid.size(); ++ik) {
    // eigenvalues unchanged
    Eigen::SelfAdjointEigenSolver<Mat4> a(H0raw[ik]), b2(H0rot[ik]);
    CHECK((a.eigenvalues() - b2.eigenvalues()).norm() < 1e-10);
    CHECK(H0raw[ik].trace().real() ==
          doctest::Approx(H0rot[ik].trace().real()).epsilon(1e-12));
    // raw gauge: diagonal
    Mat4 offdiag = H0raw[ik];
    offdiag.diagonal().setZero();
    CHECK(offdiag.norm() == 0.0);
  }
}

TEST_CASE("J and K: zero at P=0, Hermitian, subtraction consistency") {
  HfFixture f(2, 2, ModelSpec::chiral(113.25));
  OneRdm zero;
  zero.P.assign(f.grid.size(), Mat4::Zero());
  const auto J0 = hartree(zero, f.ff, f.pot, f.prob.moireCellArea);
  const auto K0 = fock_exchange(zero, f.ff, f.pot, f.prob.moireCellArea);
  for (int ik = 0; ik < f.grid.size(); ++ik) {
    CHECK(J0[ik].norm() == 0.0);
    CHECK(K0[ik].norm() == 0.0);
  }

  OneRdm half;
  half.P.assign(f.grid.size(), 0.5 * Mat4::Identity());
  const auto Jh = hartree(half, f.ff, f.pot, f.prob.moireCellArea);
  const auto Kh = fock_exchange(half, f.ff, f.pot, f.prob.moireCellArea);
  for (int ik = 0; ik < f.grid.size(); ++ik) {
    CHECK((Jh[ik] - Mat4(Jh[ik].adjoint())).norm() < 1e-10);
    CHECK((Kh[ik] - Mat4(Kh[ik].adjoint())).norm() < 1e-10);
    CHECK((f.prob.Hsub[ik] - (Jh[ik] - Kh[ik])).norm() < 1e-12);
  }
}

TEST_CASE("J/K match the brute-force ERI contraction on random projectors") {
  std::mt19937_64 rng(17);
  for (auto [nkx, nky] : {std::pair{1, 1}, std::pair{2, 2}}) {
    HfFixture f(nkx, nky, ModelSpec::bm(70.0, 113.25));
    const auto eri = oracles::build_eri(f.ff, f.pot, f.prob.moireCellArea);
    for (int trial = 0; trial < 3; ++trial) {
      const OneRdm P = oracles::random_projector(f.grid, rng);
      const auto J = hartree(P, f.ff, f.pot, f.prob.moireCellArea);
      const auto K = fock_exchange(P, f.ff, f.pot, f.prob.moireCellArea);
      BlockSeq Jo, Ko;
      oracles::contract_jk(eri, P, Jo, Ko);
      for (int ik = 0; ik < f.grid.size(); ++ik) {
        CHECK((J[ik] - Jo[ik]).norm() / Jo[ik].norm() < 1e-9);
        CHECK((K[ik] - Ko[ik]).norm() / Ko[ik].norm() < 1e-9);
      }
    }
  }
}

TEST_CASE("hf_energy: zero at P=0, gauge invariant") {
  HfFixture f(2, 2, ModelSpec::chiral(113.25));
  OneRdm zero;
  zero.P.assign(f.grid.size(), Mat4::Zero());
  const auto J = hartree(zero, f.ff, f.pot, f.prob.moireCellArea);
  const auto K = fock_exchange(zero, f.ff, f.pot, f.prob.moireCellArea);
  CHECK(hf_energy(zero, f.prob.H0, f.prob.Hsub, J, K) == 0.0);

  // gauge invariance: rotate all inputs by a random per-k unitary
  std::mt19937_64 rng(23);
  std::normal_distribution<double> n01;
  const OneRdm P = oracles::random_projector(f.grid, rng);
  const auto Jp = hartree(P, f.ff, f.pot, f.prob.moireCellArea);
  const auto Kp = fock_exchange(P, f.ff, f.pot, f.prob.moireCellArea);
  const double e0 = hf_energy(P, f.prob.H0, f.prob.Hsub, Jp, Kp);

  // rotate the band set, rebuild everything, evaluate the rotated P
  FlatBandSet rot = f.pol;
  std::vector<Mat4> U(f.grid.size());
  for (int ik = 0; ik < f.grid.size(); ++ik) {
    MatX A(4, 4);
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) A(r, c) = cxd(n01(rng), n01(rng));
    Eigen::HouseholderQR<MatX> qr(A);
    MatX Q = qr.householderQ();
    // keep the rotation valley-block-diagonal so the rotated set is still a
    // valid FlatBandSet
    Mat4 u = Mat4::Zero();
    u.block<2, 2>(0, 0) = Q.block<2, 2>(0, 0);
    u.block<2, 2>(2, 2) = Q.block<2, 2>(2, 2);
    // unitarize blocks
    for (int blk = 0; blk < 2; ++blk) {
      Eigen::JacobiSVD<Mat2c> svd(u.block<2, 2>(2 * blk, 2 * blk),
                                  Eigen::ComputeFullU | Eigen::ComputeFullV);
      u.block<2, 2>(2 * blk, 2 * blk) = svd.matrixU() * svd.matrixV().adjoint();
    }
    U[ik] = u;
    rot.cK[ik] = f.pol.cK[ik] * u.block<2, 2>(0, 0);
    rot.cKp[ik] = f.pol.cKp[ik] * u.block<2, 2>(2, 2);
  }
  const auto ffRot = form_factors(rot, 4.0);
  OneRdm Prot;
  for (int ik = 0; ik < f.grid.size(); ++ik)
    Prot.P.push_back(U[ik].adjoint() * P.P[ik] * U[ik]);
  BlockSeq H0rot(f.grid.size()), HsubRot = subtraction(ffRot, f.pot, f.prob.moireCellArea);
  for (int ik = 0; ik < f.grid.size(); ++ik)
    H0rot[ik] = U[ik].adjoint() * f.prob.H0[ik] * U[ik];
  const auto Jr = hartree(Prot, ffRot, f.pot, f.prob.moireCellArea);
  const auto Kr = fock_exchange(Prot, ffRot, f.pot, f.prob.moireCellArea);
  const double e1 = hf_energy(Prot, H0rot, HsubRot, Jr, Kr);
  CHECK(e1 == doctest::Approx(e0).epsilon(1e-8));
}

TEST_CASE("scf: chiral limit converges from KIVC with expected order parameters") {
  HfFixture f(2, 2, ModelSpec::chiral(113.25));
  const auto init = candidate_state(CandidateState::KIVC, 0.0, f.grid);
  auto [P, rep] = scf_solve(init, f.prob);
  CHECK(rep.converged);
  CHECK(rep.finalCommutator < 1e-8);
  CHECK(P.projectorDefect() < 1e-8);
  CHECK(P.totalTrace() == doctest::Approx(2.0 * f.grid.size()).epsilon(1e-9));
  CHECK(rep.homoLumoGap > 0.0);
  const auto o = all_order_parameters(P, f.pol);
  CHECK(o.c2zt == doctest::Approx(1.0).epsilon(1e-4));   // |cos 0|
  CHECK(o.nuxT == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(std::abs(o.nuyT) < 1e-4);
}

TEST_CASE("scf: five chiral inits are degenerate") {
  HfFixture f(2, 2, ModelSpec::chiral(113.25));
  std::vector<double> energies;
  for (auto s : {CandidateState::QH, CandidateState::VH, CandidateState::VP,
                 CandidateState::KIVC, CandidateState::TIVC}) {
    auto [P, rep] = scf_solve(candidate_state(s, 0.0, f.grid), f.prob);
    CHECK(rep.converged);
    CHECK(rep.homoLumoGap > 0.0);
    energies.push_back(rep.energyPerSite);
  }
  const auto [mn, mx] = std::minmax_element(energies.begin(), energies.end());
  CHECK(*mx - *mn < 1e-3);
}

TEST_CASE("homo-lumo gap: degenerate edge gives zero, shift invariance") {
  // synthetic Fock blocks
  BlockSeq F(2);
  Mat4 d = Mat4::Zero();
  d.diagonal() << -1.0, 0.0, 0.0, 1.0;  // degenerate edge at 0
  F[0] = d;
  F[1] = d;
  OneRdm P;
  P.P.assign(2, Mat4::Zero());
  CHECK(homo_lumo_gap(F, P) == doctest::Approx(0.0));
  for (auto& f : F) f += 3.5 * Mat4::Identity();
  CHECK(homo_lumo_gap(F, P) == doctest::Approx(0.0));
  // non-degenerate case
  BlockSeq F2(1);
  Mat4 d2 = Mat4::Zero();
  d2.diagonal() << -2.0, -1.0, 1.5, 2.0;
  F2[0] = d2;
  CHECK(homo_lumo_gap(F2, P) == doctest::Approx(2.5));
}

TEST_CASE("scf rejects bad initial states") {
  HfFixture f(1, 1, ModelSpec::chiral(113.25));
  OneRdm bad;
  bad.P.assign(1, Mat4::Identity());  // trace 4, not 2
  CHECK_THROWS_AS(scf_solve(bad, f.prob), Error);
}

TEST_CASE("scf trace file and 1-RDM json round trip") {
  HfFixture f(1, 1, ModelSpec::chiral(113.25));
  auto [P, rep] = scf_solve(candidate_state(CandidateState::VP, 0.0, f.grid), f.prob);
  write_scf_trace(rep, "scf_trace_test.csv");
  write_rdm_json(P, "sublattice-polarized", "rdm_test.json");
  const auto Q = read_rdm_json("rdm_test.json");
  REQUIRE(Q.nk() == P.nk());
  for (int ik = 0; ik < P.nk(); ++ik) CHECK((P.P[ik] - Q.P[ik]).norm() < 1e-12);
  std::remove("scf_trace_test.csv");
  std::remove("rdm_test.json");
}
