#include <doctest.h>

#include <cmath>
#include <random>

#include "tbg/gauge.hpp"

using namespace tbg;

namespace {

struct Fixture {
  MoireGeometry g = build_geometry(1.05, 2.46);
  PlaneWaveBasis b = PlaneWaveBasis::make(4.0);
  KGrid grid;
  FlatBandSet raw, pol;
  GaugeUnitaries gauge;

  explicit Fixture(int nk = 2, double w0 = 0.0) {
    grid = mp_grid(g, nk, nk);
    raw = compute_flat_bands(w0 == 0.0 ? ModelSpec::chiral(113.25) : ModelSpec::bm(w0, 113.25),
                             g, b, grid);
    gauge = scdm_gauge(raw);
    pol = apply_gauge(raw, gauge);
  }
};

double off_sublattice_weight(const PlaneWaveBasis& b, const VecX& v, int sub) {
  double w = 0.0;
  for (int ig = 0; ig < b.ng(); ++ig)
    for (int l = 0; l < 2; ++l) w += std::norm(v(b.index(ig, l, 1 - sub)));
  return w;
}

}  // namespace

TEST_CASE("scdm gauge: unitarity, polarization, round trip") {
  Fixture f;
  for (int ik = 0; ik < f.grid.size(); ++ik) {
    CHECK((f.gauge.U[ik].adjoint() * f.gauge.U[ik] - Mat4::Identity()).norm() < 1e-12);
    // valley-block diagonal
    CHECK(f.gauge.U[ik].block<2, 2>(0, 2).norm() == 0.0);
    CHECK(f.gauge.U[ik].block<2, 2>(2, 0).norm() == 0.0);
    // chiral limit: off-sublattice weight < 1e-6 per state, (A,B) order
    CHECK(off_sublattice_weight(f.b, f.pol.cK[ik].col(0), 0) < 1e-6);
    CHECK(off_sublattice_weight(f.b, f.pol.cK[ik].col(1), 1) < 1e-6);
    CHECK(off_sublattice_weight(f.b, f.pol.cKp[ik].col(0), 0) < 1e-6);
    CHECK(off_sublattice_weight(f.b, f.pol.cKp[ik].col(1), 1) < 1e-6);
  }
  // applying U then U^dag is the identity on the band space
  FlatBandSet back = f.pol;
  for (int ik = 0; ik < f.grid.size(); ++ik) {
    back.cK[ik] = f.pol.cK[ik] * f.gauge.U[ik].block<2, 2>(0, 0).adjoint();
    CHECK((back.cK[ik] - f.raw.cK[ik]).norm() < 1e-12);
  }
}

TEST_CASE("rotated form factors are diagonal at the chiral limit") {
  Fixture f;
  const auto ff = form_factors(f.pol, 3.0);
  for (int ik = 0; ik < f.grid.size(); ++ik)
    for (int ikp = 0; ikp < f.grid.size(); ++ikp)
      for (int ig = 0; ig < ff.nG(); ++ig) {
        const Mat4& r = ff.at(ik, ikp, ig);
        for (int m = 0; m < 4; ++m)
          for (int n = 0; n < 4; ++n)
            if (m != n) CHECK(std::abs(r(m, n)) < 1e-6);
      }
}

TEST_CASE("candidate states are projectors with the displayed entries") {
  const auto g = build_geometry(1.05, 2.46);
  const auto grid = mp_grid(g, 2, 2);
  for (auto which : {CandidateState::QH, CandidateState::VH, CandidateState::VP,
                     CandidateState::KIVC, CandidateState::TIVC}) {
    for (double phi : {0.0, kPi / 4.0, kPi / 2.0}) {
      const auto P = candidate_state(which, phi, grid);
      CHECK(P.projectorDefect() < 1e-14);
      CHECK(P.hermitianDefect() < 1e-14);
      CHECK(P.totalTrace() == doctest::Approx(2.0 * grid.size()).epsilon(1e-14));
      // k independent
      CHECK((P.P[0] - P.P[grid.size() - 1]).norm() == 0.0);
    }
  }
  // pinned entries
  const Mat4 qh = candidate_block(CandidateState::QH, 0.0);
  CHECK(qh(0, 0).real() == 1.0);
  CHECK(qh(3, 3).real() == 1.0);
  CHECK(std::abs(qh(1, 1)) + std::abs(qh(2, 2)) == 0.0);
  const Mat4 kivc = candidate_block(CandidateState::KIVC, 0.0);
  CHECK(kivc(0, 3) == cxd(0.0, -0.5));
  CHECK(kivc(1, 2) == cxd(0.0, 0.5));
  CHECK(kivc(2, 1) == cxd(0.0, -0.5));
  CHECK(kivc(3, 0) == cxd(0.0, 0.5));
  CHECK_THROWS_AS(candidate_from_name("XYZ"), Error);
}

TEST_CASE("sewing matrices at the chiral limit") {
  Fixture f;
  const auto bC = sewing_matrix(f.pol, Symmetry::C2zT);
  const auto bX = sewing_matrix(f.pol, Symmetry::NuxT);
  const auto bY = sewing_matrix(f.pol, Symmetry::NuyT);
  CHECK(bC.maxUnitarityDefect < 1e-8);
  CHECK(bX.maxUnitarityDefect < 1e-8);
  CHECK(bY.maxUnitarityDefect < 1e-8);
  for (int ik = 0; ik < f.grid.size(); ++ik) {
    // C2zT: valley-diagonal sublattice swap with beta = b_K conj(b_K') = -1
    const Mat4& B = bC.B[ik];
    CHECK(std::abs(B(0, 1)) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(std::abs(B(0, 0)) < 1e-8);
    const cxd beta = B(0, 1) * std::conj(B(2, 3));
    CHECK(std::abs(beta + 1.0) < 1e-6);
    // nu_x T: plain valley swap in the canonical gauge
    CHECK((bX.B[ik] - (Mat4() << Mat2c::Zero(), Mat2c::Identity(), Mat2c::Identity(),
                       Mat2c::Zero())
                          .finished()
                          .eval())
              .norm() < 1e-6);
    // swapping band order permutes rows/columns correspondingly
  }
}

TEST_CASE("order parameters reproduce Table 1 (TIVC C2zT row follows KIVC's)") {
  Fixture f;
  const auto bC = sewing_matrix(f.pol, Symmetry::C2zT);
  const auto bX = sewing_matrix(f.pol, Symmetry::NuxT);
  const auto bY = sewing_matrix(f.pol, Symmetry::NuyT);
  auto O = [&](CandidateState s, double phi) {
    const auto P = candidate_state(s, phi, f.grid);
    return OrderParameters{order_parameter(P, bC, f.grid), order_parameter(P, bX, f.grid),
                           order_parameter(P, bY, f.grid)};
  };
  const double tol = 1e-6;
  {
    const auto o = O(CandidateState::QH, 0.0);
    CHECK(o.c2zt == doctest::Approx(1.0).epsilon(tol));
    CHECK(o.nuxT == doctest::Approx(1.0).epsilon(tol));
    CHECK(o.nuyT == doctest::Approx(1.0).epsilon(tol));
  }
  {
    const auto o = O(CandidateState::VH, 0.0);
    CHECK(o.c2zt == doctest::Approx(1.0).epsilon(tol));
    CHECK(std::abs(o.nuxT) < tol);
    CHECK(std::abs(o.nuyT) < tol);
  }
  {
    const auto o = O(CandidateState::VP, 0.0);
    CHECK(std::abs(o.c2zt) < tol);
    CHECK(o.nuxT == doctest::Approx(1.0).epsilon(tol));
    CHECK(o.nuyT == doctest::Approx(1.0).epsilon(tol));
  }
  for (double phi : {0.0, kPi / 4.0, kPi / 2.0}) {
    const auto k = O(CandidateState::KIVC, phi);
    CHECK(k.c2zt == doctest::Approx(std::abs(std::cos(phi))).epsilon(1e-6));
    CHECK(k.nuxT == doctest::Approx(1.0).epsilon(tol));
    CHECK(std::abs(k.nuyT) < tol);
    const auto t = O(CandidateState::TIVC, phi);
    // Note: with any fixed sublattice-swap sewing matrix the displayed KIVC
    // and TIVC give the same C2zT value; Table 1's |sin phi| for TIVC is not
    // realizable together with KIVC's |cos phi| (see the acceptance suite).
    CHECK(t.c2zt == doctest::Approx(std::abs(std::cos(phi))).epsilon(1e-6));
    CHECK(std::abs(t.nuxT) < tol);
    CHECK(t.nuyT == doctest::Approx(1.0).epsilon(tol));
  }
}

TEST_CASE("symmetric synthetic P gives zero; unitary-conjugation invariance") {
  Fixture f;
  const auto bC = sewing_matrix(f.pol, Symmetry::C2zT);
  // build P = (P0 + B conj(P0) B^-1)/2-ish projector: use VP which is exactly
  // symmetric, then check invariance under commuting unitaries
  const auto P = candidate_state(CandidateState::VP, 0.0, f.grid);
  CHECK(order_parameter(P, bC, f.grid) < 1e-6);

  // scaling P by a unitary that commutes with the B action leaves O unchanged
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 2 * kPi);
  const auto Pk = candidate_state(CandidateState::KIVC, 0.3, f.grid);
  const double o0 = order_parameter(Pk, bC, f.grid);
  // diag(e^{ia}, e^{ib}, e^{-ia}, e^{-ib})-type phases commute with the
  // C2zT action when paired as below
  const double a = u(rng);
  Mat4 U = Mat4::Zero();
  U(0, 0) = std::exp(I1 * a);
  U(1, 1) = std::exp(-I1 * a);
  U(2, 2) = std::exp(-I1 * a);
  U(3, 3) = std::exp(I1 * a);
  OneRdm Pu;
  for (const auto& p : Pk.P) Pu.P.push_back(U * p * U.adjoint());
  // transform B consistently (same gauge): B -> U B U^T for antiunitaries
  SewingMatrix bU = bC;
  for (auto& B : bU.B) B = U * B * U.transpose();
  CHECK(order_parameter(Pu, bU, f.grid) == doctest::Approx(o0).epsilon(1e-9));
}

TEST_CASE("away from the chiral limit the gauge is best effort but labeled") {
  Fixture f(2, 0.7 * 113.25);
  // off-sublattice weight no longer tiny but labels still deterministic
  for (int ik = 0; ik < f.grid.size(); ++ik) {
    const double wA = off_sublattice_weight(f.b, f.pol.cK[ik].col(0), 0);
    const double wB = off_sublattice_weight(f.b, f.pol.cK[ik].col(1), 1);
    CHECK(wA < 0.5);
    CHECK(wB < 0.5);
  }
}
