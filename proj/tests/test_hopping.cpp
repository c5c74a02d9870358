#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "tbg/hopping.hpp"

using namespace tbg;

TEST_CASE("bundled tables carry the published values") {
  const auto t = bundled_tables_1p05();
  CHECK(t.v == doctest::Approx(5.339e3).epsilon(1e-12));        // 5.339 eV*A
  CHECK(t.v1 == doctest::Approx(-0.783e3).epsilon(1e-12));
  CHECK(t.v2 == doctest::Approx(-3.405e3).epsilon(1e-12));
  CHECK(t.intra[0][0].m(0, 1).real() == doctest::Approx(14.72));
  CHECK(t.intra[0][0].m(0, 1).imag() == doctest::Approx(-8.13));
  CHECK(t.inter[6].m(0, 0).real() == doctest::Approx(10.65));
  CHECK(t.inter[6].m(0, 0).imag() == doctest::Approx(-0.30));
  CHECK(t.inter[0].m(0, 1).real() == doctest::Approx(113.25));
}

TEST_CASE("first-shell AA/AB ratio approx 0.7") {
  const auto t = bundled_tables_1p05();
  const double ratio = std::abs(t.inter[0].m(0, 0)) / std::abs(t.inter[0].m(0, 1));
  CHECK(ratio == doctest::Approx(78.58 / 113.25).epsilon(1e-3));
}

TEST_CASE("orbit completion: 120-degree mates differ by a phase only") {
  const auto t = bundled_tables_1p05();
  // interlayer hops 1 and 3 (0-based 0 and 2) are 120-degree related
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) {
      CHECK(std::abs(t.inter[0].m(r, c)) == doctest::Approx(std::abs(t.inter[2].m(r, c))));
      CHECK(std::abs(t.intra[0][0].m(r, c)) ==
            doctest::Approx(std::abs(t.intra[0][2].m(r, c))));
    }
  // AA entries are orbit-invariant, AB entries carry e^{-2pi i/3} per step
  CHECK(t.inter[1].m(0, 0) == t.inter[0].m(0, 0));
  const cxd w = std::exp(cxd(0.0, -2.0 * kPi / 3.0));
  CHECK(std::abs(t.inter[1].m(0, 1) - w * t.inter[0].m(0, 1)) < 1e-12);
  // gradients rotate as vectors: |grad| preserved entrywise
  const double g0 = std::sqrt(std::norm(t.inter[0].grad[0](0, 1)) +
                              std::norm(t.inter[0].grad[1](0, 1)));
  const double g1 = std::sqrt(std::norm(t.inter[1].grad[0](0, 1)) +
                              std::norm(t.inter[1].grad[1](0, 1)));
  CHECK(g0 == doctest::Approx(g1).epsilon(1e-12));
  // wrapped orbits: intralayer rep 4 (0-based 3) has mates at 0-based 5 and 1
  CHECK(std::abs(t.intra[0][1].m(0, 1)) == doctest::Approx(std::abs(t.intra[0][3].m(0, 1))));
  CHECK(std::abs(t.intra[0][5].m(0, 1)) == doctest::Approx(std::abs(t.intra[0][3].m(0, 1))));
  // interlayer shell 3 second orbit: 0-based {9, 11, 7}
  CHECK(std::abs(t.inter[7].m(0, 0)) == doctest::Approx(std::abs(t.inter[9].m(0, 0))));
  CHECK(std::abs(t.inter[11].m(0, 0)) == doctest::Approx(std::abs(t.inter[9].m(0, 0))));
}

TEST_CASE("C2zT completion fills BB/BA entries") {
  const auto t = bundled_tables_1p05();
  for (int j = 0; j < 12; ++j) {
    CHECK(std::abs(t.inter[j].m(1, 1) - std::conj(t.inter[j].m(0, 0))) < 1e-12);
    CHECK(std::abs(t.inter[j].m(1, 0) - std::conj(t.inter[j].m(0, 1))) < 1e-12);
    for (int l = 0; l < 2; ++l) {
      CHECK(std::abs(t.intra[l][j].m(1, 1) - std::conj(t.intra[l][j].m(0, 0))) < 1e-12);
      CHECK(std::abs(t.intra[l][j].m(1, 0) - std::conj(t.intra[l][j].m(0, 1))) < 1e-12);
    }
  }
}

TEST_CASE("table energy scales follow the first/second/third order hierarchy") {
  const auto t = bundled_tables_1p05();
  const auto g = build_geometry(1.05, 2.46);
  const double dK = g.s1.norm();
  const double dirac = t.v * dK;              // first order, ~170 meV
  const double shell1AB = std::abs(t.inter[0].m(0, 1));
  const double shell1AA = std::abs(t.inter[0].m(0, 0));
  const double intra1AB = std::abs(t.intra[0][0].m(0, 1));
  const double shell2 = std::abs(t.inter[3].m(0, 1));
  const double intraAA = std::abs(t.intra[0][0].m(0, 0));
  CHECK(dirac > 100.0);
  CHECK(shell1AB > 100.0);
  CHECK(shell1AA > 50.0);
  CHECK(intra1AB > 5.0);
  CHECK(intra1AB < 50.0);
  CHECK(shell2 < 5.0);
  CHECK(intraAA < 1.0);
  // first order >> second order >> below-meV terms
  CHECK(dirac > 5.0 * intra1AB);
  CHECK(intra1AB > 5.0 * intraAA);
}

TEST_CASE("json round trip and parse errors") {
  const auto t = bundled_tables_1p05();
  const std::string path = "tables_roundtrip.json";
  save_tables(t, path);
  const auto r = load_tables(path);
  CHECK(r.v == doctest::Approx(t.v).epsilon(1e-12));
  CHECK(r.theta_deg == t.theta_deg);
  for (int j = 0; j < 12; ++j) {
    CHECK(std::abs(r.inter[j].m(0, 1) - t.inter[j].m(0, 1)) < 1e-12);
    CHECK(std::abs(r.intra[1][j].grad[1](0, 1) - t.intra[1][j].grad[1](0, 1)) < 1e-12);
  }
  std::remove(path.c_str());

  CHECK_THROWS_AS(load_tables("does_not_exist.json"), Error);
  // schema violations name the offending entry
  {
    std::FILE* f = std::fopen("tables_bad.json", "w");
    std::fputs("{\"schema\":\"tbg-hopping-tables-v1\",\"theta_deg\":1.05,"
               "\"dirac\":{\"v\":5.339,\"v1\":-0.783,\"v2\":-3.405,\"sin_theta\":[0,0]},"
               "\"intra\":[[],[]],\"inter\":[]}",
               f);
    std::fclose(f);
    try {
      load_tables("tables_bad.json");
      CHECK(false);
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("intra") != std::string::npos);
    }
    std::remove("tables_bad.json");
  }
}

TEST_CASE("bundled json data file matches the in-code tables") {
  const auto t = bundled_tables_1p05();
  const auto r = load_tables(std::string(TBG_DATA_DIR) + "/relaxed_tbg_1p05.json");
  CHECK(r.v == doctest::Approx(t.v).epsilon(1e-12));
  for (int j = 0; j < 12; ++j) {
    CHECK(std::abs(r.inter[j].m(0, 0) - t.inter[j].m(0, 0)) < 1e-12);
    CHECK(std::abs(r.intra[0][j].m(0, 1) - t.intra[0][j].m(0, 1)) < 1e-12);
    CHECK(std::abs(r.intra[1][j].m(0, 1) - t.intra[1][j].m(0, 1)) < 1e-12);
  }
}
