#include "tbg/hopping.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

namespace tbg {

using nlohmann::json;

HopMatrix HopMatrix::adjoint() const {
  HopMatrix a;
  a.m = m.adjoint();
  a.grad[0] = grad[0].adjoint();
  a.grad[1] = grad[1].adjoint();
  return a;
}

namespace {

void apply_orbit_phase(Mat2c& m) {
  const cxd w = std::exp(cxd(0.0, -2.0 * kPi / 3.0));
  m(0, 1) *= w;
  m(1, 0) *= std::conj(w);
}

}  // namespace

HopMatrix rotate_hop_120(const HopMatrix& h) {
  HopMatrix r;
  r.m = h.m;
  apply_orbit_phase(r.m);
  const Mat2 R = rotation(2.0 * kPi / 3.0);
  for (int c = 0; c < 2; ++c) {
    r.grad[c] = R(c, 0) * h.grad[0] + R(c, 1) * h.grad[1];
    apply_orbit_phase(r.grad[c]);
  }
  return r;
}

HopMatrix complete_c2zt(cxd aa, cxd ab, const Eigen::Vector2cd& aaGrad,
                        const Eigen::Vector2cd& abGrad) {
  HopMatrix h;
  h.m << aa, ab, std::conj(ab), std::conj(aa);
  for (int c = 0; c < 2; ++c)
    h.grad[c] << aaGrad(c), abGrad(c), std::conj(abGrad(c)), std::conj(aaGrad(c));
  return h;
}

HopMatrix mirror_layer(const HopMatrix& h) {
  HopMatrix r;
  r.m = h.m.conjugate();
  r.grad[0] = h.grad[0].conjugate();
  r.grad[1] = -h.grad[1].conjugate();
  return r;
}

int mirrored_intra_hop(const HopShells& shells, const MoireGeometry& geom, int j) {
  (void)geom;
  // -Mx (m b1 + n b2) has coordinates (n, m).
  const Vec2i target(shells.intraP[j].y(), shells.intraP[j].x());
  for (int i = 0; i < 12; ++i)
    if (shells.intraP[i] == target) return i;
  throw Error("internal", "mirrored intralayer hop not found in shell set");
}

namespace {

// Orbit completion: representative hops sit at positions {0, 3, 6, 9}
// (0-based); three-vector shells step by 1, six-vector shells by 2, wrapping
// within the shell (angle-sorted shells make each step an exact +120 degrees).
template <typename Arr>
void complete_orbits(Arr& hops, const std::vector<int>& shellOf,
                     const std::vector<int>& shellSizes) {
  for (int rep : {0, 3, 6, 9}) {
    const int size = shellSizes[shellOf[rep]];
    const int step = size == 3 ? 1 : 2;
    int start = rep;
    while (start > 0 && shellOf[start - 1] == shellOf[rep]) --start;
    auto pos = [&](int m) { return start + (rep - start + m * step) % size; };
    hops[pos(1)] = rotate_hop_120(hops[pos(0)]);
    hops[pos(2)] = rotate_hop_120(hops[pos(1)]);
  }
}

std::vector<int> shell_sizes(const std::vector<int>& shellOf) {
  std::vector<int> sizes(*std::max_element(shellOf.begin(), shellOf.end()) + 1, 0);
  for (int s : shellOf) ++sizes[s];
  return sizes;
}

}  // namespace

HoppingTables bundled_tables_1p05() {
  const double theta = 1.05;
  HoppingTables t;
  t.theta_deg = theta;
  t.v = 5.339e3;    // meV * A
  t.v1 = -0.783e3;  // meV * A^2
  t.v2 = -3.405e3;
  t.sinTheta = {std::sin(deg2rad(-theta / 2.0)), std::sin(deg2rad(theta / 2.0))};

  using V2c = Eigen::Vector2cd;
  auto& in1 = t.intra[0];
  in1[0] = complete_c2zt(-0.02, {14.72, -8.13}, V2c(20.41, 11.04),
                         V2c(cxd(16.48, 8.99), cxd(-9.65, 16.51)));
  in1[3] = complete_c2zt(0.02, {15.61, -8.65}, V2c(20.77, 11.45),
                         V2c(cxd(16.68, 9.76), cxd(-9.09, 16.64)));
  in1[6] = complete_c2zt(-0.02, {0.26, 0.18}, V2c(0.36, -0.23),
                         V2c(cxd(0.28, -0.18), cxd(0.18, 0.31)));
  in1[9] = complete_c2zt(0.02, {0.28, 0.15}, V2c(0.36, -0.22),
                         V2c(cxd(0.32, -0.17), cxd(0.17, 0.28)));

  t.inter[0] = complete_c2zt({78.58, -2.21}, {113.25, -3.09},
                             V2c(cxd(-87.2, 0.58), cxd(0.85, 0.05)),
                             V2c(cxd(-93.54, 1.45), cxd(0.87, -80.40)));
  t.inter[3] = complete_c2zt({-0.36, 0.02}, {-1.57, 3.01},
                             V2c(cxd(1.79, -0.08), cxd(3.88, -0.14)),
                             V2c(cxd(-0.81, -1.87), cxd(2.23, -1.97)));
  t.inter[6] = complete_c2zt({10.65, -0.30}, {-6.02, -8.88},
                             V2c(cxd(4.71, -0.06), cxd(-5.17, -0.02)),
                             V2c(cxd(3.60, -7.31), cxd(5.48, 2.18)));
  t.inter[9] = complete_c2zt({11.44, -0.31}, {-5.05, 10.34},
                             V2c(cxd(5.19, -0.02), cxd(4.97, 0.01)),
                             V2c(cxd(4.00, 8.08), cxd(-5.43, 1.99)));

  const auto geom = build_geometry(theta, 2.46);
  const auto shells = hop_shells(geom);
  complete_orbits(in1, shells.intraShell, shell_sizes(shells.intraShell));
  complete_orbits(t.inter, shells.interShell, shell_sizes(shells.interShell));
  for (int j = 0; j < 12; ++j)
    t.intra[1][mirrored_intra_hop(shells, geom, j)] = mirror_layer(in1[j]);
  return t;
}

// ---------------------------------------------------------------------------
// JSON serialization. Complex numbers are [re, im] pairs; units are declared
// in the header block (hops in meV and meV*A, Dirac constants in eV*A and
// eV*A^2 as printed, converted to meV at load).

namespace {

json cx_to_json(cxd z) { return json::array({z.real(), z.imag()}); }

cxd cx_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw Error("parse", "expected [re, im] pair at " + where);
  return {j[0].get<double>(), j[1].get<double>()};
}

json mat_to_json(const Mat2c& m) {
  return json::array({json::array({cx_to_json(m(0, 0)), cx_to_json(m(0, 1))}),
                      json::array({cx_to_json(m(1, 0)), cx_to_json(m(1, 1))})});
}

Mat2c mat_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) throw Error("parse", "expected 2x2 matrix at " + where);
  Mat2c m;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c)
      m(r, c) = cx_from_json(j.at(r).at(c),
                             where + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
  return m;
}

json hop_to_json(const HopMatrix& h) {
  return json{{"m", mat_to_json(h.m)},
              {"grad_x", mat_to_json(h.grad[0])},
              {"grad_y", mat_to_json(h.grad[1])}};
}

HopMatrix hop_from_json(const json& j, const std::string& where) {
  HopMatrix h;
  if (!j.contains("m")) throw Error("parse", "missing \"m\" at " + where);
  h.m = mat_from_json(j.at("m"), where + ".m");
  h.grad[0] = mat_from_json(j.at("grad_x"), where + ".grad_x");
  h.grad[1] = mat_from_json(j.at("grad_y"), where + ".grad_y");
  return h;
}

}  // namespace

void save_tables(const HoppingTables& t, const std::string& path) {
  json j;
  j["schema"] = "tbg-hopping-tables-v1";
  j["units"] = {{"hops", "meV"},
                {"hop_gradients", "meV*angstrom"},
                {"v", "eV*angstrom"},
                {"v1", "eV*angstrom^2"},
                {"v2", "eV*angstrom^2"}};
  j["theta_deg"] = t.theta_deg;
  j["dirac"] = {{"v", t.v * 1e-3},
                {"v1", t.v1 * 1e-3},
                {"v2", t.v2 * 1e-3},
                {"sin_theta", {t.sinTheta[0], t.sinTheta[1]}}};
  for (int l = 0; l < 2; ++l) {
    json arr = json::array();
    for (const auto& h : t.intra[l]) arr.push_back(hop_to_json(h));
    j["intra"].push_back(arr);
  }
  j["inter"] = json::array();
  for (const auto& h : t.inter) j["inter"].push_back(hop_to_json(h));

  std::ofstream out(path);
  if (!out) throw Error("io", "cannot open " + path + " for writing");
  out << j.dump(1) << "\n";
}

HoppingTables load_tables(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open hopping tables file " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw Error("parse", std::string("invalid JSON in ") + path + ": " + e.what());
  }
  if (j.value("schema", "") != "tbg-hopping-tables-v1")
    throw Error("parse", "unrecognized schema in " + path);

  HoppingTables t;
  try {
    t.theta_deg = j.at("theta_deg").get<double>();
    const auto& d = j.at("dirac");
    t.v = d.at("v").get<double>() * 1e3;
    t.v1 = d.at("v1").get<double>() * 1e3;
    t.v2 = d.at("v2").get<double>() * 1e3;
    t.sinTheta[0] = d.at("sin_theta").at(0).get<double>();
    t.sinTheta[1] = d.at("sin_theta").at(1).get<double>();
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error("parse", std::string("bad dirac block: ") + e.what());
  }

  const auto& intra = j.at("intra");
  if (!intra.is_array() || intra.size() != 2)
    throw Error("parse", "intra must hold two layers");
  for (int l = 0; l < 2; ++l) {
    if (intra.at(l).size() != 12)
      throw Error("parse", "intra layer " + std::to_string(l + 1) + " must hold 12 hops");
    for (int k = 0; k < 12; ++k)
      t.intra[l][k] = hop_from_json(
          intra.at(l).at(k), "intra[" + std::to_string(l) + "][" + std::to_string(k) + "]");
  }
  const auto& inter = j.at("inter");
  if (!inter.is_array() || inter.size() != 12) throw Error("parse", "inter must hold 12 hops");
  for (int k = 0; k < 12; ++k)
    t.inter[k] = hop_from_json(inter.at(k), "inter[" + std::to_string(k) + "]");
  return t;
}

}  // namespace tbg
