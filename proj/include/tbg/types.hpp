#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace tbg {

using cxd = std::complex<double>;

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Vec2i = Eigen::Vector2i;

using Mat4 = Eigen::Matrix4cd;
using MatX = Eigen::MatrixXcd;
using VecX = Eigen::VectorXcd;
using VecXd = Eigen::VectorXd;

inline constexpr cxd I1{0.0, 1.0};

// e^2 / (4 pi eps0) in meV * Angstrom. Folded into the screened potential so
// that interaction matrix elements come out in meV.
inline constexpr double kCoulombMeVAngstrom = 14399.645;

inline constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }

inline Mat2 rotation(double rad) {
  Mat2 r;
  r << std::cos(rad), -std::sin(rad), std::sin(rad), std::cos(rad);
  return r;
}

// Error with a machine-readable category, surfaced by the CLI as exit status.
class Error : public std::runtime_error {
 public:
  Error(std::string category, const std::string& msg)
      : std::runtime_error(msg), category_(std::move(category)) {}
  const std::string& category() const { return category_; }

 private:
  std::string category_;
};

}  // namespace tbg
