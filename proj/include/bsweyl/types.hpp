#pragma once

#include <complex>
#include <span>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace bsweyl {

using Complex = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;
inline constexpr Complex kI{0.0, 1.0};

// A point is considered real when every imaginary part is at most this.
inline constexpr double kRealPointTolerance = 1e-14;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Point (x, xi) of complexified phase space C^n x C^n.
struct PhasePoint {
  Eigen::VectorXcd x;
  Eigen::VectorXcd xi;

  PhasePoint() = default;
  explicit PhasePoint(int n) : x(Eigen::VectorXcd::Zero(n)), xi(Eigen::VectorXcd::Zero(n)) {}
  PhasePoint(Eigen::VectorXcd x_, Eigen::VectorXcd xi_);

  static PhasePoint real(std::span<const double> x, std::span<const double> xi);
  /// Packs (x, xi) into one vector of length 2n.
  static PhasePoint from_stacked(const Eigen::Ref<const Eigen::VectorXcd>& z);

  int dim() const { return static_cast<int>(x.size()); }
  Eigen::VectorXcd stacked() const;
  bool is_real() const;
  bool is_finite() const;
  double max_abs_imag() const;
};

}  // namespace bsweyl
