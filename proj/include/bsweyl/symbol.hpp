#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bsweyl/types.hpp"

namespace bsweyl {

/// One term c * x^m * xi^k * exp(i(a.x + b.xi)) of an analytic symbol.
struct Term {
  Complex coeff{};
  std::vector<int> xpow;
  std::vector<int> xipow;
  std::vector<double> xfreq;
  std::vector<double> xifreq;

  int degree() const;
  bool has_frequency() const;
};

struct SymbolGradient {
  Eigen::VectorXcd dx;
  Eigen::VectorXcd dxi;
};

/// Closed-form analytic symbol on C^n x C^n: a finite sum of polynomial times
/// exponential-trigonometric terms. Terms are kept merged by (powers, frequencies)
/// with exact-zero coefficients dropped, so algebraic cancellations show up as
/// an empty term list.
class SymbolExpr {
 public:
  static constexpr double kDefaultTubeRadius = 1.0;

  explicit SymbolExpr(int n = 2, double tube_radius = kDefaultTubeRadius);
  SymbolExpr(int n, std::vector<Term> terms, double tube_radius = kDefaultTubeRadius);

  static SymbolExpr constant(int n, Complex c, double tube_radius = kDefaultTubeRadius);
  /// Coordinate function x_j (0-based j).
  static SymbolExpr x(int n, int j, double tube_radius = kDefaultTubeRadius);
  /// Coordinate function xi_j (0-based j).
  static SymbolExpr xi(int n, int j, double tube_radius = kDefaultTubeRadius);
  /// exp(i(a.x + b.xi)).
  static SymbolExpr exp_i(std::vector<double> a, std::vector<double> b,
                          double tube_radius = kDefaultTubeRadius);

  int dim() const { return n_; }
  double tube_radius() const { return tube_radius_; }
  const std::vector<Term>& terms() const { return terms_; }

  bool is_zero() const { return terms_.empty(); }
  bool is_polynomial() const;
  /// Total polynomial degree; only meaningful for polynomial symbols.
  int degree() const;
  bool depends_on_x() const;
  bool in_tube(const PhasePoint& rho) const;

  SymbolExpr with_tube_radius(double tube_radius) const;

  Complex operator()(const PhasePoint& rho) const;
  /// Unchecked evaluation over raw coordinate spans (hot path).
  Complex evaluate(std::span<const Complex> x, std::span<const Complex> xi) const;
  /// Unchecked evaluation at a real point given as 2n reals (x then xi).
  Complex evaluate_real(std::span<const double> z) const;

  SymbolExpr dx(int j) const;
  SymbolExpr dxi(int j) const;

  /// Holomorphic symbol that coincides with conj(p) on real points.
  SymbolExpr conj() const;

  SymbolExpr operator-() const;
  SymbolExpr& operator+=(const SymbolExpr& other);
  SymbolExpr& operator-=(const SymbolExpr& other);
  SymbolExpr& operator*=(Complex s);

  friend SymbolExpr operator+(SymbolExpr a, const SymbolExpr& b) { return a += b; }
  friend SymbolExpr operator-(SymbolExpr a, const SymbolExpr& b) { return a -= b; }
  friend SymbolExpr operator*(const SymbolExpr& a, const SymbolExpr& b);
  friend SymbolExpr operator*(SymbolExpr a, Complex s) { return a *= s; }
  friend SymbolExpr operator*(Complex s, SymbolExpr a) { return a *= s; }
  friend SymbolExpr operator*(SymbolExpr a, double s) { return a *= Complex(s); }
  friend SymbolExpr operator*(double s, SymbolExpr a) { return a *= Complex(s); }

 private:
  void normalize();
  void check_term(const Term& t) const;

  int n_;
  double tube_radius_;
  std::vector<Term> terms_;
};

/// Evaluates p at rho. Throws DimensionError on mismatch; warns (once per
/// process) when rho lies outside the declared tube.
Complex eval(const SymbolExpr& sym, const PhasePoint& rho);

SymbolGradient gradient(const SymbolExpr& sym, const PhasePoint& rho);

/// {f, g} = f_xi . g_x - f_x . g_xi
SymbolExpr poisson_bracket(const SymbolExpr& f, const SymbolExpr& g);

/// {Re p, Im p} represented as (i/2){p, conj p}.
SymbolExpr real_bracket(const SymbolExpr& p);

/// Holomorphic real and imaginary parts: (p + conj p)/2 and (p - conj p)/(2i).
SymbolExpr real_part(const SymbolExpr& p);
SymbolExpr imag_part(const SymbolExpr& p);

/// H_f g = {f, g}.
inline SymbolExpr hamilton_field_apply(const SymbolExpr& f, const SymbolExpr& g) {
  return poisson_bracket(f, g);
}

namespace symbols {

/// 1/2((x1^2 + xi1^2) + i alpha (x2^2 + xi2^2)) - shift.
SymbolExpr cho(double alpha, Complex shift, double tube_radius = SymbolExpr::kDefaultTubeRadius);
/// Torus model eta1 + i eta2 (eta stored in the xi slots, n = 2).
SymbolExpr torus_linear();
/// Torus model eta1 + i eta2 + c eta1 eta2.
SymbolExpr torus_coupled(double c);
/// Integrable normal form of cho(alpha, shift): eta1 + i alpha eta2 - shift with
/// eta_j the harmonic actions 1/2(x_j^2 + xi_j^2).
SymbolExpr cho_normal_form(double alpha, Complex shift);
/// G = x1 x2.
SymbolExpr x1x2();
/// G = sin(x1) cos(xi2).
SymbolExpr sin_x1_cos_xi2(double tube_radius = 2.0);

}  // namespace symbols

}  // namespace bsweyl
