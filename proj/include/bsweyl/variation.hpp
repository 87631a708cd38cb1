#pragma once

#include <functional>
#include <optional>
#include <span>

#include "bsweyl/density.hpp"
#include "bsweyl/flow.hpp"
#include "bsweyl/symbol.hpp"

namespace bsweyl {

/// Tensor bump f(z) = phi(u) phi(v), phi(s) = (1 - s^2)^3 on |s| <= 1,
/// u = (Re z - Re c) / r, v = (Im z - Im c) / r. Support is the closed square of half-width r.
struct TestFunction {
  Complex center{};
  double radius = 0.25;

  TestFunction() = default;
  TestFunction(Complex center, double radius);

  double operator()(Complex z) const;
  double dre(Complex z) const;
  double dim(Complex z) const;
  double dre_re(Complex z) const;
  double dim_im(Complex z) const;
  double dre_im(Complex z) const;
  double laplacian(Complex z) const;
  /// d f / d z = (f_x - i f_y) / 2
  Complex dz(Complex z) const;
  /// d^2 f / d z^2 = (f_xx - 2 i f_xy - f_yy) / 4
  Complex dzdz(Complex z) const;

  bool in_support(Complex z) const;
  ComplexWindow support() const { return {center, radius, radius}; }
  bool supported_in(const ComplexWindow& w) const;
};

struct GaussLegendre {
  Eigen::VectorXd nodes;    // on [-1, 1]
  Eigen::VectorXd weights;
};

/// Golub-Welsch nodes and weights.
GaussLegendre gauss_legendre(int order);

struct QuadratureOptions {
  int order = 48;           // per axis
  double box_radius = 4.0;  // integration over [-R, R]^{2n}
  int threads = 0;          // 0: hardware concurrency
};

/// Tensor Gauss-Legendre quadrature over [-R, R]^dim; deterministic pairwise reduction.
double tensor_quadrature(const std::function<double(std::span<const double>)>& g, int dim, double half_width,
                         int order, int threads = 0);
Complex tensor_quadrature_complex(const std::function<Complex(std::span<const double>)>& g, int dim,
                                  double half_width, int order, int threads = 0);

struct Estimate {
  double value = 0.0;
  double error = 0.0;  // |Q_N - Q_{N-8}|
};

/// M = int f(p) dx dxi over the box. Rejects order < 8 and supports reaching the box boundary.
double moment(const TestFunction& f, const RealEvaluator& p, int n, const QuadratureOptions& opt = {});
double moment(const TestFunction& f, const SymbolExpr& p, const QuadratureOptions& opt = {});
double moment(const TestFunction& f, const DeformedSymbol& p, const QuadratureOptions& opt = {});

/// int (Lap f)(p_t) {Re p_t, Im p_t} Re G_t dx dxi.
Estimate first_variation_rhs(const TestFunction& f, const DeformedSymbol& pt, const QuadratureOptions& opt = {});

/// int (Lap f)(p) |H_p G|^2 dx dxi for integrable p and G real on real points.
Estimate second_variation_rhs(const TestFunction& f, const SymbolExpr& p, const SymbolExpr& G,
                              const QuadratureOptions& opt = {});

/// {Re q, Im q} at a real point by central differences with one Richardson level.
double fd_real_bracket(const RealEvaluator& q, std::span<const double> z, double step = 1e-5);

enum class VariationOrder { kFirst = 1, kSecond = 2 };

struct VariationReport {
  double lhs = 0.0;
  double lhs_error = 0.0;
  double rhs = 0.0;
  double rhs_error = 0.0;
  VariationOrder order = VariationOrder::kFirst;
  double t = 0.0;
  double discrepancy = 0.0;  // |lhs - rhs| / max(|rhs|, 1e-12)
};

/// d/dt M(t) by Richardson-extrapolated central differences against the first-variation integral.
VariationReport first_variation_check(const TestFunction& f, const SymbolExpr& p, const Deformation& d, double t,
                                      const QuadratureOptions& opt = {}, double step = 1e-2);

/// d^2/dt^2 M(0) by Richardson-extrapolated second differences against the second-variation integral.
VariationReport second_variation_check(const TestFunction& f, const SymbolExpr& p, const SymbolExpr& G,
                                       const QuadratureOptions& opt = {}, double step = 2e-2);

struct Certificate {
  bool found = false;
  TestFunction f;
  double value = 0.0;
  double error = 0.0;
  int candidates = 0;
};

/// Grid search over bump centers and radii inside the window for a second-variation witness.
Certificate nonequality_certificate(const SymbolExpr& p, const SymbolExpr& G, const ComplexWindow& window,
                                    int budget = 50, const QuadratureOptions& opt = {}, int search_order = 24);

}  // namespace bsweyl
