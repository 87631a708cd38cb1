#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "bsweyl/symbol.hpp"

namespace bsweyl {

/// Generator family G_t = sum_k t^k G_k of the complex canonical flow.
/// The flow kappa_t is defined so that p_t = p o kappa_t solves
/// d/dt p_t = i H_{G_t} p_t; for t-independent G it is the plain flow of the
/// real vector field i H_G + conj(i H_G).
class Deformation {
 public:
  explicit Deformation(SymbolExpr G, double tolerance = 1e-10, double t_max = 1.0, double step_hint = 1e-2);
  Deformation(std::vector<SymbolExpr> t_coefficients, double tolerance = 1e-10, double t_max = 1.0,
              double step_hint = 1e-2);

  int dim() const { return coefficients_.front().dim(); }
  int t_degree() const { return static_cast<int>(coefficients_.size()) - 1; }
  const std::vector<SymbolExpr>& coefficients() const { return coefficients_; }
  SymbolExpr generator_at(double t) const;
  /// Smallest declared tube radius among the coefficients.
  double tube_radius() const;
  bool is_zero() const;
  bool is_quadratic() const;

  double tolerance() const { return tolerance_; }
  double t_max() const { return t_max_; }
  double step_hint() const { return step_hint_; }

  struct Derivatives;  // cached partials of each coefficient
  const Derivatives& derivatives() const { return *derivatives_; }

 private:
  std::vector<SymbolExpr> coefficients_;
  double tolerance_;
  double t_max_;
  double step_hint_;
  std::shared_ptr<const Derivatives> derivatives_;
};

struct FlowResult {
  PhasePoint endpoint;
  Eigen::MatrixXcd jacobian;  // d kappa_t / d(x, xi), complex 2n x 2n; empty when not requested
  double canonical_defect = 0.0;  // ||J^T Omega J - Omega||_2
  double max_imag_excursion = 0.0;
  bool certified = true;  // false when the trajectory left the generator's tube
  int steps = 0;
};

struct FlowOptions {
  bool with_jacobian = true;
  int max_steps = 1'000'000;
};

/// Integrates kappa_t(rho). Throws PreconditionError for |t| > t_max and
/// ConvergenceError when the adaptive step control breaks down.
FlowResult integrate_flow(const Deformation& d, double t, const PhasePoint& rho, const FlowOptions& options = {});

double canonical_defect(const Eigen::MatrixXcd& jacobian);

/// p_t = p o kappa_t. Holds the closed form when base and generator are quadratic.
class DeformedSymbol {
 public:
  DeformedSymbol(SymbolExpr base, Deformation deformation, double t);

  const SymbolExpr& base() const { return base_; }
  const Deformation& deformation() const { return deformation_; }
  double t() const { return t_; }
  int dim() const { return base_.dim(); }

  /// Closed-form p_t when available (quadratic fast path or t = 0 / G = 0).
  const std::optional<SymbolExpr>& closed_form() const { return closed_form_; }

  Complex operator()(const PhasePoint& rho) const;

 private:
  SymbolExpr base_;
  Deformation deformation_;
  double t_;
  std::optional<SymbolExpr> closed_form_;
};

/// base evaluated at the flow endpoint (always through the ODE path).
Complex deformed_eval(const DeformedSymbol& ps, const PhasePoint& rho);

/// Exact quadratic p_t for polynomial base and generator of degree <= 2.
SymbolExpr deformed_quadratic(const DeformedSymbol& ps);

/// Affine map z -> M z + v equal to kappa_t for a quadratic generator.
struct AffineMap {
  Eigen::MatrixXcd M;
  Eigen::VectorXcd v;
};
AffineMap quadratic_flow_map(const Deformation& d, double t);

}  // namespace bsweyl
