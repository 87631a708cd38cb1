#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "bsweyl/audit.hpp"
#include "bsweyl/flow.hpp"
#include "bsweyl/symbol.hpp"

namespace bsweyl {

/// Rectangle in the spectral plane with a cell grid; cell (i, j) has real index i, imaginary index j.
struct ComplexWindow {
  Complex center{};
  double half_re = 1.0;
  double half_im = 1.0;
  int n_re = 2;
  int n_im = 2;

  ComplexWindow() = default;
  ComplexWindow(Complex center, double half_re, double half_im, int n_re = 2, int n_im = 2);
  /// Window spanning [re_lo, re_hi] x [im_lo, im_hi].
  static ComplexWindow from_bounds(double re_lo, double re_hi, double im_lo, double im_hi, int n_re = 2,
                                   int n_im = 2);

  double re_lo() const { return center.real() - half_re; }
  double re_hi() const { return center.real() + half_re; }
  double im_lo() const { return center.imag() - half_im; }
  double im_hi() const { return center.imag() + half_im; }
  double area() const { return 4.0 * half_re * half_im; }
  double cell_area() const { return area() / (static_cast<double>(n_re) * n_im); }
  double diameter() const { return 2.0 * std::hypot(half_re, half_im); }
  Complex cell_center(int i, int j) const;
  /// Half-open containment [lo, hi).
  bool contains(Complex z) const;
  /// Cell index for z, or -1 when z is outside.
  int cell_of(Complex z) const;
  double distance_to(Complex z) const;
};

enum class DensityMethod { kMonteCarlo, kTensorQuadrature, kJacobianFormula };
std::string to_string(DensityMethod m);

struct DensityGrid {
  ComplexWindow window;
  Eigen::MatrixXd values;   // (n_re, n_im), density per unit d Re z d Im z
  Eigen::MatrixXd stderrs;  // same shape
  DensityMethod method = DensityMethod::kMonteCarlo;
  std::int64_t samples = 0;
  std::int64_t hits = 0;
  std::uint64_t seed = 0;
  double box_radius = 0.0;
  bool empty = false;  // no sample landed in the window
  bool box_margin_ok = true;
  int invalid_cells = 0;  // cells flagged NaN (singular Jacobian)

  double total_mass() const;
};

struct SamplingOptions {
  std::int64_t samples = 10'000'000;
  std::uint64_t seed = 1;
  bool quasi_random = false;  // Halton with a seeded shift; tagged tensor-quadrature
  int shards = 64;
  int threads = 0;  // 0: hardware concurrency
};

/// Real-point evaluator: receives 2n reals (x then xi).
using RealEvaluator = std::function<Complex(std::span<const double>)>;

RealEvaluator real_evaluator(const SymbolExpr& p);
/// Closed form when available, ODE path otherwise.
RealEvaluator real_evaluator(const DeformedSymbol& p);

/// Generic pushforward histogram of `prefactor * Lebesgue` on the box
/// [-half_widths, half_widths] under the evaluator.
DensityGrid pushforward_density(const RealEvaluator& p, const std::vector<double>& half_widths, double prefactor,
                                const ComplexWindow& win, const SamplingOptions& opt);

/// Checks that p on the boundary of the box stays at least `margin_fraction * diameter` away from the window.
bool box_boundary_clear(const RealEvaluator& p, const std::vector<double>& half_widths, const ComplexWindow& win,
                        double margin_fraction = 0.2, int per_axis = 9);

/// Weyl density: pushforward of dx dxi on {|(x, xi)|_inf <= box_radius} under p.
DensityGrid weyl_density(const SymbolExpr& p, const ComplexWindow& win, double box_radius,
                         const SamplingOptions& opt = {});
DensityGrid weyl_density(const DeformedSymbol& p, const ComplexWindow& win, double box_radius,
                         const SamplingOptions& opt = {});

/// Weyl density of a torus model p(eta): pushforward of (2 pi)^2 d eta on |eta|_inf <= eta_box.
DensityGrid weyl_density_torus(const SymbolExpr& ptilde, const ComplexWindow& win, double eta_box,
                               const SamplingOptions& opt = {});

struct VolumeEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
};

/// vol(p^{-1}(W)) within the box.
VolumeEstimate preimage_volume(const RealEvaluator& p, int n, const ComplexWindow& W, double box_radius,
                               const SamplingOptions& opt = {});
VolumeEstimate preimage_volume(const SymbolExpr& p, const ComplexWindow& W, double box_radius,
                               const SamplingOptions& opt = {});

// ---------------------------------------------------------------------------
// Action map and omega

struct ActionValue {
  Eigen::Vector2d I;   // (I1, I2)
  Eigen::Matrix2d dI;  // d(I1, I2) / d(Re z, Im z)
};

class ActionMap {
 public:
  using Evaluator = std::function<ActionValue(Complex)>;
  ActionMap(Evaluator f, Eigen::Vector2d reference);

  ActionValue operator()(Complex z) const { return f_(z); }
  const Eigen::Vector2d& reference() const { return reference_; }

 private:
  Evaluator f_;
  Eigen::Vector2d reference_;
};

struct NewtonOptions {
  double tolerance = 1e-12;
  int max_iterations = 50;
};

/// Solves ptilde(eta) = z for real eta; throws ConvergenceError on divergence.
Eigen::Vector2d invert_torus_symbol(const SymbolExpr& ptilde, Complex z, const NewtonOptions& opt = {});

/// I(z) = 2 pi eta(z) + I0 for an eta-only symbol (n = 2).
ActionMap action_map_integrable(const SymbolExpr& ptilde, Eigen::Vector2d I0 = Eigen::Vector2d::Zero(),
                                const NewtonOptions& opt = {});

/// omega(z) = |det dI(z)| at cell centers; throws ConvergenceError if more than 1% of cells are singular.
DensityGrid omega_density(const ActionMap& am, const ComplexWindow& win);

/// Midpoint-rule integral of omega over W.
double integrate_omega(const ActionMap& am, const ComplexWindow& W);

/// Fills the action-map entries of an audit report: worst condition number of dI over the window.
void audit_action_map(AuditReport& report, const ActionMap& am, const ComplexWindow& win,
                      double max_condition = 1e8);

}  // namespace bsweyl
