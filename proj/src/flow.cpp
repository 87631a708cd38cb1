#include "bsweyl/flow.hpp"

#include <cmath>
#include <sstream>

#include <boost/numeric/odeint.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include "bsweyl/diagnostics.hpp"
#include "bsweyl/quadratic_form.hpp"

namespace bsweyl {

struct Deformation::Derivatives {
  // per t-coefficient k: first partials [j] and second partials [i][j]
  std::vector<std::vector<SymbolExpr>> gx, gxi;
  std::vector<std::vector<std::vector<SymbolExpr>>> gxx, gxxi, gxixi;  // gxxi[i][j] = d2G/dx_i dxi_j
};

namespace {

std::shared_ptr<const Deformation::Derivatives> build_derivatives(const std::vector<SymbolExpr>& coeffs) {
  auto d = std::make_shared<Deformation::Derivatives>();
  for (const auto& g : coeffs) {
    const int n = g.dim();
    std::vector<SymbolExpr> gx, gxi;
    std::vector<std::vector<SymbolExpr>> gxx(n), gxxi(n), gxixi(n);
    for (int j = 0; j < n; ++j) {
      gx.push_back(g.dx(j));
      gxi.push_back(g.dxi(j));
    }
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        gxx[i].push_back(gx[i].dx(j));
        gxxi[i].push_back(gx[i].dxi(j));
        gxixi[i].push_back(gxi[i].dxi(j));
      }
    }
    d->gx.push_back(std::move(gx));
    d->gxi.push_back(std::move(gxi));
    d->gxx.push_back(std::move(gxx));
    d->gxxi.push_back(std::move(gxxi));
    d->gxixi.push_back(std::move(gxixi));
  }
  return d;
}

using State = std::vector<double>;

// Real packing of (z, J): [Re z | Im z | Re J | Im J], J column-major.
struct FlowSystem {
  const Deformation& def;
  double t_final;
  bool with_jacobian;
  int n;

  void operator()(const State& y, State& dydt, double s) const {
    const int m = 2 * n;
    std::vector<Complex> z(m);
    for (int k = 0; k < m; ++k) z[k] = {y[k], y[m + k]};
    const std::span<const Complex> x{z.data(), static_cast<std::size_t>(n)};
    const std::span<const Complex> xi{z.data() + n, static_cast<std::size_t>(n)};

    const double tau = t_final - s;
    const auto& d = def.derivatives();
    const int kdeg = def.t_degree();
    std::vector<Complex> f(m, 0.0);
    Eigen::MatrixXcd A;
    if (with_jacobian) A = Eigen::MatrixXcd::Zero(m, m);
    double w = 1.0;
    for (int k = 0; k <= kdeg; ++k, w *= tau) {
      if (k > 0 && w == 0.0) break;
      for (int j = 0; j < n; ++j) {
        f[j] += kI * w * d.gxi[k][j].evaluate(x, xi);
        f[n + j] -= kI * w * d.gx[k][j].evaluate(x, xi);
      }
      if (!with_jacobian) continue;
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          const Complex gxx = d.gxx[k][i][j].evaluate(x, xi);
          const Complex gxxi = d.gxxi[k][i][j].evaluate(x, xi);  // d2G/dx_i dxi_j
          const Complex gxixi = d.gxixi[k][i][j].evaluate(x, xi);
          // x_i' = i G_{xi_i}:  d/dx_j -> G_{xi_i x_j} = gxxi[j][i]
          A(i, j) += kI * w * d.gxxi[k][j][i].evaluate(x, xi);
          A(i, n + j) += kI * w * gxixi;
          // xi_i' = -i G_{x_i}
          A(n + i, j) -= kI * w * gxx;
          A(n + i, n + j) -= kI * w * gxxi;
        }
      }
    }
    for (int k = 0; k < m; ++k) {
      dydt[k] = f[k].real();
      dydt[m + k] = f[k].imag();
    }
    if (!with_jacobian) return;
    const int mm = m * m;
    Eigen::MatrixXcd J(m, m);
    for (int k = 0; k < mm; ++k) J.data()[k] = {y[2 * m + k], y[2 * m + mm + k]};
    const Eigen::MatrixXcd dJ = A * J;
    for (int k = 0; k < mm; ++k) {
      dydt[2 * m + k] = dJ.data()[k].real();
      dydt[2 * m + mm + k] = dJ.data()[k].imag();
    }
  }
};

}  // namespace

// ---------------------------------------------------------------------------
// Deformation

Deformation::Deformation(SymbolExpr G, double tolerance, double t_max, double step_hint)
    : Deformation(std::vector<SymbolExpr>{std::move(G)}, tolerance, t_max, step_hint) {}

Deformation::Deformation(std::vector<SymbolExpr> t_coefficients, double tolerance, double t_max, double step_hint)
    : coefficients_(std::move(t_coefficients)), tolerance_(tolerance), t_max_(t_max), step_hint_(step_hint) {
  if (coefficients_.empty()) throw PreconditionError("Deformation: need at least one generator coefficient");
  for (const auto& g : coefficients_) {
    if (g.dim() != coefficients_.front().dim()) throw DimensionError("Deformation: coefficient dimension mismatch");
  }
  if (!(tolerance_ > 0.0) || !(t_max_ > 0.0) || !(step_hint_ > 0.0)) {
    throw PreconditionError("Deformation: tolerance, t_max and step hint must be positive");
  }
  derivatives_ = build_derivatives(coefficients_);
}

SymbolExpr Deformation::generator_at(double t) const {
  SymbolExpr g(dim(), tube_radius());
  double w = 1.0;
  for (const auto& c : coefficients_) {
    g += c * w;
    w *= t;
  }
  return g;
}

double Deformation::tube_radius() const {
  double r = coefficients_.front().tube_radius();
  for (const auto& c : coefficients_) r = std::min(r, c.tube_radius());
  return r;
}

bool Deformation::is_zero() const {
  return std::all_of(coefficients_.begin(), coefficients_.end(), [](const SymbolExpr& g) { return g.is_zero(); });
}

bool Deformation::is_quadratic() const {
  return std::all_of(coefficients_.begin(), coefficients_.end(),
                     [](const SymbolExpr& g) { return g.is_polynomial() && g.degree() <= 2; });
}

// ---------------------------------------------------------------------------
// Flow integration

double canonical_defect(const Eigen::MatrixXcd& jacobian) {
  const int n = static_cast<int>(jacobian.rows()) / 2;
  const Eigen::MatrixXcd omega = symplectic_matrix(n);
  const Eigen::MatrixXcd r = jacobian.transpose() * omega * jacobian - omega;
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(r);
  return svd.singularValues()(0);
}

FlowResult integrate_flow(const Deformation& d, double t, const PhasePoint& rho, const FlowOptions& options) {
  namespace odeint = boost::numeric::odeint;
  if (rho.dim() != d.dim()) throw DimensionError("integrate_flow: point and generator dimensions differ");
  if (std::abs(t) > d.t_max()) {
    std::ostringstream os;
    os << "integrate_flow: |t| = " << std::abs(t) << " exceeds t_max = " << d.t_max();
    throw PreconditionError(os.str());
  }
  if (!rho.is_finite()) throw PreconditionError("integrate_flow: non-finite start point");

  const int n = d.dim();
  const int m = 2 * n;
  const bool jac = options.with_jacobian;
  State y(jac ? 2 * m + 2 * m * m : 2 * m, 0.0);
  const Eigen::VectorXcd z0 = rho.stacked();
  for (int k = 0; k < m; ++k) {
    y[k] = z0(k).real();
    y[m + k] = z0(k).imag();
  }
  if (jac) {
    for (int k = 0; k < m; ++k) y[2 * m + k * m + k] = 1.0;
  }

  FlowResult result;
  result.max_imag_excursion = rho.max_abs_imag();
  if (t != 0.0 && !d.is_zero()) {
    FlowSystem system{d, t, jac, n};
    auto stepper = odeint::make_controlled(d.tolerance(), d.tolerance(), odeint::runge_kutta_dopri5<State>());
    int steps = 0;
    auto observer = [&](const State& s, double) {
      if (++steps > options.max_steps) throw ConvergenceError("integrate_flow: step budget exhausted");
      for (int k = 0; k < m; ++k) {
        const double im = std::abs(s[m + k]);
        if (!std::isfinite(im) || !std::isfinite(s[k])) throw ConvergenceError("integrate_flow: trajectory diverged");
        result.max_imag_excursion = std::max(result.max_imag_excursion, im);
      }
    };
    const double dt = std::copysign(std::min(d.step_hint(), std::abs(t)), t);
    try {
      odeint::integrate_adaptive(stepper, system, y, 0.0, t, dt, observer);
    } catch (const odeint::step_adjustment_error& e) {
      throw ConvergenceError(std::string("integrate_flow: step size underflow: ") + e.what());
    } catch (const odeint::no_progress_error& e) {
      throw ConvergenceError(std::string("integrate_flow: no progress: ") + e.what());
    }
    result.steps = steps;
  }

  Eigen::VectorXcd z(m);
  for (int k = 0; k < m; ++k) z(k) = {y[k], y[m + k]};
  result.endpoint = PhasePoint::from_stacked(z);
  if (jac) {
    result.jacobian.resize(m, m);
    const int mm = m * m;
    for (int k = 0; k < mm; ++k) result.jacobian.data()[k] = {y[2 * m + k], y[2 * m + mm + k]};
    result.canonical_defect = canonical_defect(result.jacobian);
  }
  if (result.max_imag_excursion > d.tube_radius()) {
    result.certified = false;
    std::ostringstream os;
    os << "flow reached |Im| = " << result.max_imag_excursion << " beyond generator tube " << d.tube_radius();
    warn("tube-exit", os.str());
  }
  return result;
}

// ---------------------------------------------------------------------------
// Deformed symbols

AffineMap quadratic_flow_map(const Deformation& d, double t) {
  if (!d.is_quadratic()) throw PreconditionError("quadratic_flow_map: generator must be polynomial of degree <= 2");
  const int n = d.dim();
  const int m = 2 * n;
  if (d.t_degree() == 0) {
    // z' = i J (Q_G z + b_G): exponentiate the augmented affine generator.
    const QuadraticForm g = QuadraticForm::from_symbol(d.coefficients().front());
    const Eigen::MatrixXcd S = symplectic_matrix(n);
    Eigen::MatrixXcd aug = Eigen::MatrixXcd::Zero(m + 1, m + 1);
    aug.topLeftCorner(m, m) = kI * S * g.Q;
    aug.topRightCorner(m, 1) = kI * S * g.b;
    const Eigen::MatrixXcd e = (t * aug).exp();
    return {e.topLeftCorner(m, m), e.topRightCorner(m, 1)};
  }
  // Time-dependent quadratic family: the flow is still affine, read it off at the origin.
  const FlowResult r = integrate_flow(d, t, PhasePoint(n));
  return {r.jacobian, r.endpoint.stacked()};
}

SymbolExpr deformed_quadratic(const DeformedSymbol& ps) {
  const SymbolExpr& base = ps.base();
  if (!base.is_polynomial() || base.degree() > 2) {
    throw PreconditionError("deformed_quadratic: base must be polynomial of degree <= 2");
  }
  if (!ps.deformation().is_quadratic()) {
    throw PreconditionError("deformed_quadratic: generator must be polynomial of degree <= 2");
  }
  if (ps.t() == 0.0 || ps.deformation().is_zero()) return base;
  const AffineMap map = quadratic_flow_map(ps.deformation(), ps.t());
  return QuadraticForm::from_symbol(base).compose_affine(map.M, map.v).to_symbol(base.tube_radius());
}

DeformedSymbol::DeformedSymbol(SymbolExpr base, Deformation deformation, double t)
    : base_(std::move(base)), deformation_(std::move(deformation)), t_(t) {
  if (base_.dim() != deformation_.dim()) throw DimensionError("DeformedSymbol: base and generator dimensions differ");
  if (std::abs(t_) > deformation_.t_max()) throw PreconditionError("DeformedSymbol: |t| exceeds t_max");
  if (t_ == 0.0 || deformation_.is_zero()) {
    closed_form_ = base_;
  } else if (base_.is_polynomial() && base_.degree() <= 2 && deformation_.is_quadratic()) {
    closed_form_ = deformed_quadratic(*this);
  }
}

Complex DeformedSymbol::operator()(const PhasePoint& rho) const {
  if (closed_form_) return eval(*closed_form_, rho);
  return deformed_eval(*this, rho);
}

Complex deformed_eval(const DeformedSymbol& ps, const PhasePoint& rho) {
  FlowOptions opt;
  opt.with_jacobian = false;
  const FlowResult r = integrate_flow(ps.deformation(), ps.t(), rho, opt);
  return eval(ps.base(), r.endpoint);
}

}  // namespace bsweyl
