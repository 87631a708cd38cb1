#include "doctest.h"

#include "bsweyl/diagnostics.hpp"
#include "bsweyl/flow.hpp"
#include "bsweyl/quadratic_form.hpp"
#include "test_support.hpp"

using namespace bsweyl;
using bsweyl::test::rel_err;

namespace {

// Taylor series with scaling and squaring; independent of Eigen's Pade exponential.
Eigen::MatrixXcd taylor_expm(const Eigen::MatrixXcd& a) {
  int squarings = 0;
  double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  while (norm > 0.1) {
    norm /= 2.0;
    ++squarings;
  }
  const Eigen::MatrixXcd s = a / std::pow(2.0, squarings);
  Eigen::MatrixXcd term = Eigen::MatrixXcd::Identity(a.rows(), a.cols());
  Eigen::MatrixXcd sum = term;
  for (int k = 1; k <= 20; ++k) {
    term = (term * s / static_cast<double>(k)).eval();
    sum += term;
  }
  for (int k = 0; k < squarings; ++k) sum = (sum * sum).eval();
  return sum;
}

// p_t for cho(1, 0) deformed by G = x1 x2, expanded by hand:
// kappa_t(x, xi) = (x, xi1 - i t x2, xi2 - i t x1).
Complex hand_deformed_cho(double t, const PhasePoint& r) {
  const Complex x1 = r.x(0), x2 = r.x(1), k1 = r.xi(0), k2 = r.xi(1);
  const Complex i(0.0, 1.0);
  return 0.5 * x1 * x1 * (1.0 - i * t * t) + 0.5 * k1 * k1 - i * t * k1 * x2 - 0.5 * t * t * x2 * x2 +
         0.5 * i * x2 * x2 + 0.5 * i * k2 * k2 + t * k2 * x1;
}

}  // namespace

TEST_CASE("zero generator gives the identity map") {
  const Deformation d(SymbolExpr(2));
  std::mt19937_64 rng(1);
  const PhasePoint rho = test::random_complex_point(rng);
  const FlowResult r = integrate_flow(d, 0.3, rho);
  CHECK((r.endpoint.stacked() - rho.stacked()).norm() == 0.0);
  CHECK((r.jacobian - Eigen::MatrixXcd::Identity(4, 4)).norm() == 0.0);
  CHECK(r.canonical_defect == 0.0);
}

TEST_CASE("linear generator: xi(t) = xi - i t a") {
  const double a1 = 0.7, a2 = -1.3;
  const Deformation d(a1 * SymbolExpr::x(2, 0) + a2 * SymbolExpr::x(2, 1));
  std::mt19937_64 rng(2);
  for (int k = 0; k < 5; ++k) {
    const PhasePoint rho = test::random_real_point(rng);
    const double t = 0.4;
    const FlowResult r = integrate_flow(d, t, rho);
    CHECK((r.endpoint.x - rho.x).norm() <= 1e-10);
    CHECK(std::abs(r.endpoint.xi(0) - (rho.xi(0) - kI * t * a1)) <= 1e-10);
    CHECK(std::abs(r.endpoint.xi(1) - (rho.xi(1) - kI * t * a2)) <= 1e-10);
    CHECK(r.canonical_defect <= 1e-10);
  }
}

TEST_CASE("quadratic generator: Jacobian equals the matrix exponential") {
  const Deformation d(symbols::x1x2());
  const QuadraticForm g = QuadraticForm::from_symbol(symbols::x1x2());
  const Eigen::MatrixXcd A = kI * symplectic_matrix(2) * g.Q;
  std::mt19937_64 rng(3);
  for (double t : {0.1, 0.3, -0.5}) {
    const Eigen::MatrixXcd expected = taylor_expm(t * A);
    const FlowResult r = integrate_flow(d, t, test::random_complex_point(rng));
    CHECK((r.jacobian - expected).norm() / expected.norm() <= 1e-8);
    // the library fast path agrees with the same oracle
    const AffineMap m = quadratic_flow_map(d, t);
    CHECK((m.M - expected).norm() / expected.norm() <= 1e-12);
    CHECK(m.v.norm() <= 1e-14);
  }
}

TEST_CASE("property: group law, reversibility, canonicality for built-in generators") {
  std::mt19937_64 rng(4);
  for (const SymbolExpr& G : {symbols::x1x2(), symbols::sin_x1_cos_xi2()}) {
    const Deformation d(G);
    for (int k = 0; k < 10; ++k) {
      const PhasePoint rho = test::random_real_point(rng, 2, 1.0);
      std::uniform_real_distribution<double> ut(-0.25, 0.25);
      const double t1 = ut(rng), t2 = ut(rng);
      const FlowResult a = integrate_flow(d, t1 + t2, rho);
      const FlowResult b = integrate_flow(d, t2, integrate_flow(d, t1, rho).endpoint);
      CHECK((a.endpoint.stacked() - b.endpoint.stacked()).norm() <= 1e-8);

      const FlowResult back = integrate_flow(d, -t1, integrate_flow(d, t1, rho).endpoint);
      CHECK((back.endpoint.stacked() - rho.stacked()).norm() <= 1e-8);

      const double t = 0.5 * (k % 2 ? 1.0 : -1.0);
      CHECK(integrate_flow(d, t, rho).canonical_defect <= 1e-8);
    }
  }
}

TEST_CASE("deformed symbol at t = 0 equals the base") {
  std::mt19937_64 rng(5);
  const SymbolExpr p = symbols::cho(1.0, Complex(0.5, 0.5));
  const DeformedSymbol ps(p, Deformation(symbols::sin_x1_cos_xi2()), 0.0);
  for (int k = 0; k < 10; ++k) {
    const PhasePoint rho = test::random_complex_point(rng);
    CHECK(rel_err(deformed_eval(ps, rho), eval(p, rho)) <= 1e-12);
    CHECK(rel_err(ps(rho), eval(p, rho)) <= 1e-12);
  }
}

TEST_CASE("deformed_quadratic: trivial cases return the base") {
  const SymbolExpr p = symbols::cho(1.0, Complex(0.5, 0.5));
  const auto same = [&](const SymbolExpr& q) {
    std::mt19937_64 rng(6);
    for (int k = 0; k < 5; ++k) {
      const PhasePoint rho = test::random_complex_point(rng);
      if (rel_err(eval(q, rho), eval(p, rho)) > 1e-15) return false;
    }
    return true;
  };
  CHECK(same(deformed_quadratic(DeformedSymbol(p, Deformation(symbols::x1x2()), 0.0))));
  CHECK(same(deformed_quadratic(DeformedSymbol(p, Deformation(SymbolExpr(2)), 0.3))));
  CHECK_THROWS_AS(deformed_quadratic(DeformedSymbol(p, Deformation(symbols::sin_x1_cos_xi2()), 0.2)),
                  PreconditionError);
}

TEST_CASE("deformed_quadratic matches the ODE path and the hand expansion") {
  const Deformation d(symbols::x1x2());
  {
    const DeformedSymbol ps(symbols::cho(1.0, Complex(0.5, 0.5)), d, 0.2);
    const SymbolExpr q = deformed_quadratic(ps);
    std::mt19937_64 rng(7);
    for (int k = 0; k < 100; ++k) {
      const PhasePoint rho = test::random_real_point(rng);
      CHECK(rel_err(eval(q, rho), deformed_eval(ps, rho)) <= 1e-8);
    }
  }
  {
    const DeformedSymbol ps(symbols::cho(1.0, 0.0), d, 0.2);
    REQUIRE(ps.closed_form().has_value());
    std::mt19937_64 rng(8);
    for (int k = 0; k < 20; ++k) {
      const PhasePoint rho = test::random_complex_point(rng);
      CHECK(rel_err(eval(*ps.closed_form(), rho), hand_deformed_cho(0.2, rho)) <= 1e-12);
    }
  }
}

TEST_CASE("deformation breaks integrability: {Re p_t, Im p_t} != 0") {
  const DeformedSymbol ps(symbols::cho(1.0, 0.0), Deformation(symbols::x1x2()), 0.2);
  const SymbolExpr& pt = *ps.closed_form();
  const SymbolExpr rb = real_bracket(pt);
  CHECK_FALSE(rb.is_zero());
  std::mt19937_64 rng(9);
  double max_abs = 0.0;
  for (int k = 0; k < 5; ++k) {
    const PhasePoint rho = test::random_real_point(rng);
    const Complex v = eval(rb, rho);
    const Complex w = eval(poisson_bracket(real_part(pt), imag_part(pt)), rho);
    CHECK(rel_err(v, w) <= 1e-10);
    const Eigen::VectorXd z = rho.stacked().real();
    // finite differences through the ODE path
    const double fd = test::fd_real_bracket([&](const Eigen::VectorXd& y) { return deformed_eval(ps, test::real_point(y)); },
                                            z, 1e-4);
    CHECK(std::abs(v.real() - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
    max_abs = std::max(max_abs, std::abs(v));
  }
  CHECK(max_abs > 1e-3);
}

TEST_CASE("time-dependent family solves d/dt p_t = i{G_t, p_t}") {
  const Deformation d({symbols::x1x2(), symbols::sin_x1_cos_xi2()});
  const SymbolExpr p = symbols::cho(1.0, Complex(0.5, 0.5));
  std::mt19937_64 rng(10);
  const PhasePoint rho = test::random_real_point(rng, 2, 1.0);
  const double t = 0.2, dt = 1e-4;
  auto pt = [&](double s) { return eval(p, integrate_flow(d, s, rho, {false}).endpoint); };
  const Complex lhs = (pt(t + dt) - pt(t - dt)) / (2.0 * dt);

  const FlowResult r = integrate_flow(d, t, rho);
  const auto gp = gradient(p, r.endpoint);
  Eigen::VectorXcd grad_p(4);
  grad_p << gp.dx, gp.dxi;
  const Eigen::VectorXcd grad_pt = r.jacobian.transpose() * grad_p;  // chain rule
  const auto gG = gradient(d.generator_at(t), rho);
  const Complex bracket =
      (gG.dxi.transpose() * grad_pt.head(2))(0) - (gG.dx.transpose() * grad_pt.tail(2))(0);
  CHECK(rel_err(lhs, kI * bracket) <= 1e-6);
}

TEST_CASE("flow errors and tube excursions") {
  const Deformation d(symbols::x1x2(), 1e-10, 0.5);
  CHECK_THROWS_AS(integrate_flow(d, 0.6, PhasePoint(2)), PreconditionError);
  CHECK_THROWS_AS(integrate_flow(d, 0.1, PhasePoint(3)), DimensionError);

  reset_warning_counts();
  const Deformation narrow(symbols::sin_x1_cos_xi2(0.01));
  std::vector<double> x{0.3, 0.2}, xi{0.1, 0.5};
  const FlowResult r = integrate_flow(narrow, 0.3, PhasePoint::real(x, xi));
  CHECK_FALSE(r.certified);
  CHECK(r.max_imag_excursion > 0.01);
  CHECK(warning_count("tube-exit") == 1);
}
