#include "doctest.h"

#include "bsweyl/density.hpp"
#include "bsweyl/diagnostics.hpp"
#include "test_support.hpp"

using namespace bsweyl;

namespace {

// Area of the disc {x^2 + xi^2 <= 2r}, Simpson in the angle of x = R sin(theta);
// its r-derivative is the 1D pushforward density of u -> |u|^2/2.
double disc_area(double r) {
  const double R2 = 2.0 * r;
  const int m = 2000;
  const double h = kPi / m;
  double s = 0.0;
  for (int k = 0; k <= m; ++k) {
    const double c = std::cos(-0.5 * kPi + k * h);
    s += 2.0 * R2 * c * c * (k == 0 || k == m ? 1.0 : (k % 2 ? 4.0 : 2.0));
  }
  return s * h / 3.0;
}

double radial_oracle_density() {
  const double r = 0.7, dr = 1e-3;
  const double one_d = (disc_area(r + dr) - disc_area(r - dr)) / (2.0 * dr);
  return one_d * one_d;
}

SymbolExpr coupled(double c) {
  return SymbolExpr::xi(2, 0) + kI * SymbolExpr::xi(2, 1) + c * SymbolExpr::xi(2, 0) * SymbolExpr::xi(2, 1);
}

// Nested bisection: Im p = eta2 is monotone, and Re p is monotone in eta1 for fixed eta2.
Eigen::Vector2d bisection_inverse(const SymbolExpr& p, Complex z) {
  auto re_solve = [&](double eta2) {
    double lo = -5.0, hi = 5.0;
    for (int k = 0; k < 200; ++k) {
      const double mid = 0.5 * (lo + hi);
      const std::array<double, 4> q{0.0, 0.0, mid, eta2};
      (p.evaluate_real(q).real() < z.real() ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };
  double lo = -5.0, hi = 5.0;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    const std::array<double, 4> q{0.0, 0.0, re_solve(mid), mid};
    (p.evaluate_real(q).imag() < z.imag() ? lo : hi) = mid;
  }
  const double eta2 = 0.5 * (lo + hi);
  return {re_solve(eta2), eta2};
}

SamplingOptions qmc(std::int64_t samples, std::uint64_t seed = 1) {
  SamplingOptions o;
  o.samples = samples;
  o.seed = seed;
  o.quasi_random = true;
  return o;
}

SamplingOptions mc(std::int64_t samples, std::uint64_t seed = 1) {
  SamplingOptions o;
  o.samples = samples;
  o.seed = seed;
  return o;
}

}  // namespace

TEST_CASE("window geometry") {
  const ComplexWindow w = ComplexWindow::from_bounds(0.0, 1.0, -1.0, 1.0, 4, 8);
  CHECK(w.cell_area() == doctest::Approx(2.0 / 32));
  CHECK(w.cell_of(Complex(0.1, -0.9)) == 0);
  CHECK(w.cell_of(Complex(0.99, 0.99)) == 31);
  CHECK(w.cell_of(Complex(1.0, 0.0)) == -1);
  CHECK(std::abs(w.cell_center(0, 0) - Complex(0.125, -0.875)) < 1e-15);
  CHECK(w.distance_to(Complex(4.0, 5.0)) == doctest::Approx(5.0));
  CHECK_THROWS_AS(ComplexWindow(0.0, 0.0, 1.0), PreconditionError);
  CHECK_THROWS_AS(ComplexWindow(0.0, 1.0, 1.0, 1, 4), PreconditionError);
}

TEST_CASE("oscillator Weyl density equals the radial-calculus constant") {
  const double oracle = radial_oracle_density();
  CHECK(std::abs(oracle - kTwoPi * kTwoPi) < 1e-6);

  const SymbolExpr p = symbols::cho(1.0, Complex(0.5, 0.5));
  const ComplexWindow win(Complex(0.5, 0.5), 0.4, 0.4, 8, 8);
  const DensityGrid g = weyl_density(p, win, 4.0, qmc(2'000'000));
  CHECK(g.method == DensityMethod::kTensorQuadrature);
  CHECK(g.box_margin_ok);
  CHECK_FALSE(g.empty);
  CHECK((g.values.array() >= 0.0).all());
  for (int j = 0; j < 8; ++j)
    for (int i = 0; i < 8; ++i) CHECK(std::abs(g.values(i, j) - oracle) <= 3.0 * g.stderrs(i, j));
  // total mass against the window area times the constant
  CHECK(std::abs(g.total_mass() - oracle * win.area()) <= 3.0 * g.stderrs.norm() * win.cell_area());
}

TEST_CASE("torus models: constant density and Jacobian formula") {
  const ComplexWindow win(Complex(0.0, 0.0), 0.4, 0.4, 4, 4);
  {
    const DensityGrid g = weyl_density_torus(symbols::torus_linear(), win, 1.0, qmc(400'000));
    for (int k = 0; k < 16; ++k) CHECK(std::abs(g.values(k) - kTwoPi * kTwoPi) <= 3.0 * g.stderrs(k));
    const DensityGrid om = omega_density(action_map_integrable(symbols::torus_linear()), win);
    CHECK(om.method == DensityMethod::kJacobianFormula);
    CHECK((om.values.array() - kTwoPi * kTwoPi).abs().maxCoeff() <= 1e-12);
    CHECK(om.stderrs.norm() == 0.0);
  }
  {
    // Re p = eta1 + 0.3 eta1 eta2, Im p = eta2: omega(z) = (2 pi)^2 / (1 + 0.3 Im z)
    const SymbolExpr p = coupled(0.3);
    const DensityGrid g = weyl_density_torus(p, win, 1.0, qmc(1'000'000));
    const DensityGrid om = omega_density(action_map_integrable(p), win);
    for (int j = 0; j < 4; ++j)
      for (int i = 0; i < 4; ++i) {
        const double oracle = kTwoPi * kTwoPi / (1.0 + 0.3 * win.cell_center(i, j).imag());
        CHECK(std::abs(om.values(i, j) - oracle) <= 1e-10 * oracle);
        CHECK(std::abs(g.values(i, j) - om.values(i, j)) <= 3.0 * g.stderrs(i, j));
      }
  }
  {
    // (eta1 + 0.1 eta2^2) + i eta2 has unit Jacobian
    const SymbolExpr p = SymbolExpr::xi(2, 0) + 0.1 * SymbolExpr::xi(2, 1) * SymbolExpr::xi(2, 1) +
                         kI * SymbolExpr::xi(2, 1);
    const DensityGrid g = weyl_density_torus(p, win, 1.0, qmc(400'000));
    const DensityGrid om = omega_density(action_map_integrable(p), win);
    for (int k = 0; k < 16; ++k) {
      CHECK(std::abs(g.values(k) / (kTwoPi * kTwoPi) - 1.0) <= 0.02);
      CHECK(std::abs(om.values(k) / (kTwoPi * kTwoPi) - 1.0) <= 1e-12);
    }
  }
  CHECK_THROWS_AS(weyl_density_torus(symbols::cho(1.0, 0.0), win, 1.0, qmc(10)), PreconditionError);
}

TEST_CASE("action map inversion") {
  {
    const ActionMap am = action_map_integrable(symbols::torus_linear());
    const ActionValue v = am(Complex(0.3, -0.2));
    CHECK((v.I - Eigen::Vector2d(kTwoPi * 0.3, -kTwoPi * 0.2)).norm() <= 1e-12);
    CHECK((v.dI - kTwoPi * Eigen::Matrix2d::Identity()).norm() <= 1e-12);
  }
  {
    const SymbolExpr p = coupled(0.3);
    const Complex z(0.1, 0.05);
    const Eigen::Vector2d oracle = bisection_inverse(p, z);
    const Eigen::Vector2d I0(0.25, -1.0);
    const ActionValue v = action_map_integrable(p, I0)(z);
    CHECK((v.I - (kTwoPi * oracle + I0)).norm() <= 1e-8);
    // derivative against finite differences of the map itself
    const ActionMap am = action_map_integrable(p);
    const double h = 1e-6;
    const Eigen::Vector2d dre = (am(z + h).I - am(z - h).I) / (2 * h);
    const Eigen::Vector2d dim = (am(z + kI * h).I - am(z - kI * h).I) / (2 * h);
    CHECK((v.dI.col(0) - dre).norm() <= 1e-6);
    CHECK((v.dI.col(1) - dim).norm() <= 1e-6);
  }
  {
    // eta1^2 + i eta2 has a fold at eta1 = 0 and no real preimage of -1
    const SymbolExpr p = SymbolExpr::xi(2, 0) * SymbolExpr::xi(2, 0) + kI * SymbolExpr::xi(2, 1);
    CHECK_THROWS_AS(invert_torus_symbol(p, Complex(-1.0, 0.0)), ConvergenceError);
    CHECK_THROWS_AS(omega_density(action_map_integrable(p), ComplexWindow(Complex(-1.0, 0.0), 0.5, 0.5, 4, 4)),
                    ConvergenceError);
  }
  CHECK_THROWS_AS(action_map_integrable(SymbolExpr::xi(3, 0)), DimensionError);
  CHECK_THROWS_AS(action_map_integrable(symbols::cho(1.0, 0.0)), PreconditionError);
}

TEST_CASE("action-map audit: positive omega and constant Jacobian sign") {
  const ComplexWindow win(Complex(0.0, 0.0), 0.4, 0.4, 8, 8);
  AuditReport r;
  audit_action_map(r, action_map_integrable(coupled(0.3)), win);
  CHECK(r.action_diffeomorphism == Check::kPass);
  REQUIRE(r.action_jacobian_condition.has_value());
  CHECK(*r.action_jacobian_condition < 2.0);
  CHECK((omega_density(action_map_integrable(coupled(0.3)), win).values.array() > 0.0).all());

  AuditReport bad;
  const SymbolExpr fold = SymbolExpr::xi(2, 0) * SymbolExpr::xi(2, 0) + kI * SymbolExpr::xi(2, 1);
  audit_action_map(bad, action_map_integrable(fold), win);
  CHECK(bad.action_diffeomorphism == Check::kFail);
}

TEST_CASE("preimage volumes: oracle, empty window, additivity") {
  const SymbolExpr p = symbols::cho(1.0, Complex(0.5, 0.5));
  const double a = 0.3, b = 0.2;
  const ComplexWindow W = ComplexWindow::from_bounds(-0.5, -0.5 + a, -0.5, -0.5 + b);
  const VolumeEstimate v = preimage_volume(p, W, 4.0, mc(2'000'000, 3));
  CHECK(std::abs(v.value - kTwoPi * kTwoPi * a * b) <= 3.0 * v.stderr_);

  const VolumeEstimate none = preimage_volume(p, ComplexWindow(Complex(-3.0, -3.0), 0.5, 0.5), 4.0, mc(100'000));
  CHECK(none.value == 0.0);

  const ComplexWindow W1 = ComplexWindow::from_bounds(0.0, 0.3, 0.0, 0.3);
  const ComplexWindow W2 = ComplexWindow::from_bounds(0.3, 0.7, 0.0, 0.3);
  const ComplexWindow U = ComplexWindow::from_bounds(0.0, 0.7, 0.0, 0.3);
  const VolumeEstimate v1 = preimage_volume(p, W1, 4.0, mc(1'000'000, 4));
  const VolumeEstimate v2 = preimage_volume(p, W2, 4.0, mc(1'000'000, 5));
  const VolumeEstimate vu = preimage_volume(p, U, 4.0, mc(1'000'000, 6));
  const double combined = std::sqrt(v1.stderr_ * v1.stderr_ + v2.stderr_ * v2.stderr_ + vu.stderr_ * vu.stderr_);
  CHECK(std::abs(vu.value - v1.value - v2.value) <= 3.0 * combined);
}

TEST_CASE("property: pushforward consistency for a smooth test function") {
  const SymbolExpr p = symbols::cho(1.0, Complex(0.5, 0.5));
  const ComplexWindow win = ComplexWindow::from_bounds(-0.5, 1.5, -0.5, 1.5, 64, 64);
  const double R = 3.0;
  auto f = [](Complex z) { return std::exp(-std::norm(z - Complex(0.5, 0.4)) / 0.25); };

  const DensityGrid g = weyl_density(p, win, R, mc(1'000'000, 11));
  double lhs = 0.0, lhs_var = 0.0;
  for (int j = 0; j < 64; ++j)
    for (int i = 0; i < 64; ++i) {
      const double fa = f(win.cell_center(i, j)) * win.cell_area();
      lhs += fa * g.values(i, j);
      lhs_var += fa * fa * g.stderrs(i, j) * g.stderrs(i, j);
    }

  // independent stream: mean of f(p) 1_W over the box
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> u(-R, R);
  const int m = 1'000'000;
  double s = 0.0, s2 = 0.0;
  std::array<double, 4> z{};
  for (int k = 0; k < m; ++k) {
    for (auto& c : z) c = u(rng);
    const Complex w = p.evaluate_real(z);
    const double v = win.contains(w) ? f(w) : 0.0;
    s += v;
    s2 += v * v;
  }
  const double vol = std::pow(2.0 * R, 4);
  const double mean = s / m;
  const double rhs = mean * vol;
  const double rhs_se = std::sqrt((s2 / m - mean * mean) / m) * vol;
  CHECK(std::abs(lhs - rhs) <= 3.0 * std::sqrt(lhs_var + rhs_se * rhs_se));
}

TEST_CASE("dimension generality") {
  {
    // n = 1: xi + i x pushes dx dxi forward to Lebesgue measure
    const SymbolExpr p = SymbolExpr::xi(1, 0) + kI * SymbolExpr::x(1, 0);
    const DensityGrid g = weyl_density(p, ComplexWindow(Complex(0.0, 0.0), 0.5, 0.5, 4, 4), 1.0, qmc(200'000));
    for (int k = 0; k < 16; ++k) CHECK(std::abs(g.values(k) - 1.0) <= 3.0 * g.stderrs(k));
  }
  {
    // n = 3: xi1 + i xi2 with four free coordinates of width 2
    const SymbolExpr p = SymbolExpr::xi(3, 0) + kI * SymbolExpr::xi(3, 1);
    const DensityGrid g = weyl_density(p, ComplexWindow(Complex(0.0, 0.0), 0.5, 0.5, 4, 4), 1.0, qmc(400'000));
    for (int k = 0; k < 16; ++k) CHECK(std::abs(g.values(k) - 16.0) <= 3.0 * g.stderrs(k));
    // not elliptic in the free directions, and the margin check says so
    CHECK_FALSE(g.box_margin_ok);
  }
}

TEST_CASE("flags: empty grid and box margin") {
  reset_warning_counts();
  const SymbolExpr p = symbols::cho(1.0, Complex(0.5, 0.5));
  const DensityGrid far = weyl_density(p, ComplexWindow(Complex(100.0, 100.0), 1.0, 1.0), 4.0, mc(10'000));
  CHECK(far.empty);
  CHECK(warning_count("empty-grid") == 1);

  const DensityGrid tight = weyl_density(p, ComplexWindow(Complex(0.5, 0.5), 0.4, 0.4), 1.0, mc(10'000));
  CHECK_FALSE(tight.box_margin_ok);
  CHECK(warning_count("box-margin") == 1);
}

TEST_CASE("determinism across seeds, threads and shards") {
  const SymbolExpr p = symbols::cho(1.0, Complex(0.5, 0.5));
  const ComplexWindow win(Complex(0.5, 0.5), 0.4, 0.4, 8, 8);
  SamplingOptions a = mc(200'000, 7);
  a.threads = 1;
  SamplingOptions b = a;
  b.threads = 3;
  const DensityGrid ga = weyl_density(p, win, 4.0, a);
  const DensityGrid gb = weyl_density(p, win, 4.0, b);
  CHECK(ga.values == gb.values);
  const DensityGrid gc = weyl_density(p, win, 4.0, mc(200'000, 8));
  CHECK(ga.values != gc.values);
}

TEST_CASE("deformation by x1 x2 changes the Weyl density") {
  const SymbolExpr p = symbols::cho(1.0, 0.0);
  const Deformation d(symbols::x1x2());
  const ComplexWindow win = ComplexWindow::from_bounds(-0.2, 1.0, -0.2, 1.0, 12, 12);
  const DensityGrid g0 = weyl_density(DeformedSymbol(p, d, 0.0), win, 2.0, mc(2'000'000, 21));
  const DensityGrid gt = weyl_density(DeformedSymbol(p, d, 0.2), win, 2.0, mc(2'000'000, 22));
  CHECK(g0.box_margin_ok);
  CHECK(gt.box_margin_ok);
  double best = 0.0;
  for (Eigen::Index k = 0; k < g0.values.size(); ++k) {
    const double se = std::hypot(g0.stderrs(k), gt.stderrs(k));
    if (se > 0.0) best = std::max(best, std::abs(g0.values(k) - gt.values(k)) / se);
  }
  MESSAGE("largest z-score " << best);
  CHECK(best > 5.0);
}
