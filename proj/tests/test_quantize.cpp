#include "doctest.h"

#include "bsweyl/quantize.hpp"
#include "bsweyl/quadratic_form.hpp"
#include "test_support.hpp"

using namespace bsweyl;

namespace {

std::vector<Complex> sorted(std::vector<Complex> z) {
  std::sort(z.begin(), z.end(), [](Complex a, Complex b) {
    return a.real() < b.real() || (a.real() == b.real() && a.imag() < b.imag());
  });
  return z;
}

// h (k1 + 1/2) + i h (k2 + 1/2) written out by hand.
std::vector<Complex> cho_lattice(double h, int N) {
  std::vector<Complex> z;
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b) z.emplace_back(h * (a + 0.5), h * (b + 0.5));
  return sorted(z);
}

double max_gap(const std::vector<Complex>& a, const std::vector<Complex>& b) {
  REQUIRE(a.size() == b.size());
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

}  // namespace

TEST_CASE("basis validation") {
  CHECK_THROWS_AS(BasisSpec::hermite(0, 0.1), PreconditionError);
  CHECK_THROWS_AS(BasisSpec::hermite(10, 0.0), PreconditionError);
  CHECK_THROWS_AS(BasisSpec::hermite(10, 1.5), PreconditionError);
  CHECK(BasisSpec::hermite(7, 0.1, 2).dimension() == 49);
  CHECK(BasisSpec::torus(3, 0.1, 2).dimension() == 49);
  CHECK_THROWS_AS(quantize_quadratic(symbols::cho(1.0, 0.0), BasisSpec::hermite(5, 0.1, 1)), DimensionError);
  CHECK_THROWS_AS(quantize_quadratic(symbols::x1x2() * symbols::x1x2(), BasisSpec::hermite(5, 0.1)),
                  PreconditionError);
  CHECK_THROWS_AS(quantize_quadratic(symbols::cho(1.0, 0.0), BasisSpec::torus(3, 0.1)), PreconditionError);
}

TEST_CASE("harmonic oscillator is diagonal with entries h(k + 1/2)") {
  const SymbolExpr x = SymbolExpr::x(1, 0), k = SymbolExpr::xi(1, 0);
  const double h = 0.1;
  const OperatorMatrix P = quantize_quadratic(0.5 * (x * x + k * k), BasisSpec::hermite(30, h, 1));
  for (int r = 0; r < 30; ++r)
    for (int c = 0; c < 30; ++c) CHECK(std::abs(P.A(r, c) - (r == c ? Complex(h * (r + 0.5)) : 0.0)) <= 1e-14);
}

TEST_CASE("x xi is quantized in symmetric order") {
  const SymbolExpr x = SymbolExpr::x(1, 0), k = SymbolExpr::xi(1, 0);
  const double h = 0.2;
  const int N = 12;
  const OperatorMatrix P = quantize_quadratic(x * k, BasisSpec::hermite(N, h, 1));
  // (X Xi + Xi X) / 2 = i h/2 (a*^2 - a^2)
  for (int r = 0; r < N; ++r)
    for (int c = 0; c < N; ++c) {
      Complex e = 0.0;
      if (r == c + 2) e = kI * 0.5 * h * std::sqrt(double(r) * (r - 1));
      if (c == r + 2) e = -kI * 0.5 * h * std::sqrt(double(c) * (c - 1));
      CHECK(std::abs(P.A(r, c) - e) <= 1e-14);
    }
  // the symbol's real-valuedness forces Hermitian output
  CHECK((P.A - P.A.adjoint()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cho spectrum is the exact lattice") {
  const double h = 0.05;
  const int N = 20;
  const OperatorMatrix P = quantize_quadratic(symbols::cho(1.0, 0.0), BasisSpec::hermite(N, h));
  const SpectrumResult s = spectrum(P);
  CHECK(s.blocks == N * N);
  CHECK(max_gap(s.eigenvalues, cho_lattice(h, N)) <= 1e-13);
  CHECK(s.residual_bound < 1e-12);

  const std::vector<Complex> ex = quadratic_exact_spectrum(symbols::cho(1.0, 0.0), h, N);
  CHECK(max_gap(ex, cho_lattice(h, N)) <= 1e-14);
}

TEST_CASE("torus quantization and Bohr-Sommerfeld agree exactly") {
  const SymbolExpr pt = symbols::torus_coupled(0.3);
  const double h = 0.1;
  const int K = 5;
  const SpectrumResult s = spectrum(quantize_torus(pt, BasisSpec::torus(K, h)));
  std::vector<Complex> oracle;
  for (int a = -K; a <= K; ++a)
    for (int b = -K; b <= K; ++b) oracle.emplace_back(h * a + 0.3 * h * a * h * b, h * b);
  CHECK(max_gap(s.eigenvalues, sorted(oracle)) <= 1e-15);

  BSLattice l{action_map_integrable(pt), {Eigen::Vector2d::Zero()}, h, ComplexWindow(Complex(0.0, 0.0), 0.32, 0.32)};
  const BSPrediction bs = bs_predict(l);
  CHECK(bs.unresolved.empty());
  const std::vector<Complex> inside = restrict_to(s.eigenvalues, l.window);
  REQUIRE(inside.size() == bs.points.size());
  CHECK(max_gap(bs.points, inside) <= 1e-10);

  CHECK_THROWS_AS(quantize_torus(symbols::cho(1.0, 0.0), BasisSpec::torus(2, h)), PreconditionError);
}

TEST_CASE("gaussian perturbation") {
  const OperatorMatrix P = quantize_quadratic(symbols::cho(1.0, 0.0), BasisSpec::hermite(10, 0.1));
  CHECK(perturb(P, 0.0, 7).A == P.A);
  CHECK(perturb(P, 0.1, 7).A == perturb(P, 0.1, 7).A);
  CHECK(perturb(P, 0.1, 7).A != perturb(P, 0.1, 8).A);
  CHECK_THROWS_AS(perturb(P, -1.0, 7), PreconditionError);
  // ||Q||_F^2 = dim E|q|^2 = dim, so ||Q||_F / sqrt(dim) ~ 1
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Eigen::MatrixXcd Q = gaussian_perturbation(400, seed);
    CHECK(std::abs(Q.norm() / std::sqrt(400.0) - 1.0) <= 0.05);
  }
}

TEST_CASE("spectrum: Jordan block splits like sqrt(delta)") {
  OperatorMatrix J;
  J.A = Eigen::MatrixXcd::Zero(2, 2);
  J.A(0, 1) = 1.0;
  J.basis = BasisSpec::hermite(1, 0.1, 1);
  for (double delta : {1e-4, 1e-6, 1e-8}) {
    const OperatorMatrix P = perturb(J, delta, 3);
    const Complex tr = P.A.trace(), det = P.A.determinant();
    const Complex r = std::sqrt(tr * tr - 4.0 * det);
    const std::vector<Complex> oracle = sorted({0.5 * (tr + r), 0.5 * (tr - r)});
    const SpectrumResult s = spectrum(P, delta, 3);
    CHECK(s.delta == delta);
    CHECK(*s.seed == 3u);
    CHECK(max_gap(s.eigenvalues, oracle) <= 1e-12);
    const double spread = std::abs(s.eigenvalues[0] - s.eigenvalues[1]);
    CHECK(spread / std::sqrt(delta) > 0.1);
    CHECK(spread / std::sqrt(delta) < 10.0);
  }
  OperatorMatrix big;
  big.A = Eigen::MatrixXcd::Identity(50, 50);
  SpectrumOptions o;
  o.max_dimension = 40;
  CHECK_THROWS_AS(spectrum(big, o), PreconditionError);
}

TEST_CASE("spectrum in the safe region matches the exact lattice") {
  const SymbolExpr q = symbols::cho(1.0, 0.0);
  const BasisSpec b = BasisSpec::hermite(60, 0.05);
  const SafeRegion safe = hermite_safe_region(q, b);
  const SpectrumResult s = spectrum(quantize_quadratic(q, b));
  const std::vector<Complex> num = restrict_to(s.eigenvalues, safe);
  const std::vector<Complex> ex = restrict_to(quadratic_exact_spectrum(q, b.h, 60), safe);
  CHECK(num.size() == ex.size());
  CHECK(hausdorff_distance(num, ex) <= 1e-6);
  CHECK(safe.contains(Complex(0.5, 0.5)));
  CHECK_FALSE(safe.contains(Complex(1.0, 1.0)));
  CHECK(window_is_safe(ComplexWindow::from_bounds(0.0, 1.0, 0.0, 0.3), safe));
  CHECK_FALSE(window_is_safe(ComplexWindow::from_bounds(0.0, 1.5, 0.0, 1.5), safe));
}

TEST_CASE("elliptic normal form") {
  const QuadraticNormalForm nf = quadratic_normal_form(symbols::cho(1.0, 0.0));
  REQUIRE(nf.mu.size() == 2);
  CHECK(std::abs(nf.mu(0) - kI) <= 1e-12);
  CHECK(std::abs(nf.mu(1) - 1.0) <= 1e-12);
  CHECK(std::abs(nf.offset) <= 1e-14);

  // shifted and scaled oscillator: (x - 1)^2 + 4 xi^2 / 2 + 3 -> mu = 2, offset 3
  const SymbolExpr x = SymbolExpr::x(1, 0), k = SymbolExpr::xi(1, 0);
  const SymbolExpr q1 = 0.5 * ((x - SymbolExpr::constant(1, 1.0)) * (x - SymbolExpr::constant(1, 1.0)) + 4.0 * k * k) +
                        SymbolExpr::constant(1, 3.0);
  const QuadraticNormalForm n1 = quadratic_normal_form(q1);
  CHECK(std::abs(n1.mu(0) - 2.0) <= 1e-12);
  CHECK(std::abs(n1.offset - 3.0) <= 1e-12);

  // rotated by e^{i pi/4}: mu rotates with it
  const QuadraticNormalForm n2 = quadratic_normal_form(std::polar(1.0, kPi / 4) * 0.5 * (x * x + k * k));
  CHECK(std::abs(n2.mu(0) - std::polar(1.0, kPi / 4)) <= 1e-12);

  CHECK_THROWS_AS(quadratic_normal_form(x * k), PreconditionError);
  CHECK_THROWS_AS(quadratic_normal_form(0.5 * (x * x - k * k)), PreconditionError);
  CHECK_THROWS_AS(quadratic_normal_form(x * x), PreconditionError);
}

TEST_CASE("property: exact spectrum is invariant under quadratic deformation") {
  const SymbolExpr q = symbols::cho(1.0, 0.0);
  for (double t : {0.1, 0.2, 0.35}) {
    const SymbolExpr qt = deformed_quadratic(DeformedSymbol(q, Deformation(symbols::x1x2()), t));
    const QuadraticNormalForm a = quadratic_normal_form(q), b = quadratic_normal_form(qt);
    CHECK(std::abs(a.mu(0) - b.mu(0)) <= 1e-10);
    CHECK(std::abs(a.mu(1) - b.mu(1)) <= 1e-10);
    CHECK(std::abs(a.offset - b.offset) <= 1e-10);
  }
}

TEST_CASE("property: numerical spectrum is invariant under deformation in the safe region") {
  const SymbolExpr q = symbols::cho(1.0, 0.0);
  const BasisSpec b = BasisSpec::hermite(40, 0.05);
  const SymbolExpr qt = deformed_quadratic(DeformedSymbol(q, Deformation(symbols::x1x2()), 0.2));
  const SpectrumResult s = spectrum(quantize_quadratic(qt, b));
  CHECK(s.blocks == 2);
  const SafeRegion safe = hermite_safe_region(qt, b);
  const std::vector<Complex> num = restrict_to(s.eigenvalues, safe);
  const std::vector<Complex> ex = restrict_to(quadratic_exact_spectrum(q, b.h, 40), safe);
  MESSAGE("safe eigenvalues " << num.size() << " of " << s.eigenvalues.size());
  CHECK(num.size() == ex.size());
  CHECK(hausdorff_distance(num, ex) <= 1e-6);
}

TEST_CASE("property: real symbols quantize to Hermitian matrices") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    SymbolExpr q = SymbolExpr::constant(2, g(rng));
    std::vector<SymbolExpr> z{SymbolExpr::x(2, 0), SymbolExpr::x(2, 1), SymbolExpr::xi(2, 0), SymbolExpr::xi(2, 1)};
    for (int a = 0; a < 4; ++a) {
      q = q + g(rng) * z[a];
      for (int c = a; c < 4; ++c) q = q + g(rng) * z[a] * z[c];
    }
    const OperatorMatrix P = quantize_quadratic(q, BasisSpec::hermite(8, 0.1));
    CHECK((P.A - P.A.adjoint()).cwiseAbs().maxCoeff() <= 1e-12);
    const SpectrumResult s = spectrum(P);
    double worst = 0.0;
    for (Complex e : s.eigenvalues) worst = std::max(worst, std::abs(e.imag()));
    CHECK(worst <= 1e-10 * std::max(1.0, P.A.norm()));
  }
}

TEST_CASE("property: perturbation continuity at small delta") {
  const OperatorMatrix P = quantize_quadratic(symbols::cho(1.0, 0.0), BasisSpec::hermite(12, 0.1));
  const SpectrumResult s0 = spectrum(P), s1 = spectrum(perturb(P, 1e-12, 5));
  CHECK(s1.blocks == 1);
  CHECK(s1.eigenvalues.size() == s0.eigenvalues.size());
  CHECK(hausdorff_distance(s0.eigenvalues, s1.eigenvalues) <= 1e-10);
}

TEST_CASE("Bohr-Sommerfeld for the cho normal form") {
  const ComplexWindow W = ComplexWindow::from_bounds(0.01, 1.01, 0.01, 0.76);
  BSLattice l{action_map_integrable(symbols::torus_linear()), {Eigen::Vector2d(0.5, 0.5)}, 0.05, W};
  const BSPrediction bs = bs_predict(l);
  CHECK(bs.unresolved.empty());
  CHECK(bs.points.size() == 300);
  std::vector<Complex> oracle;
  for (Complex z : cho_lattice(0.05, 40))
    if (W.contains(z)) oracle.push_back(z);
  CHECK(max_gap(bs.points, oracle) <= 1e-10);
  for (std::size_t k = 0; k < bs.points.size(); ++k)
    CHECK(std::abs(bs.points[k] - Complex(0.05 * (bs.indices[k](0) - 0.5), 0.05 * (bs.indices[k](1) - 0.5))) <= 1e-12);

  l.h = 0.025;
  const double ratio = static_cast<double>(bs_predict(l).points.size()) / bs.points.size();
  CHECK(std::abs(ratio / 4.0 - 1.0) <= 0.1);

  // subprincipal term shifts the lattice
  l.h = 0.05;
  l.theta = {Eigen::Vector2d(0.5, 0.5), Eigen::Vector2d(1.0, 0.0)};
  CHECK(l.theta_at_h()(0) == doctest::Approx(0.55));
  const BSPrediction shifted = bs_predict(l);
  REQUIRE_FALSE(shifted.points.empty());
  const double u = shifted.points[0].real() / 0.05 + 0.55;
  CHECK(std::abs(u - std::round(u)) <= 1e-9);
}

TEST_CASE("property: counts scale like h^-2") {
  const SymbolExpr q = symbols::cho(1.0, 0.0);
  const ComplexWindow W = ComplexWindow::from_bounds(0.2, 0.8, 0.1, 0.5);
  std::int64_t prev = 0;
  for (double h : {0.1, 0.07, 0.05}) {
    const std::int64_t c = count_in(quadratic_exact_spectrum(q, h, 40), W);
    CHECK(c > prev);
    prev = c;
  }
}

TEST_CASE("count and compare") {
  const SymbolExpr q = symbols::cho(1.0, 0.0);
  const BasisSpec b = BasisSpec::hermite(60, 0.05);
  const SpectrumResult s = spectrum(quantize_quadratic(q, b));
  const ComplexWindow W = ComplexWindow::from_bounds(0.01, 1.01, 0.01, 0.76);
  const double omega = integrate_omega(action_map_integrable(symbols::torus_linear()), W);
  SamplingOptions so;
  so.samples = 1'000'000;
  so.quasi_random = true;
  const VolumeEstimate vol = preimage_volume(q, W, 1.6, so);
  const SafeRegion safe = hermite_safe_region(q, b);
  const ComparisonReport r = count_and_compare(s, W, omega, vol, &safe);
  CHECK(r.count == 300);
  CHECK(r.omega_prediction == doctest::Approx(300.0).epsilon(1e-9));
  CHECK(std::abs(r.weyl_prediction - 300.0) <= 3.0 * r.weyl_prediction_error + 1.0);
  CHECK(std::abs(r.omega_deviation) <= 1e-9);
  CHECK_FALSE(r.unsafe);

  const SafeRegion small = hermite_safe_region(q, BasisSpec::hermite(20, 0.05));
  CHECK(count_and_compare(s, W, omega, vol, &small).unsafe);
  CHECK(count_in({}, W) == 0);
}
