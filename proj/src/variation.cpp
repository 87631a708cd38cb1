#include "bsweyl/variation.hpp"

#include <algorithm>
#include <cmath>
#include <thread>
#include <utility>

namespace bsweyl {

namespace {

double phi(double s) {
  const double a = 1.0 - s * s;
  return std::abs(s) >= 1.0 ? 0.0 : a * a * a;
}

double dphi(double s) {
  const double a = 1.0 - s * s;
  return std::abs(s) >= 1.0 ? 0.0 : -6.0 * s * a * a;
}

double ddphi(double s) {
  return std::abs(s) >= 1.0 ? 0.0 : (1.0 - s * s) * (30.0 * s * s - 6.0);
}

std::pair<double, double> local(const TestFunction& f, Complex z) {
  return {(z.real() - f.center.real()) / f.radius, (z.imag() - f.center.imag()) / f.radius};
}

}  // namespace

TestFunction::TestFunction(Complex c, double r) : center(c), radius(r) {
  if (!(r > 0.0)) throw PreconditionError("test function radius must be positive");
}

double TestFunction::operator()(Complex z) const {
  const auto [u, v] = local(*this, z);
  return phi(u) * phi(v);
}
double TestFunction::dre(Complex z) const {
  const auto [u, v] = local(*this, z);
  return dphi(u) * phi(v) / radius;
}
double TestFunction::dim(Complex z) const {
  const auto [u, v] = local(*this, z);
  return phi(u) * dphi(v) / radius;
}
double TestFunction::dre_re(Complex z) const {
  const auto [u, v] = local(*this, z);
  return ddphi(u) * phi(v) / (radius * radius);
}
double TestFunction::dim_im(Complex z) const {
  const auto [u, v] = local(*this, z);
  return phi(u) * ddphi(v) / (radius * radius);
}
double TestFunction::dre_im(Complex z) const {
  const auto [u, v] = local(*this, z);
  return dphi(u) * dphi(v) / (radius * radius);
}
double TestFunction::laplacian(Complex z) const {
  const auto [u, v] = local(*this, z);
  if (std::abs(u) >= 1.0 || std::abs(v) >= 1.0) return 0.0;
  return (ddphi(u) * phi(v) + phi(u) * ddphi(v)) / (radius * radius);
}

Complex TestFunction::dz(Complex z) const { return 0.5 * Complex(dre(z), -dim(z)); }

Complex TestFunction::dzdz(Complex z) const {
  return 0.25 * Complex(dre_re(z) - dim_im(z), -2.0 * dre_im(z));
}

bool TestFunction::in_support(Complex z) const {
  return std::abs(z.real() - center.real()) < radius && std::abs(z.imag() - center.imag()) < radius;
}

bool TestFunction::supported_in(const ComplexWindow& w) const {
  return center.real() - radius >= w.re_lo() && center.real() + radius <= w.re_hi() &&
         center.imag() - radius >= w.im_lo() && center.imag() + radius <= w.im_hi();
}

GaussLegendre gauss_legendre(int order) {
  if (order < 1) throw PreconditionError("quadrature order must be positive");
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    J(k, k - 1) = J(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  GaussLegendre g;
  g.nodes = es.eigenvalues();
  g.weights = 2.0 * es.eigenvectors().row(0).transpose().array().square();
  return g;
}

namespace {

template <typename T>
T pairwise_sum(const T* a, std::size_t n) {
  if (n <= 8) {
    T s{};
    for (std::size_t k = 0; k < n; ++k) s += a[k];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum(a, h) + pairwise_sum(a + h, n - h);
}

// Shards are the slices of the first axis; each reduces pairwise, then the slice totals do.
template <typename T>
T tensor_quadrature_impl(const std::function<T(std::span<const double>)>& g, int dim, double R, int order,
                         int threads) {
  if (dim < 1) throw DimensionError("quadrature dimension must be positive");
  const GaussLegendre gl = gauss_legendre(order);
  std::size_t inner = 1;
  for (int a = 1; a < dim; ++a) inner *= static_cast<std::size_t>(order);
  std::vector<T> slice_totals(order);

  auto run = [&](int i0) {
    std::vector<T> buf(inner);
    std::vector<double> z(dim);
    for (std::size_t k = 0; k < inner; ++k) {
      std::size_t rest = k;
      double w = gl.weights(i0);
      z[0] = R * gl.nodes(i0);
      for (int a = 1; a < dim; ++a) {
        const int ia = static_cast<int>(rest % order);
        rest /= order;
        z[a] = R * gl.nodes(ia);
        w *= gl.weights(ia);
      }
      buf[k] = w * g(z);
    }
    slice_totals[i0] = pairwise_sum(buf.data(), buf.size());
  };

  int nt = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  nt = std::clamp(nt, 1, order);
  if (nt == 1) {
    for (int i = 0; i < order; ++i) run(i);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < nt; ++w)
      pool.emplace_back([&, w] {
        for (int i = w; i < order; i += nt) run(i);
      });
    for (auto& th : pool) th.join();
  }
  return pairwise_sum(slice_totals.data(), slice_totals.size()) * std::pow(R, dim);
}

void check_order(int order) {
  if (order < 8) throw PreconditionError("quadrature order must be at least 8");
}

// f o p must vanish near the box boundary.
void check_support(const TestFunction& f, const RealEvaluator& p, int n, double R) {
  const std::vector<double> hw(2 * n, R);
  if (!box_boundary_clear(p, hw, f.support(), 0.01))
    throw PreconditionError("test function support reaches the integration box boundary");
}

Estimate estimate(const std::function<double(int)>& q, int order) {
  const double a = q(order), b = q(order - 8);
  return {a, std::abs(a - b)};
}

}  // namespace

double tensor_quadrature(const std::function<double(std::span<const double>)>& g, int dim, double half_width,
                         int order, int threads) {
  return tensor_quadrature_impl<double>(g, dim, half_width, order, threads);
}

Complex tensor_quadrature_complex(const std::function<Complex(std::span<const double>)>& g, int dim,
                                  double half_width, int order, int threads) {
  return tensor_quadrature_impl<Complex>(g, dim, half_width, order, threads);
}

double moment(const TestFunction& f, const RealEvaluator& p, int n, const QuadratureOptions& opt) {
  check_order(opt.order);
  check_support(f, p, n, opt.box_radius);
  return tensor_quadrature([&](std::span<const double> z) { return f(p(z)); }, 2 * n, opt.box_radius, opt.order,
                           opt.threads);
}

double moment(const TestFunction& f, const SymbolExpr& p, const QuadratureOptions& opt) {
  return moment(f, real_evaluator(p), p.dim(), opt);
}

double moment(const TestFunction& f, const DeformedSymbol& p, const QuadratureOptions& opt) {
  return moment(f, real_evaluator(p), p.dim(), opt);
}

double fd_real_bracket(const RealEvaluator& q, std::span<const double> z, double step) {
  const std::size_t d = z.size(), n = d / 2;
  std::vector<double> w(z.begin(), z.end());
  std::vector<Complex> grad(d);
  for (std::size_t k = 0; k < d; ++k) {
    auto central = [&](double h) {
      w[k] = z[k] + h;
      const Complex fp = q(w);
      w[k] = z[k] - h;
      const Complex fm = q(w);
      w[k] = z[k];
      return (fp - fm) / (2.0 * h);
    };
    grad[k] = (4.0 * central(0.5 * step) - central(step)) / 3.0;
  }
  // {u, v} = u_xi v_x - u_x v_xi
  double b = 0.0;
  for (std::size_t j = 0; j < n; ++j)
    b += grad[n + j].real() * grad[j].imag() - grad[j].real() * grad[n + j].imag();
  return b;
}

Estimate first_variation_rhs(const TestFunction& f, const DeformedSymbol& pt, const QuadratureOptions& opt) {
  check_order(opt.order);
  const RealEvaluator p = real_evaluator(pt);
  const int n = pt.dim();
  check_support(f, p, n, opt.box_radius);
  const SymbolExpr G = pt.deformation().generator_at(pt.t());
  if (G.is_zero()) return {};

  std::function<double(std::span<const double>)> bracket;
  if (pt.closed_form()) {
    const SymbolExpr rb = real_bracket(*pt.closed_form());
    if (rb.is_zero()) return {};
    bracket = [rb](std::span<const double> z) { return rb.evaluate_real(z).real(); };
  } else {
    bracket = [&p](std::span<const double> z) { return fd_real_bracket(p, z); };
  }
  auto integrand = [&](std::span<const double> z) {
    const double lap = f.laplacian(p(z));
    if (lap == 0.0) return 0.0;
    return lap * bracket(z) * G.evaluate_real(z).real();
  };
  return estimate(
      [&](int order) { return tensor_quadrature(integrand, 2 * n, opt.box_radius, order, opt.threads); },
      opt.order);
}

namespace {

bool real_on_reals(const SymbolExpr& G) { return (G - G.conj()).is_zero(); }

}  // namespace

Estimate second_variation_rhs(const TestFunction& f, const SymbolExpr& p, const SymbolExpr& G,
                              const QuadratureOptions& opt) {
  check_order(opt.order);
  if (!real_bracket(p).is_zero()) throw PreconditionError("base symbol is not integrable: {Re p, Im p} != 0");
  if (!real_on_reals(G)) throw PreconditionError("generator must be real on real points");
  const int n = p.dim();
  const RealEvaluator pe = real_evaluator(p);
  check_support(f, pe, n, opt.box_radius);
  const SymbolExpr hpg = poisson_bracket(p, G);
  if (hpg.is_zero()) return {};
  auto integrand = [&](std::span<const double> z) {
    const double lap = f.laplacian(p.evaluate_real(z));
    if (lap == 0.0) return 0.0;
    return lap * std::norm(hpg.evaluate_real(z));
  };
  return estimate(
      [&](int order) { return tensor_quadrature(integrand, 2 * n, opt.box_radius, order, opt.threads); },
      opt.order);
}

namespace {

double discrepancy(double lhs, double rhs) { return std::abs(lhs - rhs) / std::max(std::abs(rhs), 1e-12); }

}  // namespace

VariationReport first_variation_check(const TestFunction& f, const SymbolExpr& p, const Deformation& d, double t,
                                      const QuadratureOptions& opt, double step) {
  auto M = [&](double s) { return moment(f, DeformedSymbol(p, d, s), opt); };
  auto D = [&](double h) { return (M(t + h) - M(t - h)) / (2.0 * h); };
  const double coarse = D(step), fine = D(0.5 * step);
  VariationReport r;
  r.order = VariationOrder::kFirst;
  r.t = t;
  r.lhs = (4.0 * fine - coarse) / 3.0;
  r.lhs_error = std::abs(r.lhs - fine);
  const Estimate rhs = first_variation_rhs(f, DeformedSymbol(p, d, t), opt);
  r.rhs = rhs.value;
  r.rhs_error = rhs.error;
  r.discrepancy = discrepancy(r.lhs, r.rhs);
  return r;
}

VariationReport second_variation_check(const TestFunction& f, const SymbolExpr& p, const SymbolExpr& G,
                                       const QuadratureOptions& opt, double step) {
  const Deformation d(G);
  const double m0 = moment(f, p, opt);
  auto S = [&](double h) {
    return (moment(f, DeformedSymbol(p, d, h), opt) - 2.0 * m0 + moment(f, DeformedSymbol(p, d, -h), opt)) /
           (h * h);
  };
  const double coarse = S(step), fine = S(0.5 * step);
  VariationReport r;
  r.order = VariationOrder::kSecond;
  r.lhs = (4.0 * fine - coarse) / 3.0;
  r.lhs_error = std::abs(r.lhs - fine);
  const Estimate rhs = second_variation_rhs(f, p, G, opt);
  r.rhs = rhs.value;
  r.rhs_error = rhs.error;
  r.discrepancy = discrepancy(r.lhs, r.rhs);
  return r;
}

Certificate nonequality_certificate(const SymbolExpr& p, const SymbolExpr& G, const ComplexWindow& window,
                                    int budget, const QuadratureOptions& opt, int search_order) {
  Certificate c;
  const SymbolExpr hpg = poisson_bracket(p, G);
  if (hpg.is_zero()) return c;

  // two radii, an odd k x k grid of centers for each, the bump kept inside the window
  const double base = std::min(window.half_re, window.half_im);
  const std::array<double, 2> radii{0.5 * base, 0.25 * base};
  int k = static_cast<int>(std::floor(std::sqrt(std::max(1, budget) / 2.0)));
  if (k % 2 == 0) k = std::max(1, k - 1);

  // candidates are ranked by |value| / (quadrature error) at the coarse search order
  double best = 0.0;
  for (double r : radii)
    for (int j = 0; j < k; ++j)
      for (int i = 0; i < k; ++i) {
        const double fr = k == 1 ? 0.5 : static_cast<double>(i) / (k - 1);
        const double fi = k == 1 ? 0.5 : static_cast<double>(j) / (k - 1);
        const Complex ctr(window.re_lo() + r + fr * (2.0 * window.half_re - 2.0 * r),
                          window.im_lo() + r + fi * (2.0 * window.half_im - 2.0 * r));
        const TestFunction f(ctr, r);
        QuadratureOptions search = opt;
        search.order = search_order;
        Estimate e;
        try {
          e = second_variation_rhs(f, p, G, search);
        } catch (const PreconditionError&) {
          continue;
        }
        ++c.candidates;
        const double score = std::abs(e.value) / std::max(e.error, 1e-300);
        if (std::abs(e.value) > 0.0 && score > best) {
          best = score;
          c.f = f;
        }
      }
  if (best <= 0.0) return c;
  const Estimate e = second_variation_rhs(c.f, p, G, opt);
  c.value = e.value;
  c.error = e.error;
  c.found = std::abs(e.value) > 5.0 * e.error && e.value != 0.0;
  return c;
}

}  // namespace bsweyl
