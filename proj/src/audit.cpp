#include "bsweyl/audit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bsweyl/sampling.hpp"

namespace bsweyl {

std::string to_string(Check c) {
  switch (c) {
    case Check::kPass:
      return "pass";
    case Check::kFail:
      return "fail";
    case Check::kNotChecked:
      break;
  }
  return "not-checked";
}

namespace {

struct RealGradients {
  Eigen::VectorXd re;  // gradient of Re p in (x, xi)
  Eigen::VectorXd im;
};

// At a real point the real-direction derivatives of a holomorphic p are its
// complex partials, so grad Re p = Re(p'), grad Im p = Im(p').
RealGradients real_gradients(const std::vector<SymbolExpr>& partials, std::span<const double> z) {
  const auto m = partials.size();
  RealGradients g{Eigen::VectorXd(m), Eigen::VectorXd(m)};
  for (std::size_t k = 0; k < m; ++k) {
    const Complex v = partials[k].evaluate_real(z);
    g.re(k) = v.real();
    g.im(k) = v.imag();
  }
  return g;
}

std::vector<SymbolExpr> partials_of(const SymbolExpr& p) {
  std::vector<SymbolExpr> d;
  for (int j = 0; j < p.dim(); ++j) d.push_back(p.dx(j));
  for (int j = 0; j < p.dim(); ++j) d.push_back(p.dxi(j));
  return d;
}

double wedge_norm(const RealGradients& g) {
  const double a = g.re.squaredNorm();
  const double b = g.im.squaredNorm();
  const double c = g.re.dot(g.im);
  return std::sqrt(std::max(0.0, a * b - c * c));
}

struct DisjointSets {
  std::vector<int> parent;
  explicit DisjointSets(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

double point_distance(const std::vector<double>& a, const std::vector<double>& b, int n, bool periodic_x) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    double d = std::abs(a[k] - b[k]);
    if (periodic_x && static_cast<int>(k) < n) {
      d = std::fmod(d, kTwoPi);
      d = std::min(d, kTwoPi - d);
    }
    s += d * d;
  }
  return std::sqrt(s);
}

int count_clusters(const std::vector<std::vector<double>>& pts, double radius, int n, bool periodic_x) {
  const int m = static_cast<int>(pts.size());
  DisjointSets sets(m);
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      if (point_distance(pts[i], pts[j], n, periodic_x) <= radius) sets.unite(i, j);
    }
  }
  int clusters = 0;
  for (int i = 0; i < m; ++i) clusters += sets.find(i) == i;
  return clusters;
}

}  // namespace

double differential_independence(const SymbolExpr& p, std::span<const double> z) {
  return wedge_norm(real_gradients(partials_of(p), z));
}

std::optional<std::vector<double>> project_to_zero_set(const SymbolExpr& p, std::vector<double> z,
                                                       double tolerance, int max_iterations) {
  const auto partials = partials_of(p);
  for (int it = 0; it <= max_iterations; ++it) {
    const Complex v = p.evaluate_real(z);
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return std::nullopt;
    if (std::abs(v) <= tolerance) return z;
    if (it == max_iterations) break;
    const auto g = real_gradients(partials, z);
    Eigen::Matrix<double, 2, Eigen::Dynamic> jac(2, g.re.size());
    jac.row(0) = g.re.transpose();
    jac.row(1) = g.im.transpose();
    const Eigen::Matrix2d gram = jac * jac.transpose();
    if (std::abs(gram.determinant()) < 1e-300) return std::nullopt;
    const Eigen::Vector2d f(v.real(), v.imag());
    const Eigen::VectorXd step = jac.transpose() * gram.ldlt().solve(f);
    for (std::size_t k = 0; k < z.size(); ++k) z[k] -= step(static_cast<Eigen::Index>(k));
  }
  return std::nullopt;
}

AuditReport audit(const SymbolExpr& p, const AuditOptions& opt) {
  AuditReport report;
  const int n = p.dim();
  const int dim = 2 * n;
  const double c = opt.ball_radius;
  if (!(c > 0.0)) throw PreconditionError("audit: ball radius must be positive");
  if (opt.sample_budget <= 0) throw PreconditionError("audit: sample budget must be positive");

  std::mt19937_64 rng = shard_rng(opt.seed, 0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> shift(dim + 1);
  for (auto& s : shift) s = unit(rng);
  std::vector<double> u(dim + 1);
  std::vector<double> z(dim);

  // Ellipticity near infinity, on the shell C <= |rho| <= 2C (xi only when x is periodic).
  double min_abs = std::numeric_limits<double>::infinity();
  const int shell_dims = opt.periodic_x ? n : dim;
  const int offset = opt.periodic_x ? n : 0;
  for (int i = 0; i < opt.sample_budget; ++i) {
    halton_point(static_cast<std::uint64_t>(i), shift, u);
    double norm = 0.0;
    for (int k = 0; k < shell_dims; ++k) {
      z[offset + k] = 2.0 * u[k] - 1.0;
      norm += z[offset + k] * z[offset + k];
    }
    norm = std::sqrt(norm);
    if (norm < 1e-6) continue;
    const double r = c * (1.0 + u[dim]);
    for (int k = 0; k < shell_dims; ++k) z[offset + k] *= r / norm;
    if (opt.periodic_x) {
      for (int k = 0; k < n; ++k) z[k] = kPi * (2.0 * u[shell_dims + k] - 1.0);
    }
    min_abs = std::min(min_abs, std::abs(p.evaluate_real(z)));
  }
  report.min_abs_outside_ball = min_abs;
  report.elliptic_at_infinity = min_abs >= 1.0 / c ? Check::kPass : Check::kFail;

  // Zero set by Newton projection of quasi-random seeds in the ball's box.
  const SymbolExpr bracket = real_bracket(p);
  report.min_independence = std::numeric_limits<double>::infinity();
  for (int i = 0; i < opt.sample_budget; ++i) {
    halton_point(static_cast<std::uint64_t>(i) + 7919u, shift, u);
    std::vector<double> seed(dim);
    for (int k = 0; k < dim; ++k) {
      const double half = (opt.periodic_x && k < n) ? kPi : c;
      seed[k] = half * (2.0 * u[k] - 1.0);
    }
    auto zero = project_to_zero_set(p, std::move(seed), opt.newton_tolerance, opt.newton_max_iterations);
    if (!zero) continue;
    bool inside = true;
    for (int k = 0; k < dim; ++k) {
      if (opt.periodic_x && k < n) {
        (*zero)[k] = std::remainder((*zero)[k], kTwoPi);
      } else if (std::abs((*zero)[k]) > 2.0 * c) {
        inside = false;
      }
    }
    if (!inside) continue;
    report.min_independence = std::min(report.min_independence, differential_independence(p, *zero));
    report.max_abs_bracket = std::max(report.max_abs_bracket, std::abs(bracket.evaluate_real(*zero)));
    report.zero_samples.push_back(std::move(*zero));
  }
  report.zero_points = static_cast<int>(report.zero_samples.size());

  if (report.zero_points == 0) {
    report.min_independence = 0.0;
    return report;
  }
  report.independent_differentials = report.min_independence > 1e-8 ? Check::kPass : Check::kFail;
  report.small_bracket = report.max_abs_bracket < opt.bracket_threshold ? Check::kPass : Check::kFail;
  report.zero_set_clusters = count_clusters(report.zero_samples, opt.linkage_radius, n, opt.periodic_x);
  report.connected = report.zero_set_clusters == 1 ? Check::kPass : Check::kFail;
  return report;
}

}  // namespace bsweyl
