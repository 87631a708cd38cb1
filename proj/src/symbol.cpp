#include "bsweyl/symbol.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <tuple>

#include "bsweyl/diagnostics.hpp"

namespace bsweyl {

// ---------------------------------------------------------------------------
// PhasePoint

PhasePoint::PhasePoint(Eigen::VectorXcd x_, Eigen::VectorXcd xi_) : x(std::move(x_)), xi(std::move(xi_)) {
  if (x.size() != xi.size()) throw DimensionError("PhasePoint: x and xi must have equal length");
}

PhasePoint PhasePoint::real(std::span<const double> x, std::span<const double> xi) {
  if (x.size() != xi.size()) throw DimensionError("PhasePoint: x and xi must have equal length");
  PhasePoint p(static_cast<int>(x.size()));
  for (std::size_t j = 0; j < x.size(); ++j) {
    p.x(j) = x[j];
    p.xi(j) = xi[j];
  }
  return p;
}

PhasePoint PhasePoint::from_stacked(const Eigen::Ref<const Eigen::VectorXcd>& z) {
  if (z.size() % 2 != 0) throw DimensionError("PhasePoint: stacked vector must have even length");
  const auto n = z.size() / 2;
  return PhasePoint(z.head(n), z.tail(n));
}

Eigen::VectorXcd PhasePoint::stacked() const {
  Eigen::VectorXcd z(2 * x.size());
  z << x, xi;
  return z;
}

double PhasePoint::max_abs_imag() const {
  double m = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    m = std::max({m, std::abs(x(j).imag()), std::abs(xi(j).imag())});
  }
  return m;
}

bool PhasePoint::is_real() const { return max_abs_imag() <= kRealPointTolerance; }

bool PhasePoint::is_finite() const { return x.allFinite() && xi.allFinite(); }

// ---------------------------------------------------------------------------
// Term

int Term::degree() const {
  int d = 0;
  for (int p : xpow) d += p;
  for (int p : xipow) d += p;
  return d;
}

bool Term::has_frequency() const {
  auto nz = [](double a) { return a != 0.0; };
  return std::any_of(xfreq.begin(), xfreq.end(), nz) || std::any_of(xifreq.begin(), xifreq.end(), nz);
}

namespace {

Term zero_term(int n, Complex c) {
  return Term{c, std::vector<int>(n, 0), std::vector<int>(n, 0), std::vector<double>(n, 0.0),
              std::vector<double>(n, 0.0)};
}

auto term_key(const Term& t) { return std::tie(t.xpow, t.xipow, t.xfreq, t.xifreq); }

template <typename T>
T ipow(T base, int e) {
  T r(1.0);
  while (e > 0) {
    if (e & 1) r *= base;
    base *= base;
    e >>= 1;
  }
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// SymbolExpr

SymbolExpr::SymbolExpr(int n, double tube_radius) : n_(n), tube_radius_(tube_radius) {
  if (n <= 0) throw DimensionError("SymbolExpr: dimension must be positive");
  if (!(tube_radius > 0.0)) throw PreconditionError("SymbolExpr: tube radius must be positive");
}

SymbolExpr::SymbolExpr(int n, std::vector<Term> terms, double tube_radius) : SymbolExpr(n, tube_radius) {
  for (const auto& t : terms) check_term(t);
  terms_ = std::move(terms);
  normalize();
}

void SymbolExpr::check_term(const Term& t) const {
  const auto n = static_cast<std::size_t>(n_);
  if (t.xpow.size() != n || t.xipow.size() != n || t.xfreq.size() != n || t.xifreq.size() != n) {
    throw DimensionError("SymbolExpr: term arrays must have length n = " + std::to_string(n_));
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (t.xpow[j] < 0 || t.xipow[j] < 0) throw PreconditionError("SymbolExpr: negative exponent");
    if (!std::isfinite(t.xfreq[j]) || !std::isfinite(t.xifreq[j])) {
      throw PreconditionError("SymbolExpr: non-finite frequency");
    }
  }
  if (!std::isfinite(t.coeff.real()) || !std::isfinite(t.coeff.imag())) {
    throw PreconditionError("SymbolExpr: non-finite coefficient");
  }
}

void SymbolExpr::normalize() {
  std::sort(terms_.begin(), terms_.end(),
            [](const Term& a, const Term& b) { return term_key(a) < term_key(b); });
  std::vector<Term> merged;
  merged.reserve(terms_.size());
  for (auto& t : terms_) {
    if (!merged.empty() && term_key(merged.back()) == term_key(t)) {
      merged.back().coeff += t.coeff;
    } else {
      merged.push_back(std::move(t));
    }
  }
  std::erase_if(merged, [](const Term& t) { return t.coeff == Complex(0.0, 0.0); });
  terms_ = std::move(merged);
}

SymbolExpr SymbolExpr::constant(int n, Complex c, double tube_radius) {
  return SymbolExpr(n, {zero_term(n, c)}, tube_radius);
}

SymbolExpr SymbolExpr::x(int n, int j, double tube_radius) {
  if (j < 0 || j >= n) throw DimensionError("SymbolExpr::x: index out of range");
  Term t = zero_term(n, 1.0);
  t.xpow[j] = 1;
  return SymbolExpr(n, {t}, tube_radius);
}

SymbolExpr SymbolExpr::xi(int n, int j, double tube_radius) {
  if (j < 0 || j >= n) throw DimensionError("SymbolExpr::xi: index out of range");
  Term t = zero_term(n, 1.0);
  t.xipow[j] = 1;
  return SymbolExpr(n, {t}, tube_radius);
}

SymbolExpr SymbolExpr::exp_i(std::vector<double> a, std::vector<double> b, double tube_radius) {
  if (a.size() != b.size() || a.empty()) throw DimensionError("SymbolExpr::exp_i: frequency size mismatch");
  const int n = static_cast<int>(a.size());
  Term t = zero_term(n, 1.0);
  t.xfreq = std::move(a);
  t.xifreq = std::move(b);
  return SymbolExpr(n, {t}, tube_radius);
}

bool SymbolExpr::is_polynomial() const {
  return std::none_of(terms_.begin(), terms_.end(), [](const Term& t) { return t.has_frequency(); });
}

int SymbolExpr::degree() const {
  int d = 0;
  for (const auto& t : terms_) d = std::max(d, t.degree());
  return d;
}

bool SymbolExpr::depends_on_x() const {
  for (const auto& t : terms_) {
    for (int j = 0; j < n_; ++j) {
      if (t.xpow[j] != 0 || t.xfreq[j] != 0.0) return true;
    }
  }
  return false;
}

bool SymbolExpr::in_tube(const PhasePoint& rho) const { return rho.max_abs_imag() <= tube_radius_; }

SymbolExpr SymbolExpr::with_tube_radius(double tube_radius) const {
  SymbolExpr s(n_, tube_radius);
  s.terms_ = terms_;
  return s;
}

Complex SymbolExpr::evaluate(std::span<const Complex> x, std::span<const Complex> xi) const {
  Complex sum(0.0, 0.0);
  for (const auto& t : terms_) {
    Complex v = t.coeff;
    Complex phase(0.0, 0.0);
    bool oscillatory = false;
    for (int j = 0; j < n_; ++j) {
      if (t.xpow[j]) v *= ipow(x[j], t.xpow[j]);
      if (t.xipow[j]) v *= ipow(xi[j], t.xipow[j]);
      if (t.xfreq[j] != 0.0) {
        phase += t.xfreq[j] * x[j];
        oscillatory = true;
      }
      if (t.xifreq[j] != 0.0) {
        phase += t.xifreq[j] * xi[j];
        oscillatory = true;
      }
    }
    if (oscillatory) v *= std::exp(kI * phase);
    sum += v;
  }
  return sum;
}

Complex SymbolExpr::evaluate_real(std::span<const double> z) const {
  Complex sum(0.0, 0.0);
  for (const auto& t : terms_) {
    double mono = 1.0;
    double phase = 0.0;
    bool oscillatory = false;
    for (int j = 0; j < n_; ++j) {
      if (t.xpow[j]) mono *= ipow(z[j], t.xpow[j]);
      if (t.xipow[j]) mono *= ipow(z[n_ + j], t.xipow[j]);
      if (t.xfreq[j] != 0.0) {
        phase += t.xfreq[j] * z[j];
        oscillatory = true;
      }
      if (t.xifreq[j] != 0.0) {
        phase += t.xifreq[j] * z[n_ + j];
        oscillatory = true;
      }
    }
    Complex v = t.coeff * mono;
    if (oscillatory) v *= Complex(std::cos(phase), std::sin(phase));
    sum += v;
  }
  return sum;
}

Complex SymbolExpr::operator()(const PhasePoint& rho) const { return eval(*this, rho); }

SymbolExpr SymbolExpr::dx(int j) const {
  if (j < 0 || j >= n_) throw DimensionError("SymbolExpr::dx: index out of range");
  std::vector<Term> out;
  for (const auto& t : terms_) {
    if (t.xpow[j] > 0) {
      Term d = t;
      d.coeff *= static_cast<double>(t.xpow[j]);
      d.xpow[j] -= 1;
      out.push_back(std::move(d));
    }
    if (t.xfreq[j] != 0.0) {
      Term d = t;
      d.coeff *= kI * t.xfreq[j];
      out.push_back(std::move(d));
    }
  }
  return SymbolExpr(n_, std::move(out), tube_radius_);
}

SymbolExpr SymbolExpr::dxi(int j) const {
  if (j < 0 || j >= n_) throw DimensionError("SymbolExpr::dxi: index out of range");
  std::vector<Term> out;
  for (const auto& t : terms_) {
    if (t.xipow[j] > 0) {
      Term d = t;
      d.coeff *= static_cast<double>(t.xipow[j]);
      d.xipow[j] -= 1;
      out.push_back(std::move(d));
    }
    if (t.xifreq[j] != 0.0) {
      Term d = t;
      d.coeff *= kI * t.xifreq[j];
      out.push_back(std::move(d));
    }
  }
  return SymbolExpr(n_, std::move(out), tube_radius_);
}

SymbolExpr SymbolExpr::conj() const {
  SymbolExpr c = *this;
  for (auto& t : c.terms_) {
    t.coeff = std::conj(t.coeff);
    for (auto& a : t.xfreq) a = -a;
    for (auto& b : t.xifreq) b = -b;
  }
  c.normalize();
  return c;
}

SymbolExpr SymbolExpr::operator-() const { return *this * Complex(-1.0); }

SymbolExpr& SymbolExpr::operator+=(const SymbolExpr& other) {
  if (other.n_ != n_) throw DimensionError("SymbolExpr: dimension mismatch in sum");
  terms_.insert(terms_.end(), other.terms_.begin(), other.terms_.end());
  tube_radius_ = std::min(tube_radius_, other.tube_radius_);
  normalize();
  return *this;
}

SymbolExpr& SymbolExpr::operator-=(const SymbolExpr& other) { return *this += -other; }

SymbolExpr& SymbolExpr::operator*=(Complex s) {
  for (auto& t : terms_) t.coeff *= s;
  normalize();
  return *this;
}

SymbolExpr operator*(const SymbolExpr& a, const SymbolExpr& b) {
  if (a.n_ != b.n_) throw DimensionError("SymbolExpr: dimension mismatch in product");
  std::vector<Term> out;
  out.reserve(a.terms_.size() * b.terms_.size());
  for (const auto& s : a.terms_) {
    for (const auto& t : b.terms_) {
      Term p = s;
      p.coeff *= t.coeff;
      for (int j = 0; j < a.n_; ++j) {
        p.xpow[j] += t.xpow[j];
        p.xipow[j] += t.xipow[j];
        p.xfreq[j] += t.xfreq[j];
        p.xifreq[j] += t.xifreq[j];
      }
      out.push_back(std::move(p));
    }
  }
  return SymbolExpr(a.n_, std::move(out), std::min(a.tube_radius_, b.tube_radius_));
}

// ---------------------------------------------------------------------------
// Free functions

namespace {

void require_same_dim(const SymbolExpr& sym, const PhasePoint& rho) {
  if (sym.dim() != rho.dim()) {
    std::ostringstream os;
    os << "symbol has n = " << sym.dim() << " but point has n = " << rho.dim();
    throw DimensionError(os.str());
  }
}

void check_tube(const SymbolExpr& sym, const PhasePoint& rho) {
  if (!sym.in_tube(rho)) {
    std::ostringstream os;
    os << "evaluation at |Im| = " << rho.max_abs_imag() << " outside tube radius " << sym.tube_radius();
    warn("tube", os.str());
  }
}

}  // namespace

Complex eval(const SymbolExpr& sym, const PhasePoint& rho) {
  require_same_dim(sym, rho);
  check_tube(sym, rho);
  return sym.evaluate({rho.x.data(), static_cast<std::size_t>(rho.x.size())},
                      {rho.xi.data(), static_cast<std::size_t>(rho.xi.size())});
}

SymbolGradient gradient(const SymbolExpr& sym, const PhasePoint& rho) {
  require_same_dim(sym, rho);
  check_tube(sym, rho);
  const int n = sym.dim();
  SymbolGradient g{Eigen::VectorXcd(n), Eigen::VectorXcd(n)};
  const std::span<const Complex> x{rho.x.data(), static_cast<std::size_t>(n)};
  const std::span<const Complex> xi{rho.xi.data(), static_cast<std::size_t>(n)};
  for (int j = 0; j < n; ++j) {
    g.dx(j) = sym.dx(j).evaluate(x, xi);
    g.dxi(j) = sym.dxi(j).evaluate(x, xi);
  }
  return g;
}

SymbolExpr poisson_bracket(const SymbolExpr& f, const SymbolExpr& g) {
  if (f.dim() != g.dim()) throw DimensionError("poisson_bracket: dimension mismatch");
  SymbolExpr out(f.dim(), std::min(f.tube_radius(), g.tube_radius()));
  for (int j = 0; j < f.dim(); ++j) {
    out += f.dxi(j) * g.dx(j);
    out -= f.dx(j) * g.dxi(j);
  }
  return out;
}

SymbolExpr real_bracket(const SymbolExpr& p) { return Complex(0.0, 0.5) * poisson_bracket(p, p.conj()); }

SymbolExpr real_part(const SymbolExpr& p) { return Complex(0.5) * (p + p.conj()); }

SymbolExpr imag_part(const SymbolExpr& p) { return Complex(0.0, -0.5) * (p - p.conj()); }

// ---------------------------------------------------------------------------
// Built-in symbols

namespace symbols {

SymbolExpr cho(double alpha, Complex shift, double tube_radius) {
  constexpr int n = 2;
  auto sq = [&](SymbolExpr s) { return s * s; };
  const SymbolExpr h1 = sq(SymbolExpr::x(n, 0)) + sq(SymbolExpr::xi(n, 0));
  const SymbolExpr h2 = sq(SymbolExpr::x(n, 1)) + sq(SymbolExpr::xi(n, 1));
  SymbolExpr p = 0.5 * h1 + Complex(0.0, 0.5 * alpha) * h2 - SymbolExpr::constant(n, shift);
  return p.with_tube_radius(tube_radius);
}

SymbolExpr torus_linear() { return SymbolExpr::xi(2, 0) + kI * SymbolExpr::xi(2, 1); }

SymbolExpr torus_coupled(double c) {
  return torus_linear() + Complex(c) * (SymbolExpr::xi(2, 0) * SymbolExpr::xi(2, 1));
}

SymbolExpr cho_normal_form(double alpha, Complex shift) {
  return SymbolExpr::xi(2, 0) + Complex(0.0, alpha) * SymbolExpr::xi(2, 1) - SymbolExpr::constant(2, shift);
}

SymbolExpr x1x2() { return SymbolExpr::x(2, 0) * SymbolExpr::x(2, 1); }

SymbolExpr sin_x1_cos_xi2(double tube_radius) {
  // sin a = (e^{ia} - e^{-ia}) / 2i, cos b = (e^{ib} + e^{-ib}) / 2
  const auto e = [&](double a, double b) { return SymbolExpr::exp_i({a, 0.0}, {0.0, b}, tube_radius); };
  SymbolExpr s = e(1, 1) + e(1, -1) - e(-1, 1) - e(-1, -1);
  return Complex(0.0, -0.25) * s;
}

}  // namespace symbols

}  // namespace bsweyl
