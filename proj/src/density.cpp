#include "bsweyl/density.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <thread>

#include "bsweyl/diagnostics.hpp"
#include "bsweyl/sampling.hpp"

namespace bsweyl {

ComplexWindow::ComplexWindow(Complex c, double hr, double hi, int nr, int ni)
    : center(c), half_re(hr), half_im(hi), n_re(nr), n_im(ni) {
  if (!(hr > 0.0) || !(hi > 0.0)) throw PreconditionError("window half-widths must be positive");
  if (nr < 2 || ni < 2) throw PreconditionError("window resolution must be at least 2 per axis");
}

ComplexWindow ComplexWindow::from_bounds(double re_lo, double re_hi, double im_lo, double im_hi, int nr, int ni) {
  return {Complex(0.5 * (re_lo + re_hi), 0.5 * (im_lo + im_hi)), 0.5 * (re_hi - re_lo), 0.5 * (im_hi - im_lo), nr,
          ni};
}

Complex ComplexWindow::cell_center(int i, int j) const {
  const double dr = 2.0 * half_re / n_re, di = 2.0 * half_im / n_im;
  return {re_lo() + (i + 0.5) * dr, im_lo() + (j + 0.5) * di};
}

bool ComplexWindow::contains(Complex z) const {
  return z.real() >= re_lo() && z.real() < re_hi() && z.imag() >= im_lo() && z.imag() < im_hi();
}

int ComplexWindow::cell_of(Complex z) const {
  if (!contains(z)) return -1;
  const int i = std::min(n_re - 1, static_cast<int>((z.real() - re_lo()) / (2.0 * half_re) * n_re));
  const int j = std::min(n_im - 1, static_cast<int>((z.imag() - im_lo()) / (2.0 * half_im) * n_im));
  return i + n_re * j;
}

double ComplexWindow::distance_to(Complex z) const {
  const double dr = std::max({re_lo() - z.real(), 0.0, z.real() - re_hi()});
  const double di = std::max({im_lo() - z.imag(), 0.0, z.imag() - im_hi()});
  return std::hypot(dr, di);
}

std::string to_string(DensityMethod m) {
  switch (m) {
    case DensityMethod::kMonteCarlo: return "monte-carlo";
    case DensityMethod::kTensorQuadrature: return "tensor-quadrature";
    case DensityMethod::kJacobianFormula: return "jacobian-formula";
  }
  return "unknown";
}

double DensityGrid::total_mass() const {
  double s = 0.0;
  for (Eigen::Index k = 0; k < values.size(); ++k)
    if (std::isfinite(values(k))) s += values(k);
  return s * window.cell_area();
}

RealEvaluator real_evaluator(const SymbolExpr& p) {
  return [p](std::span<const double> z) { return p.evaluate_real(z); };
}

RealEvaluator real_evaluator(const DeformedSymbol& p) {
  if (p.closed_form()) return real_evaluator(*p.closed_form());
  return [p](std::span<const double> z) {
    const auto n = z.size() / 2;
    return deformed_eval(p, PhasePoint::real(z.subspan(0, n), z.subspan(n)));
  };
}

namespace {

using Counts = std::vector<std::int64_t>;

int resolve_threads(int requested, int shards) {
  int t = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
  return std::clamp(t, 1, std::max(1, shards));
}

// Per-shard cell counts; shard s gets a fixed slice of the sample budget.
std::vector<Counts> sample_counts(const RealEvaluator& p, const std::vector<double>& half_widths,
                                  const ComplexWindow& win, const SamplingOptions& opt) {
  const int shards = std::max(1, opt.shards);
  const std::size_t d = half_widths.size();
  const std::size_t cells = static_cast<std::size_t>(win.n_re) * win.n_im;
  std::vector<Counts> counts(shards, Counts(cells, 0));

  std::vector<double> shift;
  if (opt.quasi_random) {
    auto rng = shard_rng(opt.seed, std::numeric_limits<std::uint64_t>::max());
    std::uniform_real_distribution<double> u(0.0, 1.0);
    shift.resize(d);
    for (auto& s : shift) s = u(rng);
  }

  const std::int64_t base = opt.samples / shards, rem = opt.samples % shards;
  auto run_shard = [&](int s) {
    const std::int64_t begin = s * base + std::min<std::int64_t>(s, rem);
    const std::int64_t count = base + (s < rem ? 1 : 0);
    auto rng = shard_rng(opt.seed, static_cast<std::uint64_t>(s));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> unit(d), z(d);
    Counts& c = counts[s];
    for (std::int64_t k = 0; k < count; ++k) {
      if (opt.quasi_random) {
        halton_point(static_cast<std::uint64_t>(begin + k), shift, unit);
      } else {
        for (auto& v : unit) v = u(rng);
      }
      for (std::size_t a = 0; a < d; ++a) z[a] = (2.0 * unit[a] - 1.0) * half_widths[a];
      const int cell = win.cell_of(p(z));
      if (cell >= 0) ++c[cell];
    }
  };

  const int threads = resolve_threads(opt.threads, shards);
  if (threads == 1) {
    for (int s = 0; s < shards; ++s) run_shard(s);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w)
      pool.emplace_back([&, w] {
        for (int s = w; s < shards; s += threads) run_shard(s);
      });
    for (auto& th : pool) th.join();
  }
  return counts;
}

double box_volume(const std::vector<double>& half_widths) {
  double v = 1.0;
  for (double h : half_widths) v *= 2.0 * h;
  return v;
}

}  // namespace

DensityGrid pushforward_density(const RealEvaluator& p, const std::vector<double>& half_widths, double prefactor,
                                const ComplexWindow& win, const SamplingOptions& opt) {
  if (opt.samples <= 0) throw PreconditionError("sample count must be positive");
  if (half_widths.empty()) throw DimensionError("empty integration box");
  const auto counts = sample_counts(p, half_widths, win, opt);

  DensityGrid g;
  g.window = win;
  g.method = opt.quasi_random ? DensityMethod::kTensorQuadrature : DensityMethod::kMonteCarlo;
  g.samples = opt.samples;
  g.seed = opt.seed;
  g.box_radius = *std::max_element(half_widths.begin(), half_widths.end());
  g.values.setZero(win.n_re, win.n_im);
  g.stderrs.setZero(win.n_re, win.n_im);

  const double S = static_cast<double>(opt.samples);
  const double scale = box_volume(half_widths) * prefactor / win.cell_area();
  for (int j = 0; j < win.n_im; ++j)
    for (int i = 0; i < win.n_re; ++i) {
      std::int64_t c = 0;
      for (const auto& sc : counts) c += sc[i + win.n_re * j];
      g.hits += c;
      const double f = c / S;
      g.values(i, j) = f * scale;
      g.stderrs(i, j) = std::sqrt(f * (1.0 - f) / S) * scale;
    }
  if (g.hits == 0) {
    g.empty = true;
    warn("empty-grid", "no samples landed in the window");
  }
  return g;
}

bool box_boundary_clear(const RealEvaluator& p, const std::vector<double>& half_widths, const ComplexWindow& win,
                        double margin_fraction, int per_axis) {
  const std::size_t d = half_widths.size();
  const double margin = margin_fraction * win.diameter();
  std::vector<double> z(d);
  auto ok = [&] { return win.distance_to(p(z)) >= margin; };

  // faces: one coordinate pinned to +-h, the rest on a grid (random for d > 4)
  const bool grid = d <= 4;
  std::int64_t per_face = 1;
  if (grid)
    for (std::size_t a = 1; a < d; ++a) per_face *= per_axis;
  else
    per_face = 4096;
  auto rng = shard_rng(0xb0c5, 0);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t face = 0; face < d; ++face)
    for (double sign : {-1.0, 1.0})
      for (std::int64_t k = 0; k < per_face; ++k) {
        std::int64_t rest = k;
        for (std::size_t a = 0; a < d; ++a) {
          if (a == face) {
            z[a] = sign * half_widths[a];
          } else if (grid) {
            const int idx = static_cast<int>(rest % per_axis);
            rest /= per_axis;
            z[a] = half_widths[a] * (per_axis == 1 ? 0.0 : -1.0 + 2.0 * idx / (per_axis - 1));
          } else {
            z[a] = half_widths[a] * u(rng);
          }
        }
        if (!ok()) return false;
      }
  return true;
}

namespace {

DensityGrid weyl_density_impl(const RealEvaluator& ev, int n, const ComplexWindow& win, double box_radius,
                              const SamplingOptions& opt) {
  if (!(box_radius > 0.0)) throw PreconditionError("box radius must be positive");
  const std::vector<double> hw(2 * n, box_radius);
  const bool clear = box_boundary_clear(ev, hw, win);
  if (!clear) warn("box-margin", "p on the box boundary comes within 20% of the window diameter");
  DensityGrid g = pushforward_density(ev, hw, 1.0, win, opt);
  g.box_margin_ok = clear;
  return g;
}

}  // namespace

DensityGrid weyl_density(const SymbolExpr& p, const ComplexWindow& win, double box_radius,
                         const SamplingOptions& opt) {
  return weyl_density_impl(real_evaluator(p), p.dim(), win, box_radius, opt);
}

DensityGrid weyl_density(const DeformedSymbol& p, const ComplexWindow& win, double box_radius,
                         const SamplingOptions& opt) {
  return weyl_density_impl(real_evaluator(p), p.dim(), win, box_radius, opt);
}

namespace {

RealEvaluator torus_evaluator(const SymbolExpr& ptilde) {
  if (ptilde.depends_on_x()) throw PreconditionError("torus symbol must depend on eta only");
  const int n = ptilde.dim();
  return [ptilde, n](std::span<const double> eta) {
    std::vector<double> z(2 * n, 0.0);
    std::copy(eta.begin(), eta.end(), z.begin() + n);
    return ptilde.evaluate_real(z);
  };
}

}  // namespace

DensityGrid weyl_density_torus(const SymbolExpr& ptilde, const ComplexWindow& win, double eta_box,
                               const SamplingOptions& opt) {
  if (!(eta_box > 0.0)) throw PreconditionError("eta box must be positive");
  const RealEvaluator ev = torus_evaluator(ptilde);
  const std::vector<double> hw(ptilde.dim(), eta_box);
  const bool clear = box_boundary_clear(ev, hw, win);
  if (!clear) warn("box-margin", "p on the eta-box boundary comes within 20% of the window diameter");
  DensityGrid g = pushforward_density(ev, hw, std::pow(kTwoPi, ptilde.dim()), win, opt);
  g.box_margin_ok = clear;
  return g;
}

VolumeEstimate preimage_volume(const RealEvaluator& p, int n, const ComplexWindow& W, double box_radius,
                               const SamplingOptions& opt) {
  if (opt.samples <= 0) throw PreconditionError("sample count must be positive");
  const std::vector<double> hw(2 * n, box_radius);
  const auto counts = sample_counts(p, hw, W, opt);
  std::int64_t hits = 0;
  for (const auto& c : counts)
    for (auto v : c) hits += v;
  const double S = static_cast<double>(opt.samples), f = hits / S, vol = box_volume(hw);
  return {f * vol, std::sqrt(f * (1.0 - f) / S) * vol};
}

VolumeEstimate preimage_volume(const SymbolExpr& p, const ComplexWindow& W, double box_radius,
                               const SamplingOptions& opt) {
  return preimage_volume(real_evaluator(p), p.dim(), W, box_radius, opt);
}

// ---------------------------------------------------------------------------

ActionMap::ActionMap(Evaluator f, Eigen::Vector2d reference) : f_(std::move(f)), reference_(std::move(reference)) {}

namespace {

struct TorusInverter {
  SymbolExpr p, d1, d2;

  explicit TorusInverter(const SymbolExpr& ptilde) : p(ptilde), d1(ptilde.dxi(0)), d2(ptilde.dxi(1)) {
    if (ptilde.dim() != 2) throw DimensionError("action map requires n = 2");
    if (ptilde.depends_on_x()) throw PreconditionError("torus symbol must depend on eta only");
  }

  // (Re p, Im p) and its real Jacobian in eta
  void eval(const Eigen::Vector2d& eta, Complex& value, Eigen::Matrix2d& jac) const {
    const std::array<double, 4> z{0.0, 0.0, eta(0), eta(1)};
    value = p.evaluate_real(z);
    const Complex a = d1.evaluate_real(z), b = d2.evaluate_real(z);
    jac << a.real(), b.real(), a.imag(), b.imag();
  }

  Eigen::Vector2d invert(Complex target, const NewtonOptions& opt) const {
    Complex v;
    Eigen::Matrix2d J;
    Eigen::Vector2d eta = Eigen::Vector2d::Zero();
    const double scale = std::max(1.0, std::abs(target));
    for (int it = 0; it <= opt.max_iterations; ++it) {
      eval(eta, v, J);
      const Complex r = v - target;
      if (std::abs(r) <= opt.tolerance * scale) return eta;
      const double det = J.determinant();
      if (!std::isfinite(det) || std::abs(det) < 1e-300) throw ConvergenceError("singular map: Jacobian vanishes");
      eta -= J.inverse() * Eigen::Vector2d(r.real(), r.imag());
      if (!eta.allFinite()) throw ConvergenceError("singular map: Newton iterate diverged");
    }
    throw ConvergenceError("singular map: Newton did not converge");
  }
};

}  // namespace

Eigen::Vector2d invert_torus_symbol(const SymbolExpr& ptilde, Complex z, const NewtonOptions& opt) {
  return TorusInverter(ptilde).invert(z, opt);
}

ActionMap action_map_integrable(const SymbolExpr& ptilde, Eigen::Vector2d I0, const NewtonOptions& opt) {
  auto inv = std::make_shared<const TorusInverter>(ptilde);
  return ActionMap(
      [inv, I0, opt](Complex z) {
        const Eigen::Vector2d eta = inv->invert(z, opt);
        Complex v;
        Eigen::Matrix2d J;
        inv->eval(eta, v, J);
        return ActionValue{kTwoPi * eta + I0, kTwoPi * J.inverse()};
      },
      I0);
}

DensityGrid omega_density(const ActionMap& am, const ComplexWindow& win) {
  DensityGrid g;
  g.window = win;
  g.method = DensityMethod::kJacobianFormula;
  g.values.setZero(win.n_re, win.n_im);
  g.stderrs.setZero(win.n_re, win.n_im);
  for (int j = 0; j < win.n_im; ++j)
    for (int i = 0; i < win.n_re; ++i) {
      double w = std::numeric_limits<double>::quiet_NaN();
      try {
        const double det = std::abs(am(win.cell_center(i, j)).dI.determinant());
        if (std::isfinite(det) && det > 0.0) w = det;
      } catch (const ConvergenceError&) {
      }
      if (std::isnan(w)) ++g.invalid_cells;
      g.values(i, j) = w;
    }
  if (g.invalid_cells > 0.01 * win.n_re * win.n_im)
    throw ConvergenceError("singular action map on " + std::to_string(g.invalid_cells) + " cells");
  return g;
}

double integrate_omega(const ActionMap& am, const ComplexWindow& W) {
  const DensityGrid g = omega_density(am, W);
  return g.total_mass();
}

void audit_action_map(AuditReport& report, const ActionMap& am, const ComplexWindow& win, double max_condition) {
  double worst = 0.0;
  int sign = 0;
  bool ok = true;
  for (int j = 0; j < win.n_im && ok; ++j)
    for (int i = 0; i < win.n_re && ok; ++i) {
      try {
        const Eigen::Matrix2d dI = am(win.cell_center(i, j)).dI;
        const Eigen::Vector2d s = Eigen::JacobiSVD<Eigen::Matrix2d>(dI).singularValues();
        const double cond = s(1) > 0.0 ? s(0) / s(1) : std::numeric_limits<double>::infinity();
        worst = std::max(worst, cond);
        const int sg = dI.determinant() > 0.0 ? 1 : -1;
        if (sign == 0) sign = sg;
        if (sg != sign || !std::isfinite(cond)) ok = false;
      } catch (const ConvergenceError&) {
        ok = false;
        worst = std::numeric_limits<double>::infinity();
      }
    }
  report.action_jacobian_condition = worst;
  report.action_diffeomorphism = ok && worst <= max_condition ? Check::kPass : Check::kFail;
}

}  // namespace bsweyl
