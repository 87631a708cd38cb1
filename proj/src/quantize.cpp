#include "bsweyl/quantize.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "bsweyl/quadratic_form.hpp"
#include "bsweyl/sampling.hpp"

namespace bsweyl {

std::string to_string(BasisKind k) { return k == BasisKind::kHermiteTensor ? "hermite-tensor" : "torus-fourier"; }

BasisSpec BasisSpec::hermite(int N, double h, int n) {
  BasisSpec b{BasisKind::kHermiteTensor, N, h, n};
  b.validate();
  return b;
}

BasisSpec BasisSpec::torus(int K, double h, int n) {
  BasisSpec b{BasisKind::kTorusFourier, K, h, n};
  b.validate();
  return b;
}

Eigen::Index BasisSpec::dimension() const {
  Eigen::Index d = 1;
  for (int j = 0; j < n; ++j) d *= per_axis();
  return d;
}

void BasisSpec::validate() const {
  if (size < 1) throw PreconditionError("basis size must be at least 1");
  if (!(h > 0.0) || h > 1.0) throw PreconditionError("h must lie in (0, 1]");
  if (n < 1) throw DimensionError("basis dimension must be positive");
}

namespace {

bool sorted_less(Complex a, Complex b) { return a.real() < b.real() || (a.real() == b.real() && a.imag() < b.imag()); }

void sort_points(std::vector<Complex>& z) { std::sort(z.begin(), z.end(), sorted_less); }

bool real_on_reals(const SymbolExpr& q) { return (q - q.conj()).is_zero(); }

// Single-axis operators in the truncated Hermite basis, normal ordered so every entry is exact.
struct Ladder {
  Eigen::MatrixXcd a, a2, ad2, n, id;
  explicit Ladder(int N) {
    a = Eigen::MatrixXcd::Zero(N, N);
    a2 = Eigen::MatrixXcd::Zero(N, N);
    n = Eigen::MatrixXcd::Zero(N, N);
    for (int k = 1; k < N; ++k) a(k - 1, k) = std::sqrt(static_cast<double>(k));
    for (int k = 2; k < N; ++k) a2(k - 2, k) = std::sqrt(static_cast<double>(k) * (k - 1));
    for (int k = 0; k < N; ++k) n(k, k) = k;
    ad2 = a2.adjoint();
    id = Eigen::MatrixXcd::Identity(N, N);
  }
};

// Adds coeff * (op_1 on axis j1) (op_2 on axis j2), identity elsewhere; first axis most significant.
void add_product(Eigen::MatrixXcd& A, int N, int n, Complex coeff, int j1, const Eigen::MatrixXcd& op1, int j2,
                 const Eigen::MatrixXcd& op2) {
  const Eigen::Index D = A.rows();
  std::vector<Eigen::Index> stride(n);
  stride[n - 1] = 1;
  for (int j = n - 2; j >= 0; --j) stride[j] = stride[j + 1] * N;
  // nonzero columns per row of each factor
  auto nz = [N](const Eigen::MatrixXcd& m) {
    std::vector<std::vector<std::pair<int, Complex>>> rows(N);
    for (int r = 0; r < N; ++r)
      for (int c = 0; c < N; ++c)
        if (m(r, c) != Complex(0.0)) rows[r].emplace_back(c, m(r, c));
    return rows;
  };
  const auto nz1 = nz(op1);
  const auto nz2 = j2 >= 0 ? nz(op2) : decltype(nz1){};
  for (Eigen::Index r = 0; r < D; ++r) {
    const int d1 = static_cast<int>((r / stride[j1]) % N);
    const Eigen::Index base1 = r - d1 * stride[j1];
    for (const auto& [c1, v1] : nz1[d1]) {
      const Eigen::Index col1 = base1 + c1 * stride[j1];
      if (j2 < 0) {
        A(r, col1) += coeff * v1;
        continue;
      }
      const int d2 = static_cast<int>((r / stride[j2]) % N);
      const Eigen::Index base2 = col1 - d2 * stride[j2];
      for (const auto& [c2, v2] : nz2[d2]) A(r, base2 + c2 * stride[j2]) += coeff * v1 * v2;
    }
  }
}

}  // namespace

OperatorMatrix quantize_quadratic(const SymbolExpr& q, const BasisSpec& basis) {
  basis.validate();
  if (basis.kind != BasisKind::kHermiteTensor) throw PreconditionError("quadratic symbols need a Hermite basis");
  if (q.dim() != basis.n) throw DimensionError("symbol and basis dimensions differ");
  const QuadraticForm qf = QuadraticForm::from_symbol(q);
  const int n = basis.n, N = basis.size;
  const Ladder L(N);
  const double s2 = 0.5 * basis.h, s = std::sqrt(s2);
  const Eigen::MatrixXcd X = s * (L.a + L.a.adjoint());
  const Eigen::MatrixXcd Xi = kI * s * (L.a.adjoint() - L.a);
  const Eigen::MatrixXcd XX = s2 * (L.a2 + L.ad2 + 2.0 * L.n + L.id);
  const Eigen::MatrixXcd XiXi = s2 * (-L.a2 - L.ad2 + 2.0 * L.n + L.id);
  const Eigen::MatrixXcd XXi = kI * s2 * (L.ad2 - L.a2);  // (X Xi + Xi X) / 2
  auto single = [&](int a) -> const Eigen::MatrixXcd& { return a < n ? X : Xi; };

  OperatorMatrix P;
  P.basis = basis;
  P.provenance = "quadratic symbol, " + to_string(basis.kind) + " N=" + std::to_string(N);
  P.A = Eigen::MatrixXcd::Zero(basis.dimension(), basis.dimension());
  P.A.diagonal().setConstant(qf.c);
  // 1/2 z^T Q z = sum_a 1/2 Q_aa z_a^2 + sum_{a<b} Q_ab z_a z_b
  for (int a = 0; a < 2 * n; ++a) {
    if (qf.b(a) != Complex(0.0)) add_product(P.A, N, n, qf.b(a), a % n, single(a), -1, L.id);
    for (int b = a; b < 2 * n; ++b) {
      const Complex c = a == b ? 0.5 * qf.Q(a, a) : qf.Q(a, b);
      if (c == Complex(0.0)) continue;
      const int ja = a % n, jb = b % n;
      if (ja != jb) {
        add_product(P.A, N, n, c, ja, single(a), jb, single(b));
      } else if (a == b) {
        add_product(P.A, N, n, c, ja, a < n ? XX : XiXi, -1, L.id);
      } else {
        add_product(P.A, N, n, c, ja, XXi, -1, L.id);
      }
    }
  }
  if (!P.A.allFinite()) throw std::runtime_error("non-finite matrix entries");
  if (real_on_reals(q)) {
    const double scale = std::max(1.0, P.A.cwiseAbs().maxCoeff());
    if ((P.A - P.A.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale)
      throw std::logic_error("quantization of a real symbol is not Hermitian");
  }
  return P;
}

OperatorMatrix quantize_torus(const SymbolExpr& ptilde, const BasisSpec& basis) {
  basis.validate();
  if (basis.kind != BasisKind::kTorusFourier) throw PreconditionError("torus symbols need a Fourier basis");
  if (ptilde.dim() != basis.n) throw DimensionError("symbol and basis dimensions differ");
  if (ptilde.depends_on_x()) throw PreconditionError("torus symbol must not depend on y");
  const int n = basis.n, M = basis.per_axis(), K = basis.size;
  const Eigen::Index D = basis.dimension();
  OperatorMatrix P;
  P.basis = basis;
  P.provenance = "torus symbol, " + to_string(basis.kind) + " K=" + std::to_string(K);
  P.A = Eigen::MatrixXcd::Zero(D, D);
  std::vector<double> z(2 * n, 0.0);
  for (Eigen::Index r = 0; r < D; ++r) {
    Eigen::Index rest = r;
    for (int j = n - 1; j >= 0; --j) {
      z[n + j] = basis.h * (static_cast<int>(rest % M) - K);
      rest /= M;
    }
    P.A(r, r) = ptilde.evaluate_real(z);
  }
  return P;
}

Eigen::MatrixXcd gaussian_perturbation(Eigen::Index dim, std::uint64_t seed) {
  auto rng = shard_rng(seed, 0);
  std::normal_distribution<double> g(0.0, std::sqrt(0.5));
  Eigen::MatrixXcd Q(dim, dim);
  for (Eigen::Index c = 0; c < dim; ++c)
    for (Eigen::Index r = 0; r < dim; ++r) {
      const double re = g(rng);
      Q(r, c) = Complex(re, g(rng));
    }
  return Q / std::sqrt(static_cast<double>(dim));
}

OperatorMatrix perturb(const OperatorMatrix& P, double delta, std::uint64_t seed) {
  if (!(delta >= 0.0)) throw PreconditionError("delta must be nonnegative");
  OperatorMatrix R = P;
  if (delta > 0.0) R.A += delta * gaussian_perturbation(P.A.rows(), seed);
  R.provenance += ", delta=" + std::to_string(delta) + " seed=" + std::to_string(seed);
  return R;
}

namespace {

std::vector<std::vector<Eigen::Index>> components(const Eigen::MatrixXcd& A) {
  const Eigen::Index D = A.rows();
  std::vector<Eigen::Index> parent(D);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](Eigen::Index i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (Eigen::Index c = 0; c < D; ++c)
    for (Eigen::Index r = 0; r < D; ++r)
      if (r != c && A(r, c) != Complex(0.0)) {
        const auto a = find(r), b = find(c);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
  std::vector<std::vector<Eigen::Index>> groups;
  std::vector<Eigen::Index> slot(D, -1);
  for (Eigen::Index i = 0; i < D; ++i) {
    const auto root = find(i);
    if (slot[root] < 0) {
      slot[root] = static_cast<Eigen::Index>(groups.size());
      groups.emplace_back();
    }
    groups[slot[root]].push_back(i);
  }
  return groups;
}

Eigen::VectorXcd dense_eigenvalues(Eigen::MatrixXcd B) {
  const auto n = static_cast<lapack_int>(B.rows());
  Eigen::VectorXcd w(n);
  const lapack_int info =
      LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', 'N', n, reinterpret_cast<lapack_complex_double*>(B.data()), n,
                    reinterpret_cast<lapack_complex_double*>(w.data()), nullptr, 1, nullptr, 1);
  if (info != 0) throw ConvergenceError("eigenvalue solver failed (zgeev info " + std::to_string(info) + ")");
  return w;
}

}  // namespace

SpectrumResult spectrum(const OperatorMatrix& P, const SpectrumOptions& opt) {
  const Eigen::Index D = P.A.rows();
  if (D != P.A.cols()) throw DimensionError("operator matrix must be square");
  if (D > opt.max_dimension) throw PreconditionError("matrix dimension exceeds the configured cap");
  if (!P.A.allFinite()) throw PreconditionError("matrix has non-finite entries");
  SpectrumResult s;
  s.basis = P.basis;
  s.eigenvalues.reserve(D);
  constexpr double eps = std::numeric_limits<double>::epsilon();

  std::vector<std::vector<Eigen::Index>> groups;
  if (opt.split_blocks) {
    groups = components(P.A);
  } else {
    groups.emplace_back(D);
    std::iota(groups[0].begin(), groups[0].end(), 0);
  }
  for (const auto& g : groups) {
    const auto m = static_cast<Eigen::Index>(g.size());
    if (m == 1) {
      s.eigenvalues.push_back(P.A(g[0], g[0]));
      continue;
    }
    Eigen::MatrixXcd B(m, m);
    for (Eigen::Index c = 0; c < m; ++c)
      for (Eigen::Index r = 0; r < m; ++r) B(r, c) = P.A(g[r], g[c]);
    s.residual_bound = std::max(s.residual_bound, m * eps * B.norm());
    const Eigen::VectorXcd w = dense_eigenvalues(std::move(B));
    s.eigenvalues.insert(s.eigenvalues.end(), w.data(), w.data() + w.size());
  }
  s.blocks = static_cast<int>(groups.size());
  // diagonal blocks: exact up to rounding of the entry itself
  s.residual_bound = std::max(s.residual_bound, eps * P.A.diagonal().cwiseAbs().maxCoeff());
  sort_points(s.eigenvalues);
  return s;
}

SpectrumResult spectrum(const OperatorMatrix& P, double delta, std::optional<std::uint64_t> seed,
                        const SpectrumOptions& opt) {
  SpectrumResult s = spectrum(P, opt);
  s.delta = delta;
  s.seed = seed;
  return s;
}

QuadraticNormalForm quadratic_normal_form(const SymbolExpr& q) {
  const QuadraticForm qf = QuadraticForm::from_symbol(q);
  const int n = qf.dim();

  // value sector of the quadratic part on the real unit sphere
  auto rng = shard_rng(0x5ec7, 0);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXcd rho(2 * n);
  double min_abs = std::numeric_limits<double>::infinity(), lo = 0.0, hi = 0.0;
  Complex ref{};
  for (int k = 0; k < 20000; ++k) {
    for (int a = 0; a < 2 * n; ++a) rho(a) = g(rng);
    rho /= rho.norm();
    const Complex v = 0.5 * (rho.transpose() * qf.Q * rho)(0);
    min_abs = std::min(min_abs, std::abs(v));
    if (k == 0) ref = v / std::abs(v);
    const double ang = std::arg(v / ref);
    lo = std::min(lo, ang);
    hi = std::max(hi, ang);
  }
  const double scale = qf.Q.cwiseAbs().maxCoeff();
  if (!(min_abs > 1e-10 * scale) || hi - lo >= kPi - 1e-9)
    throw PreconditionError("quadratic symbol is not elliptic");

  QuadraticNormalForm nf;
  nf.sector_bisector = std::arg(ref) + 0.5 * (lo + hi);
  const Complex dir = std::polar(1.0, -nf.sector_bisector);
  const Eigen::VectorXcd lambda = Eigen::ComplexEigenSolver<Eigen::MatrixXcd>(hamilton_matrix(qf), false).eigenvalues();
  std::vector<Complex> mu;
  for (Eigen::Index k = 0; k < lambda.size(); ++k) {
    const Complex m = lambda(k) / kI;
    if ((m * dir).real() > 0.0) mu.push_back(m);
  }
  if (static_cast<int>(mu.size()) != n) throw PreconditionError("Hamilton matrix eigenvalues do not split by the sector");
  for (Complex m : mu) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < lambda.size(); ++k) best = std::min(best, std::abs(lambda(k) / kI + m));
    if (best > 1e-8 * std::max(1.0, scale)) throw PreconditionError("Hamilton matrix eigenvalues are not paired");
  }
  std::sort(mu.begin(), mu.end(), sorted_less);
  nf.mu = Eigen::Map<Eigen::VectorXcd>(mu.data(), n);
  const Eigen::FullPivLU<Eigen::MatrixXcd> lu(qf.Q);
  if (!lu.isInvertible()) throw PreconditionError("quadratic part is singular");
  nf.offset = qf.c - 0.5 * (qf.b.transpose() * lu.solve(qf.b))(0);
  return nf;
}

std::vector<Complex> quadratic_exact_spectrum(const SymbolExpr& q, double h, int kmax) {
  if (kmax < 1) throw PreconditionError("lattice box must be nonempty");
  const QuadraticNormalForm nf = quadratic_normal_form(q);
  const int n = static_cast<int>(nf.mu.size());
  std::vector<Complex> out;
  std::vector<int> k(n, 0);
  while (true) {
    Complex z = nf.offset;
    for (int j = 0; j < n; ++j) z += h * (k[j] + 0.5) * nf.mu(j);
    out.push_back(z);
    int j = n - 1;
    while (j >= 0 && ++k[j] == kmax) k[j--] = 0;
    if (j < 0) break;
  }
  sort_points(out);
  return out;
}

SafeRegion hermite_safe_region(const SymbolExpr& q, const BasisSpec& basis, double factor) {
  const QuadraticNormalForm nf = quadratic_normal_form(q);
  // integer totals below factor * N; the cut sits half way between lattice levels
  const double limit = std::ceil(factor * basis.size) - 0.5, h = basis.h;
  SafeRegion s;
  s.description = "total quantum number below " + std::to_string(factor * basis.size);
  if (nf.mu.size() == 1) {
    const Complex mu = nf.mu(0), c = nf.offset;
    s.contains = [=](Complex z) { return ((z - c) / (h * mu)).real() - 0.5 < limit; };
  } else if (nf.mu.size() == 2) {
    Eigen::Matrix2d M;
    M << nf.mu(0).real(), nf.mu(1).real(), nf.mu(0).imag(), nf.mu(1).imag();
    const Eigen::Matrix2d Minv = M.inverse();
    const Complex c = nf.offset;
    s.contains = [=](Complex z) {
      const Complex w = (z - c) / h;
      const Eigen::Vector2d k = Minv * Eigen::Vector2d(w.real(), w.imag()) - Eigen::Vector2d(0.5, 0.5);
      return k.sum() < limit;
    };
  } else {
    throw DimensionError("safe region is implemented for n <= 2");
  }
  return s;
}

SafeRegion torus_safe_region(const SymbolExpr& ptilde, const BasisSpec& basis, double factor) {
  const double bound = factor * basis.h * basis.size;
  SafeRegion s;
  s.description = "eta preimage within |eta| <= " + std::to_string(bound);
  s.contains = [=](Complex z) {
    try {
      return invert_torus_symbol(ptilde, z).cwiseAbs().maxCoeff() <= bound;
    } catch (const ConvergenceError&) {
      return false;
    }
  };
  return s;
}

bool window_is_safe(const ComplexWindow& W, const SafeRegion& safe, int per_edge) {
  for (int k = 0; k <= per_edge; ++k) {
    const double f = static_cast<double>(k) / per_edge;
    const double re = W.re_lo() + f * 2.0 * W.half_re, im = W.im_lo() + f * 2.0 * W.half_im;
    for (Complex z : {Complex(re, W.im_lo()), Complex(re, W.im_hi()), Complex(W.re_lo(), im), Complex(W.re_hi(), im)})
      if (!safe.contains(z)) return false;
  }
  return true;
}

std::vector<Complex> restrict_to(const std::vector<Complex>& z, const SafeRegion& safe) {
  std::vector<Complex> out;
  std::copy_if(z.begin(), z.end(), std::back_inserter(out), safe.contains);
  return out;
}

std::vector<Complex> restrict_to(const std::vector<Complex>& z, const ComplexWindow& W) {
  std::vector<Complex> out;
  std::copy_if(z.begin(), z.end(), std::back_inserter(out), [&](Complex v) { return W.contains(v); });
  return out;
}

double hausdorff_distance(const std::vector<Complex>& a, const std::vector<Complex>& b) {
  if (a.empty() && b.empty()) return 0.0;
  if (a.empty() || b.empty()) return std::numeric_limits<double>::infinity();
  auto one_way = [](const std::vector<Complex>& u, const std::vector<Complex>& v) {
    double worst = 0.0;
    for (Complex x : u) {
      double best = std::numeric_limits<double>::infinity();
      for (Complex y : v) best = std::min(best, std::abs(x - y));
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(one_way(a, b), one_way(b, a));
}

Eigen::Vector2d BSLattice::theta_at_h() const {
  Eigen::Vector2d t = Eigen::Vector2d::Zero();
  double hp = 1.0;
  for (const auto& th : theta) {
    t += hp * th;
    hp *= h;
  }
  return t;
}

BSPrediction bs_predict(const BSLattice& l, double tolerance, int max_iterations) {
  if (!(l.h > 0.0)) throw PreconditionError("h must be positive");
  const ComplexWindow& W = l.window;
  const double scale = kTwoPi * l.h;
  const Eigen::Vector2d theta = l.theta_at_h();

  // bounding box of I(window) from a sampled grid, plus the samples as Newton seeds
  const int m = 33;
  std::vector<std::pair<Complex, Eigen::Vector2d>> seeds;
  Eigen::Vector2d lo = Eigen::Vector2d::Constant(std::numeric_limits<double>::infinity()), hi = -lo;
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) {
      const Complex z(W.re_lo() + 2.0 * W.half_re * i / (m - 1), W.im_lo() + 2.0 * W.half_im * j / (m - 1));
      try {
        const Eigen::Vector2d I = l.actions(z).I;
        lo = lo.cwiseMin(I);
        hi = hi.cwiseMax(I);
        seeds.emplace_back(z, I);
      } catch (const ConvergenceError&) {
      }
    }
  BSPrediction out;
  if (seeds.empty()) return out;
  const Eigen::Vector2i k_lo = (lo / scale + theta).array().ceil().cast<int>();
  const Eigen::Vector2i k_hi = (hi / scale + theta).array().floor().cast<int>();

  for (int k1 = k_lo(0); k1 <= k_hi(0); ++k1)
    for (int k2 = k_lo(1); k2 <= k_hi(1); ++k2) {
      const Eigen::Vector2i k(k1, k2);
      const Eigen::Vector2d target = scale * (k.cast<double>() - theta);
      Complex z = std::min_element(seeds.begin(), seeds.end(), [&](const auto& a, const auto& b) {
                    return (a.second - target).squaredNorm() < (b.second - target).squaredNorm();
                  })->first;
      bool converged = false;
      try {
        for (int it = 0; it <= max_iterations; ++it) {
          const ActionValue v = l.actions(z);
          const Eigen::Vector2d r = v.I - target;
          if (r.norm() / scale <= tolerance) {
            converged = true;
            break;
          }
          const Eigen::Vector2d step = v.dI.partialPivLu().solve(r);
          if (!step.allFinite()) break;
          z -= Complex(step(0), step(1));
        }
      } catch (const ConvergenceError&) {
      }
      if (!converged) {
        out.unresolved.push_back(k);
        continue;
      }
      if (z.real() >= W.re_lo() && z.real() <= W.re_hi() && z.imag() >= W.im_lo() && z.imag() <= W.im_hi()) {
        out.points.push_back(z);
        out.indices.push_back(k);
      }
    }
  // sort points with their indices
  std::vector<std::size_t> order(out.points.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return sorted_less(out.points[a], out.points[b]); });
  BSPrediction sorted;
  sorted.unresolved = std::move(out.unresolved);
  for (auto i : order) {
    sorted.points.push_back(out.points[i]);
    sorted.indices.push_back(out.indices[i]);
  }
  return sorted;
}

std::int64_t count_in(const std::vector<Complex>& z, const ComplexWindow& W) {
  return std::count_if(z.begin(), z.end(), [&](Complex v) { return W.contains(v); });
}

ComparisonReport count_and_compare(const SpectrumResult& s, const ComplexWindow& W, double omega_integral,
                                   const VolumeEstimate& preimage, const SafeRegion* safe) {
  ComparisonReport r;
  r.window = W;
  r.count = count_in(s.eigenvalues, W);
  const double h = s.basis.h;
  r.omega_prediction = omega_integral / std::pow(kTwoPi * h, 2);
  const double vol_scale = std::pow(kTwoPi * h, s.basis.n);
  r.weyl_prediction = preimage.value / vol_scale;
  r.weyl_prediction_error = preimage.stderr_ / vol_scale;
  auto dev = [&](double pred) { return pred != 0.0 ? (r.count - pred) / pred : 0.0; };
  r.omega_deviation = dev(r.omega_prediction);
  r.weyl_deviation = dev(r.weyl_prediction);
  r.unsafe = safe != nullptr && !window_is_safe(W, *safe);
  return r;
}

}  // namespace bsweyl
