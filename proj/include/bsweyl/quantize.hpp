#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bsweyl/density.hpp"
#include "bsweyl/symbol.hpp"

namespace bsweyl {

enum class BasisKind { kHermiteTensor, kTorusFourier };
std::string to_string(BasisKind k);

/// Hermite: N functions per axis. Torus: Fourier modes -K..K per axis.
struct BasisSpec {
  BasisKind kind = BasisKind::kHermiteTensor;
  int size = 40;  // N or K
  double h = 0.05;
  int n = 2;

  static BasisSpec hermite(int N, double h, int n = 2);
  static BasisSpec torus(int K, double h, int n = 2);

  int per_axis() const { return kind == BasisKind::kHermiteTensor ? size : 2 * size + 1; }
  Eigen::Index dimension() const;
  void validate() const;
};

struct OperatorMatrix {
  Eigen::MatrixXcd A;
  BasisSpec basis;
  std::string provenance;
};

struct SpectrumResult {
  std::vector<Complex> eigenvalues;  // sorted by (Re, Im)
  double residual_bound = 0.0;
  double delta = 0.0;
  std::optional<std::uint64_t> seed;
  BasisSpec basis;
  int blocks = 0;  // independent diagonal blocks solved
};

/// Weyl quantization of a polynomial of degree <= 2 in the Hermite tensor basis,
/// x_j -> sqrt(h/2)(a + a*), xi_j -> i sqrt(h/2)(a* - a), symmetric ordering within an axis.
OperatorMatrix quantize_quadratic(const SymbolExpr& q, const BasisSpec& basis);

/// Diagonal matrix ptilde(h k), k in [-K, K]^n, first axis most significant.
OperatorMatrix quantize_torus(const SymbolExpr& ptilde, const BasisSpec& basis);

/// Complex Gaussian matrix (E|q|^2 = 1) scaled by 1/sqrt(dim); deterministic in the seed.
Eigen::MatrixXcd gaussian_perturbation(Eigen::Index dim, std::uint64_t seed);

/// P + delta Q.
OperatorMatrix perturb(const OperatorMatrix& P, double delta, std::uint64_t seed);

struct SpectrumOptions {
  Eigen::Index max_dimension = 4096;
  bool split_blocks = true;  // solve connected components of the sparsity graph separately
};

/// All eigenvalues by dense non-Hermitian QR (LAPACK zgeev). Throws ConvergenceError on solver failure.
SpectrumResult spectrum(const OperatorMatrix& P, const SpectrumOptions& opt = {});
SpectrumResult spectrum(const OperatorMatrix& P, double delta, std::optional<std::uint64_t> seed,
                        const SpectrumOptions& opt = {});

/// Eigenvalue data of an elliptic quadratic form: spectrum = offset + h sum_j (k_j + 1/2) mu_j.
struct QuadraticNormalForm {
  Eigen::VectorXcd mu;
  Complex offset{};
  double sector_bisector = 0.0;  // argument of the bisector of the value sector
};

/// Throws PreconditionError when q is not an elliptic quadratic form.
QuadraticNormalForm quadratic_normal_form(const SymbolExpr& q);

/// Exact spectrum for k_j in [0, kmax), sorted by (Re, Im).
std::vector<Complex> quadratic_exact_spectrum(const SymbolExpr& q, double h, int kmax);

// ---------------------------------------------------------------------------
// Truncation-safe regions

struct SafeRegion {
  std::function<bool(Complex)> contains;
  std::string description;
};

/// Points whose real quantum numbers (k_1, ..., k_n) have total below factor * N.
SafeRegion hermite_safe_region(const SymbolExpr& q, const BasisSpec& basis, double factor = 0.6);

/// Points whose eta-preimage lies in the mode box |eta|_inf <= factor * h * K.
SafeRegion torus_safe_region(const SymbolExpr& ptilde, const BasisSpec& basis, double factor = 1.0);

/// True when the window's boundary (sampled) lies in the safe region.
bool window_is_safe(const ComplexWindow& W, const SafeRegion& safe, int per_edge = 64);

std::vector<Complex> restrict_to(const std::vector<Complex>& z, const SafeRegion& safe);
std::vector<Complex> restrict_to(const std::vector<Complex>& z, const ComplexWindow& W);

/// Largest distance from a point of one set to the other set.
double hausdorff_distance(const std::vector<Complex>& a, const std::vector<Complex>& b);

// ---------------------------------------------------------------------------
// Bohr-Sommerfeld lattice

struct BSLattice {
  ActionMap actions;
  std::vector<Eigen::Vector2d> theta{Eigen::Vector2d(0.5, 0.5)};  // theta_0, theta_1, ...
  double h = 0.05;
  ComplexWindow window;

  /// theta(h) = sum_j theta_j h^j
  Eigen::Vector2d theta_at_h() const;
};

struct BSPrediction {
  std::vector<Complex> points;  // sorted by (Re, Im)
  std::vector<Eigen::Vector2i> indices;
  std::vector<Eigen::Vector2i> unresolved;
};

/// Solves I(z) = 2 pi h (k - theta) by Newton (tolerance 1e-10 on I / (2 pi h)) for every k whose
/// target meets I(window); keeps solutions inside the window.
BSPrediction bs_predict(const BSLattice& lattice, double tolerance = 1e-10, int max_iterations = 50);

// ---------------------------------------------------------------------------
// Counting

struct ComparisonReport {
  ComplexWindow window;
  std::int64_t count = 0;
  double omega_prediction = 0.0;  // int_W omega / (2 pi h)^2
  double weyl_prediction = 0.0;   // vol(p^{-1}(W)) / (2 pi h)^n
  double weyl_prediction_error = 0.0;
  double omega_deviation = 0.0;  // (count - omega_prediction) / omega_prediction
  double weyl_deviation = 0.0;
  bool unsafe = false;  // W leaves the truncation-safe region
};

std::int64_t count_in(const std::vector<Complex>& z, const ComplexWindow& W);

ComparisonReport count_and_compare(const SpectrumResult& s, const ComplexWindow& W, double omega_integral,
                                   const VolumeEstimate& preimage, const SafeRegion* safe = nullptr);

}  // namespace bsweyl
