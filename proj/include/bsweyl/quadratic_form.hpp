#pragma once

#include "bsweyl/symbol.hpp"

namespace bsweyl {

/// p(z) = 1/2 z^T Q z + b^T z + c with z = (x, xi) in C^{2n}, Q complex symmetric.
struct QuadraticForm {
  Eigen::MatrixXcd Q;
  Eigen::VectorXcd b;
  Complex c{};

  int dim() const { return static_cast<int>(b.size()) / 2; }
  Complex operator()(const Eigen::Ref<const Eigen::VectorXcd>& z) const;

  /// Extracts the form; throws PreconditionError unless p is a polynomial of degree <= 2.
  static QuadraticForm from_symbol(const SymbolExpr& p);
  SymbolExpr to_symbol(double tube_radius = SymbolExpr::kDefaultTubeRadius) const;

  /// p(M z + v) as a quadratic form.
  QuadraticForm compose_affine(const Eigen::MatrixXcd& M, const Eigen::VectorXcd& v) const;
};

/// Standard symplectic matrix J = [[0, I], [-I, 0]]: Hamilton's equations read z' = J grad q.
Eigen::MatrixXcd symplectic_matrix(int n);

/// Hamilton matrix J Q of the quadratic part.
Eigen::MatrixXcd hamilton_matrix(const QuadraticForm& q);

}  // namespace bsweyl
