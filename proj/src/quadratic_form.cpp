#include "bsweyl/quadratic_form.hpp"

namespace bsweyl {

Complex QuadraticForm::operator()(const Eigen::Ref<const Eigen::VectorXcd>& z) const {
  return (0.5 * z.transpose() * Q * z)(0) + (b.transpose() * z)(0) + c;
}

QuadraticForm QuadraticForm::from_symbol(const SymbolExpr& p) {
  if (!p.is_polynomial() || p.degree() > 2) {
    throw PreconditionError("quadratic form requires a polynomial symbol of degree <= 2");
  }
  const int n = p.dim();
  QuadraticForm q{Eigen::MatrixXcd::Zero(2 * n, 2 * n), Eigen::VectorXcd::Zero(2 * n), 0.0};
  for (const auto& t : p.terms()) {
    std::vector<int> idx;
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < t.xpow[j]; ++k) idx.push_back(j);
      for (int k = 0; k < t.xipow[j]; ++k) idx.push_back(n + j);
    }
    if (idx.empty()) {
      q.c += t.coeff;
    } else if (idx.size() == 1) {
      q.b(idx[0]) += t.coeff;
    } else if (idx[0] == idx[1]) {
      q.Q(idx[0], idx[0]) += 2.0 * t.coeff;
    } else {
      q.Q(idx[0], idx[1]) += t.coeff;
      q.Q(idx[1], idx[0]) += t.coeff;
    }
  }
  return q;
}

SymbolExpr QuadraticForm::to_symbol(double tube_radius) const {
  const int n = dim();
  auto coord = [n](int k) { return k < n ? SymbolExpr::x(n, k) : SymbolExpr::xi(n, k - n); };
  SymbolExpr s = SymbolExpr::constant(n, c);
  for (int i = 0; i < 2 * n; ++i) {
    if (b(i) != Complex(0.0)) s += b(i) * coord(i);
    if (Q(i, i) != Complex(0.0)) s += (0.5 * Q(i, i)) * (coord(i) * coord(i));
    for (int j = i + 1; j < 2 * n; ++j) {
      const Complex qij = 0.5 * (Q(i, j) + Q(j, i));
      if (qij != Complex(0.0)) s += qij * (coord(i) * coord(j));
    }
  }
  return s.with_tube_radius(tube_radius);
}

QuadraticForm QuadraticForm::compose_affine(const Eigen::MatrixXcd& M, const Eigen::VectorXcd& v) const {
  QuadraticForm r;
  r.Q = M.transpose() * Q * M;
  r.Q = 0.5 * (r.Q + r.Q.transpose()).eval();
  r.b = M.transpose() * (Q * v + b);
  r.c = (0.5 * v.transpose() * Q * v)(0) + (b.transpose() * v)(0) + c;
  return r;
}

Eigen::MatrixXcd symplectic_matrix(int n) {
  Eigen::MatrixXcd J = Eigen::MatrixXcd::Zero(2 * n, 2 * n);
  J.topRightCorner(n, n).setIdentity();
  J.bottomLeftCorner(n, n) = -Eigen::MatrixXcd::Identity(n, n);
  return J;
}

Eigen::MatrixXcd hamilton_matrix(const QuadraticForm& q) { return symplectic_matrix(q.dim()) * q.Q; }

}  // namespace bsweyl
