#pragma once

#include <Eigen/Dense>

namespace specel {

struct LegendreValue {
  double value = 0.0;
  double derivative = 0.0;
};

/// L_n(x) and L_n'(x) by the three-term recurrence.
LegendreValue legendre_eval(int n, double x);

/// Legendre-Gauss-Lobatto rule of degree N on [-1,1]: the N+1 roots of
/// (1-x^2) L_N'(x), the matching quadrature weights (exact up to degree 2N-1)
/// and the first/second derivative collocation matrices of the Lagrange basis.
///
/// diff1(k, j) = Psi_j'(x_k), diff2(k, j) = Psi_j''(x_k).
struct LglRule {
  int degree = 0;
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
  Eigen::MatrixXd diff1;
  Eigen::MatrixXd diff2;

  int size() const { return degree + 1; }
};

/// Throws std::invalid_argument for N < 2 and std::runtime_error if the
/// Newton iteration for an interior node fails to converge.
LglRule lgl_rule(int N);

/// Psi_0(x), ..., Psi_N(x) for the Lagrange basis on the rule's nodes.
Eigen::VectorXd lagrange_basis_all(const LglRule& rule, double x);

/// Rows: target points, columns: Lagrange basis functions of `rule`.
/// Multiplying nodal values by this matrix evaluates the interpolant.
Eigen::MatrixXd interpolation_matrix(const LglRule& rule, const Eigen::VectorXd& targets);

struct EdgeDerivatives {
  Eigen::VectorXd psiN_prime;  // Psi_N'(x_k)
  Eigen::VectorXd psi0_prime;  // Psi_0'(x_k)
};

EdgeDerivatives lagrange_edge_derivatives(const LglRule& rule);

}  // namespace specel
