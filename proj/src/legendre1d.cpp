#include "specel/legendre1d.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace specel {

LegendreValue legendre_eval(int n, double x) {
  if (n < 0) throw std::invalid_argument("legendre_eval: negative degree");
  if (n == 0) return {1.0, 0.0};
  double p_prev = 1.0, p = x;
  double dp_prev = 0.0, dp = 1.0;
  for (int k = 1; k < n; ++k) {
    // (k+1) L_{k+1} = (2k+1) x L_k - k L_{k-1}, differentiated term by term.
    const double p_next = ((2 * k + 1) * x * p - k * p_prev) / (k + 1);
    const double dp_next = dp_prev + (2 * k + 1) * p;
    p_prev = p;
    p = p_next;
    dp_prev = dp;
    dp = dp_next;
  }
  return {p, dp};
}

namespace {

constexpr double kNewtonTol = 1e-14;
constexpr int kNewtonMaxIter = 100;

// Newton on q(x) = L_N'(x) for the interior nodes. q' follows from the
// Legendre ODE: (1-x^2) L'' = 2x L' - N(N+1) L.
double newton_interior_node(int N, double x0) {
  double x = x0;
  for (int it = 0; it < kNewtonMaxIter; ++it) {
    const auto [L, dL] = legendre_eval(N, x);
    const double d2L = (2.0 * x * dL - N * (N + 1.0) * L) / (1.0 - x * x);
    const double step = dL / d2L;
    x -= step;
    if (std::abs(step) <= kNewtonTol) return x;
  }
  throw std::runtime_error("lgl_rule: Newton iteration did not converge for N=" +
                           std::to_string(N));
}

}  // namespace

LglRule lgl_rule(int N) {
  if (N < 2) throw std::invalid_argument("lgl_rule: degree must be >= 2");
  LglRule rule;
  rule.degree = N;
  const int n = N + 1;
  rule.nodes.resize(n);
  rule.weights.resize(n);

  rule.nodes[0] = -1.0;
  rule.nodes[N] = 1.0;
  // Solve on the right half and mirror, which keeps the set exactly symmetric.
  for (int k = 1; k <= N / 2; ++k) {
    const double seed = std::cos(std::numbers::pi * k / N);
    const double x = newton_interior_node(N, seed);
    rule.nodes[N - k] = x;
    rule.nodes[k] = -x;
  }
  if (N % 2 == 0) rule.nodes[N / 2] = 0.0;

  const double scale = 2.0 / (N * (N + 1.0));
  Eigen::VectorXd LN(n);
  for (int k = 0; k < n; ++k) {
    LN[k] = legendre_eval(N, rule.nodes[k]).value;
    rule.weights[k] = scale / (LN[k] * LN[k]);
  }
  rule.weights[0] = rule.weights[N] = scale;

  // Barycentric form: Psi_j'(x_k) = L_N(x_k) / (L_N(x_j) (x_k - x_j)) for k != j.
  rule.diff1 = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    double rowsum = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == k) continue;
      const double v = LN[k] / (LN[j] * (rule.nodes[k] - rule.nodes[j]));
      rule.diff1(k, j) = v;
      rowsum += v;
    }
    rule.diff1(k, k) = -rowsum;
  }

  // Higher derivative recursion for barycentric Lagrange bases:
  // D2(k,j) = 2 (D1(k,j) D1(k,k) - D1(k,j) / (x_k - x_j)), k != j.
  rule.diff2 = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    double rowsum = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == k) continue;
      const double d = rule.diff1(k, j);
      const double v = 2.0 * (d * rule.diff1(k, k) - d / (rule.nodes[k] - rule.nodes[j]));
      rule.diff2(k, j) = v;
      rowsum += v;
    }
    rule.diff2(k, k) = -rowsum;
  }
  return rule;
}

Eigen::VectorXd lagrange_basis_all(const LglRule& rule, double x) {
  const int n = rule.size();
  Eigen::VectorXd psi = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < n; ++j) {
    if (x == rule.nodes[j]) {
      psi[j] = 1.0;
      return psi;
    }
  }
  // Second barycentric formula. For LGL nodes the barycentric weights are
  // proportional to 1/L_N(x_j), endpoints included.
  double denom = 0.0;
  for (int j = 0; j < n; ++j) {
    const double bw = 1.0 / legendre_eval(rule.degree, rule.nodes[j]).value;
    psi[j] = bw / (x - rule.nodes[j]);
    denom += psi[j];
  }
  return psi / denom;
}

Eigen::MatrixXd interpolation_matrix(const LglRule& rule, const Eigen::VectorXd& targets) {
  Eigen::MatrixXd out(targets.size(), rule.size());
  for (Eigen::Index r = 0; r < targets.size(); ++r) out.row(r) = lagrange_basis_all(rule, targets[r]).transpose();
  return out;
}

EdgeDerivatives lagrange_edge_derivatives(const LglRule& rule) {
  return {rule.diff1.col(rule.degree), rule.diff1.col(0)};
}

}  // namespace specel
