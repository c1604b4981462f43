#pragma once
// Test-only reference computations, deliberately independent of the library's
// recurrences, differentiation matrices and quadrature rules.

#include <cmath>
#include <functional>
#include <vector>

namespace specel::oracle {

/// Composite Simpson rule with `intervals` (even) subintervals.
inline double simpson(const std::function<double(double)>& f, double a, double b, int intervals = 20000) {
  const double h = (b - a) / intervals;
  double s = f(a) + f(b);
  for (int i = 1; i < intervals; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

/// Lagrange cardinal function by the product formula.
inline double cardinal(const std::vector<double>& nodes, std::size_t j, double x) {
  double v = 1.0;
  for (std::size_t k = 0; k < nodes.size(); ++k)
    if (k != j) v *= (x - nodes[k]) / (nodes[j] - nodes[k]);
  return v;
}

/// Exact integral of x^p over (-1, 1).
inline double monomial_integral(int p) { return p % 2 ? 0.0 : 2.0 / (p + 1); }

/// c * x1^e1 * x2^e2 * x3^e3 with symbolic differentiation.
struct Monomial {
  double coef = 1.0;
  int e[3] = {0, 0, 0};

  Monomial diff(int axis) const {
    Monomial m = *this;
    if (m.e[axis] == 0) {
      m.coef = 0.0;
      return m;
    }
    m.coef *= m.e[axis];
    m.e[axis] -= 1;
    return m;
  }
  double eval(const double* x, int dim) const {
    double v = coef;
    for (int a = 0; a < dim; ++a) v *= std::pow(x[a], e[a]);
    return v;
  }
};

}  // namespace specel::oracle
