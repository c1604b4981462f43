#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "specel/legendre1d.hpp"

using namespace specel;

TEST_SUITE("legendre1d") {

TEST_CASE("legendre_eval closed forms") {
  auto l0 = legendre_eval(0, 0.7);
  CHECK(l0.value == 1.0);
  CHECK(l0.derivative == 0.0);

  auto l2 = legendre_eval(2, 0.0);
  CHECK(l2.value == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(std::abs(l2.derivative) < 1e-15);

  auto l3 = legendre_eval(3, 1.0);
  CHECK(l3.value == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(l3.derivative == doctest::Approx(6.0).epsilon(1e-15));

  for (double x : {-0.9, -0.3, 0.2, 0.65}) {
    const double L4 = (35 * std::pow(x, 4) - 30 * x * x + 3) / 8;
    const double dL4 = (140 * std::pow(x, 3) - 60 * x) / 8;
    CHECK(legendre_eval(4, x).value == doctest::Approx(L4).epsilon(1e-14));
    CHECK(legendre_eval(4, x).derivative == doctest::Approx(dL4).epsilon(1e-14));
  }
  for (int n = 1; n <= 30; ++n) CHECK(legendre_eval(n, 1.0).derivative == doctest::Approx(n * (n + 1) / 2.0));
}

TEST_CASE("lgl_rule small degrees") {
  auto r2 = lgl_rule(2);
  CHECK(r2.nodes[0] == -1.0);
  CHECK(r2.nodes[1] == 0.0);
  CHECK(r2.nodes[2] == 1.0);
  CHECK(r2.weights[0] == doctest::Approx(1.0 / 3).epsilon(1e-15));
  CHECK(r2.weights[1] == doctest::Approx(4.0 / 3).epsilon(1e-15));
  CHECK(r2.weights[2] == doctest::Approx(1.0 / 3).epsilon(1e-15));

  auto r3 = lgl_rule(3);
  CHECK(r3.nodes[2] == doctest::Approx(1.0 / std::sqrt(5.0)).epsilon(1e-15));
  CHECK(r3.nodes[1] == doctest::Approx(-1.0 / std::sqrt(5.0)).epsilon(1e-15));
  const double expect3[] = {1.0 / 6, 5.0 / 6, 5.0 / 6, 1.0 / 6};
  for (int k = 0; k < 4; ++k) CHECK(r3.weights[k] == doctest::Approx(expect3[k]).epsilon(1e-14));

  auto r10 = lgl_rule(10);
  CHECK(std::abs(r10.weights[0] - 2.0 / 110) < 1e-13);
}

TEST_CASE("lgl_rule rejects degree below two") {
  CHECK_THROWS_AS(lgl_rule(1), std::invalid_argument);
}

TEST_CASE("lgl_rule invariants for N = 2..64") {
  for (int N = 2; N <= 64; ++N) {
    CAPTURE(N);
    auto r = lgl_rule(N);
    CHECK(r.nodes[0] == -1.0);
    CHECK(r.nodes[N] == 1.0);
    for (int k = 0; k < N; ++k) CHECK(r.nodes[k] < r.nodes[k + 1]);
    for (int k = 0; k <= N; ++k) CHECK(std::abs(r.nodes[k] + r.nodes[N - k]) < 1e-13);
    for (int k = 0; k <= N; ++k) CHECK(r.weights[k] > 0.0);
    CHECK(std::abs(r.weights.sum() - 2.0) < 1e-12);
    CHECK(std::abs(r.weights[0] - 2.0 / (N * (N + 1.0))) < 1e-13);
    CHECK(std::abs(r.weights[N] - 2.0 / (N * (N + 1.0))) < 1e-13);

    // Quadrature exactness up to degree 2N-1.
    for (int p = 0; p <= 2 * N - 1; ++p) {
      double q = 0.0;
      for (int k = 0; k <= N; ++k) q += r.weights[k] * std::pow(r.nodes[k], p);
      const double exact = oracle::monomial_integral(p);
      if (exact == 0.0)
        CHECK(std::abs(q) < 1e-12);
      else
        CHECK(std::abs(q - exact) / exact < 1e-12);
    }

    // Constants are annihilated; monomials are differentiated exactly.
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(N + 1);
    CHECK((r.diff1 * ones).cwiseAbs().maxCoeff() < 1e-11);
    for (int p = 1; p <= N; ++p) {
      Eigen::VectorXd f(N + 1), df(N + 1);
      for (int k = 0; k <= N; ++k) {
        f[k] = std::pow(r.nodes[k], p);
        df[k] = p * std::pow(r.nodes[k], p - 1);
      }
      CHECK((r.diff1 * f - df).cwiseAbs().maxCoeff() < 1e-10 * N * N);
    }
  }
}

TEST_CASE("second derivative matrix agrees with squared first derivative on P_N") {
  for (int N = 2; N <= 16; ++N) {
    CAPTURE(N);
    auto r = lgl_rule(N);
    const Eigen::MatrixXd diff = r.diff2 - r.diff1 * r.diff1;
    for (int p = 0; p <= N; ++p) {
      Eigen::VectorXd f(N + 1);
      for (int k = 0; k <= N; ++k) f[k] = std::pow(r.nodes[k], p);
      CHECK((diff * f).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
}

TEST_CASE("interior nodes interlace between consecutive degrees") {
  for (int N = 2; N <= 40; ++N) {
    auto a = lgl_rule(N), b = lgl_rule(N + 1);
    // b has N interior nodes, a has N-1; each interior node of a lies between two of b.
    for (int k = 1; k < N; ++k) {
      CHECK(b.nodes[k] < a.nodes[k]);
      CHECK(a.nodes[k] < b.nodes[k + 1]);
    }
  }
}

TEST_CASE("lagrange_basis_all") {
  auto r = lgl_rule(2);
  auto at0 = lagrange_basis_all(r, 0.0);
  CHECK(at0[0] == 0.0);
  CHECK(at0[1] == 1.0);
  CHECK(at0[2] == 0.0);

  auto half = lagrange_basis_all(r, 0.5);
  CHECK(half[0] == doctest::Approx(-0.125).epsilon(1e-14));
  CHECK(half[1] == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(half[2] == doctest::Approx(0.375).epsilon(1e-14));

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int N : {3, 7, 12, 25}) {
    auto rule = lgl_rule(N);
    std::vector<double> nodes(rule.nodes.data(), rule.nodes.data() + N + 1);
    for (int s = 0; s < 20; ++s) {
      const double x = unif(rng);
      auto psi = lagrange_basis_all(rule, x);
      CHECK(std::abs(psi.sum() - 1.0) < 1e-12);
      for (int j = 0; j <= N; ++j) CHECK(std::abs(psi[j] - oracle::cardinal(nodes, static_cast<std::size_t>(j), x)) < 1e-11);
    }
    for (int j = 0; j <= N; ++j) {
      auto e = lagrange_basis_all(rule, rule.nodes[j]);
      CHECK(e[j] == 1.0);
      CHECK(e.cwiseAbs().sum() == 1.0);
    }
  }
}

TEST_CASE("lagrange_edge_derivatives") {
  auto r2 = lgl_rule(2);
  auto e2 = lagrange_edge_derivatives(r2);
  CHECK(e2.psiN_prime[2] == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(e2.psi0_prime[0] == doctest::Approx(-1.5).epsilon(1e-14));
  // Psi_2' = x + 1/2 at every node.
  for (int k = 0; k < 3; ++k) CHECK(e2.psiN_prime[k] == doctest::Approx(r2.nodes[k] + 0.5).epsilon(1e-14));

  for (int N = 2; N <= 40; ++N) {
    auto r = lgl_rule(N);
    auto e = lagrange_edge_derivatives(r);
    CHECK(e.psiN_prime[N] == doctest::Approx(N * (N + 1) / 4.0).epsilon(1e-12));
    CHECK(e.psi0_prime[0] == doctest::Approx(-N * (N + 1) / 4.0).epsilon(1e-12));
  }
}

}  // TEST_SUITE
