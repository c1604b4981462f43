#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "oracles.hpp"
#include "specel/tensorgrid.hpp"

using namespace specel;

TEST_SUITE("tensorgrid") {

TEST_CASE("index sets") {
  for (int d = 1; d <= 3; ++d) {
    for (int N : {2, 3, 6}) {
      CAPTURE(d);
      CAPTURE(N);
      auto g = make_grid(d, N);
      const auto inner = static_cast<std::size_t>(std::pow(N - 1, d));
      CHECK(g->interior_indices().size() == inner);
      CHECK(static_cast<Index>(g->interior_indices().size() + g->boundary_indices().size()) == g->size());
      std::set<Index> in(g->interior_indices().begin(), g->interior_indices().end());
      for (Index b : g->boundary_indices()) CHECK(in.count(b) == 0);

      // Face membership and multiplicity.
      std::vector<int> multiplicity(static_cast<std::size_t>(g->size()), 0);
      std::size_t total = 0;
      for (int face = 1; face <= g->face_count(); ++face) {
        const auto& idx = g->face_indices(face);
        CHECK(static_cast<Index>(idx.size()) == g->face_size());
        total += idx.size();
        const int axis = g->face_axis(face);
        for (Index i : idx) {
          const int k = g->multi_index(i)[static_cast<std::size_t>(axis)];
          CHECK(k == (g->face_side(face) > 0 ? N : 0));
          ++multiplicity[static_cast<std::size_t>(i)];
        }
      }
      CHECK(total == static_cast<std::size_t>(2 * d * g->face_size()));
      for (Index i = 0; i < g->size(); ++i) {
        int on = 0;
        for (int k : g->multi_index(i)) on += (k == 0 || k == N);
        CHECK(multiplicity[static_cast<std::size_t>(i)] == on);
      }
    }
  }
  auto g = make_grid(2, 4);
  CHECK_THROWS_AS(g->face_indices(0), std::out_of_range);
  CHECK_THROWS_AS(g->face_indices(5), std::out_of_range);
  CHECK(g->gamma_faces() == std::vector<int>{1, 2});
  CHECK_THROWS_AS(make_grid(4, 4), std::invalid_argument);
}

TEST_CASE("discrete_inner_product examples") {
  auto g2 = make_grid(2, 5);
  ScalarGridFn one(g2, Eigen::VectorXd::Ones(g2->size()));
  CHECK(discrete_inner_product(one, one) == doctest::Approx(4.0).epsilon(1e-14));

  auto g1 = make_grid(1, 2);
  auto x2 = ScalarGridFn::from_function(g1, [](auto x) { return x[0] * x[0]; });
  ScalarGridFn one1(g1, Eigen::VectorXd::Ones(3));
  CHECK(discrete_inner_product(x2, one1) == doctest::Approx(2.0 / 3).epsilon(1e-14));

  auto g3 = make_grid(2, 3);
  auto xy = ScalarGridFn::from_function(g3, [](auto x) { return x[0] * x[1]; });
  CHECK(discrete_inner_product(xy, xy) == doctest::Approx(4.0 / 9).epsilon(1e-14));

  auto other = make_grid(2, 4);
  ScalarGridFn z(other, Eigen::VectorXd::Ones(other->size()));
  CHECK_THROWS_AS(discrete_inner_product(one, z), std::invalid_argument);
  CHECK_THROWS_AS(ScalarGridFn(g2, Eigen::VectorXd::Ones(3)), std::invalid_argument);
}

TEST_CASE("exactness transfer on low-degree products") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> deg(0, 7);
  for (int d = 1; d <= 3; ++d) {
    const int N = 4;
    auto g = make_grid(d, N);
    for (int s = 0; s < 30; ++s) {
      // Per-variable product degree p_a + q_a <= 2N-1.
      int p[3], q[3];
      for (int a = 0; a < 3; ++a) {
        p[a] = std::min(deg(rng), N);
        q[a] = std::min(deg(rng), 2 * N - 1 - p[a]);
      }
      auto w = ScalarGridFn::from_function(g, [&](auto x) {
        double v = 1;
        for (int a = 0; a < d; ++a) v *= std::pow(x[static_cast<std::size_t>(a)], p[a]);
        return v;
      });
      auto z = ScalarGridFn::from_function(g, [&](auto x) {
        double v = 1;
        for (int a = 0; a < d; ++a) v *= std::pow(x[static_cast<std::size_t>(a)], q[a]);
        return v;
      });
      double exact = 1;
      for (int a = 0; a < d; ++a) exact *= oracle::monomial_integral(p[a] + q[a]);
      const double disc = discrete_inner_product(w, z);
      CHECK(std::abs(disc - exact) <= 1e-11 * std::max(1.0, std::abs(exact)));
      CHECK(std::abs(exact_inner_product(*g, w.values, z.values) - exact) <= 1e-11 * std::max(1.0, std::abs(exact)));
    }
  }
}

TEST_CASE("l2_norm_exact") {
  auto g2 = make_grid(2, 6);
  CHECK(l2_norm_exact(ScalarGridFn(g2, Eigen::VectorXd::Ones(g2->size()))) == doctest::Approx(2.0).epsilon(1e-13));

  auto g1 = make_grid(1, 2);
  auto x = ScalarGridFn::from_function(g1, [](auto p) { return p[0]; });
  CHECK(l2_norm_exact(x) == doctest::Approx(std::sqrt(2.0 / 3)).epsilon(1e-14));

  auto g4 = make_grid(1, 4);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(5);
  e[4] = 1.0;
  std::vector<double> nodes(g4->rule().nodes.data(), g4->rule().nodes.data() + 5);
  const double oracle_sq = oracle::simpson([&](double s) { return std::pow(oracle::cardinal(nodes, 4, s), 2); }, -1, 1);
  CHECK(l2_norm_exact(ScalarGridFn(g4, e)) == doctest::Approx(std::sqrt(oracle_sq)).epsilon(1e-12));
}

TEST_CASE("norm equivalence bounds") {
  auto g1 = make_grid(1, 4);
  ScalarGridFn one(g1, Eigen::VectorXd::Ones(5));
  CHECK(discrete_inner_product(one, one) / std::pow(l2_norm_exact(one), 2) == doctest::Approx(1.0).epsilon(1e-14));

  Eigen::VectorXd e = Eigen::VectorXd::Zero(5);
  e[4] = 1.0;
  ScalarGridFn psi4(g1, e);
  const double ratio = discrete_inner_product(psi4, psi4) / std::pow(l2_norm_exact(psi4), 2);
  CHECK(discrete_inner_product(psi4, psi4) == doctest::Approx(g1->rule().weights[4]).epsilon(1e-15));
  CHECK(ratio >= 1.0);
  CHECK(ratio <= 2.25);

  auto g = make_grid(2, 8);
  auto rr = norm_equivalence_report(*g, 100, 2024);
  CHECK(rr.min_ratio >= 1.0 - 1e-10);
  CHECK(rr.max_ratio <= norm_equivalence_upper(2, 8) + 1e-10);
  CHECK(norm_equivalence_upper(2, 8) == doctest::Approx(std::pow(2.125, 2)));
  CHECK_THROWS_AS(norm_equivalence_report(*g, 0, 1), std::invalid_argument);
}

TEST_CASE("face quadrature") {
  auto g = make_grid(2, 5);
  const auto& nodes = g->rule().nodes;
  Eigen::VectorXd a(g->face_size());
  for (Index p = 0; p < a.size(); ++p) a[p] = 1.0 - nodes[p] * nodes[p];
  CHECK(face_exact_inner_product(*g, a, a) == doctest::Approx(16.0 / 15).epsilon(1e-13));
  Eigen::VectorXd c = Eigen::VectorXd::Constant(g->face_size(), 3.0);
  CHECK(face_exact_inner_product(*g, c, c) == doctest::Approx(18.0).epsilon(1e-13));
  CHECK(g->face_weights().sum() == doctest::Approx(2.0).epsilon(1e-14));
}

}  // TEST_SUITE
