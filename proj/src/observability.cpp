#include "specel/observability.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace specel {

namespace {

// Trapezoid weights times dt on steps + 1 samples.
Eigen::VectorXd trapezoid(int steps, double dt) {
  Eigen::VectorXd w = Eigen::VectorXd::Constant(steps + 1, dt);
  w[0] *= 0.5;
  w[steps] *= 0.5;
  return w;
}

VectorField unpack_interior(const GridPtr& g, const Eigen::Ref<const Eigen::VectorXd>& x) {
  VectorField u(g);
  const auto& inner = g->interior_indices();
  const Index n = static_cast<Index>(inner.size());
  for (int c = 0; c < g->dim(); ++c)
    for (Index p = 0; p < n; ++p) u.values(inner[static_cast<std::size_t>(p)], c) = x[c * n + p];
  return u;
}

Eigen::VectorXd pack_interior(const VectorField& u) {
  const auto& inner = u.grid->interior_indices();
  const Index n = static_cast<Index>(inner.size());
  Eigen::VectorXd x(n * u.dim());
  for (int c = 0; c < u.dim(); ++c)
    for (Index p = 0; p < n; ++p) x[c * n + p] = u.values(inner[static_cast<std::size_t>(p)], c);
  return x;
}

Eigen::MatrixXd face_gram(const TensorGrid& g) {
  const Index m = g.face_size();
  Eigen::MatrixXd G(m, m);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j <= i; ++j)
      G(i, j) = G(j, i) = face_exact_inner_product(g, Eigen::VectorXd::Unit(m, i), Eigen::VectorXd::Unit(m, j));
  return G;
}

// Sum over faces and components of T^T G T, with T the map from interior dofs
// to the face values of `trace`.
Eigen::MatrixXd observation_form(const ElasticPropagator& prop, ObservationWeights weights) {
  const auto& g = prop.grid();
  const int d = g->dim();
  const Index n = prop.dofs();
  const Index fs = g->face_size();
  const Eigen::MatrixXd G = face_gram(*g);
  const Eigen::LLT<Eigen::MatrixXd> chol(G);
  const Eigen::MatrixXd R = chol.matrixU();

  const auto gamma = g->gamma_faces();
  const int faces = g->face_count();
  // Rows: traction on Gamma faces, then second normal term on every face.
  const Index rows = (static_cast<Index>(gamma.size()) + faces) * d * fs;
  Eigen::MatrixXd T(rows, n);
  const double wt = std::sqrt(weights.traction), ws = std::sqrt(weights.second);
  for (Index j = 0; j < n; ++j) {
    const VectorField u = unpack_interior(g, Eigen::VectorXd::Unit(n, j));
    Index r = 0;
    for (int f : gamma) {
      const FaceTrace t = traction(prop.material(), u, f);
      for (int c = 0; c < d; ++c, r += fs) T.col(j).segment(r, fs) = wt * (R * t.values.col(c));
    }
    for (int f = 1; f <= faces; ++f) {
      const FaceTrace t = second_normal_term(prop.material(), u, f);
      for (int c = 0; c < d; ++c, r += fs) T.col(j).segment(r, fs) = ws * (R * t.values.col(c));
    }
  }
  return T.transpose() * T;
}

}  // namespace

double observability_threshold(int dim, int degree, const Material& m) {
  return 4.0 * std::sqrt(static_cast<double>(dim)) * std::pow(2.0 + 1.0 / degree, dim) / std::sqrt(m.mu);
}

std::vector<ElasticState> record_trajectory(const ElasticPropagator& prop, const ElasticState& initial) {
  std::vector<ElasticState> out;
  out.reserve(static_cast<std::size_t>(prop.steps() + 1));
  integrate_adjoint(prop, initial, [&](int, const ElasticState& s) { out.push_back(s); });
  return out;
}

ObservabilityReport observe_trajectory(const ElasticPropagator& prop, const ElasticState& initial,
                                       ObservationWeights weights) {
  const auto& g = *prop.grid();
  const Material& m = prop.material();
  ObservabilityReport rep;
  rep.T = prop.dt() * prop.steps();
  rep.N = g.degree();
  rep.threshold = observability_threshold(g.dim(), g.degree(), m);
  rep.lhs_norm_sq = 2.0 * discrete_energy(initial, m);
  const Eigen::VectorXd w = trapezoid(prop.steps(), prop.dt());
  const auto gamma = g.gamma_faces();
  integrate_adjoint(prop, initial, [&](int n, const ElasticState& s) {
    double tr = 0.0, sn = 0.0;
    for (int f : gamma) tr += face_l2_norm_sq(traction(m, s.displacement, f));
    for (int f = 1; f <= g.face_count(); ++f) sn += face_l2_norm_sq(second_normal_term(m, s.displacement, f));
    rep.term_traction += w[n] * tr;
    rep.term_second += w[n] * sn;
  });
  rep.ratio = rep.lhs_norm_sq > 0.0
                  ? (weights.traction * rep.term_traction + weights.second * rep.term_second) / rep.lhs_norm_sq
                  : std::numeric_limits<double>::quiet_NaN();
  return rep;
}

MultiplierDiagnostics multiplier_diagnostics(const std::vector<ElasticState>& trajectory, const Material& m,
                                             double dt) {
  MultiplierDiagnostics out;
  if (trajectory.empty()) return out;
  const auto& g = *trajectory.front().grid();
  const int d = g.dim();
  const int steps = static_cast<int>(trajectory.size()) - 1;
  const Eigen::VectorXd w = steps > 0 ? trapezoid(steps, dt) : Eigen::VectorXd::Zero(1);
  const auto gamma = g.gamma_faces();

  // m_j d_j phi_c, nodal, per component.
  auto multiplier_field = [&](const VectorField& u) {
    Eigen::MatrixXd mv = Eigen::MatrixXd::Zero(g.size(), d);
    for (int c = 0; c < d; ++c)
      for (int j = 0; j < d; ++j)
        mv.col(c) += ((g.coordinates().col(j).array() + 1.0) * partial(g, u.component(c), j).array()).matrix();
    return mv;
  };
  auto boundary_pairing = [&](const ElasticState& s) {
    const Eigen::MatrixXd mv = multiplier_field(s.displacement);
    double x = 0.0, y = 0.0;
    for (int c = 0; c < d; ++c) {
      x += exact_inner_product(g, s.velocity.component(c), mv.col(c));
      y += exact_inner_product(g, s.velocity.component(c), s.displacement.component(c));
    }
    return std::pair{x, y};
  };
  const auto [x0, y0] = boundary_pairing(trajectory.front());
  const auto [xT, yT] = boundary_pairing(trajectory.back());
  out.X = xT - x0;
  out.Y = yT - y0;
  out.energy0 = discrete_energy(trajectory.front(), m);

  double source = 0.0;
  for (int n = 0; n <= steps; ++n) {
    const ElasticState& s = trajectory[static_cast<std::size_t>(n)];
    const VectorField& u = s.displacement;
    const Eigen::VectorXd div = divergence(u);

    double dens = 0.0;
    for (int c = 0; c < d; ++c) {
      dens += exact_inner_product(g, s.velocity.component(c), s.velocity.component(c));
      for (int a = 0; a < d; ++a) {
        const Eigen::VectorXd du = partial(g, u.component(c), a);
        dens += m.mu * exact_inner_product(g, du, du);
      }
    }
    dens += (m.lambda + m.mu) * exact_inner_product(g, div, div);
    out.interior_energy_integral += w[n] * 0.5 * dens;

    double flux = 0.0;
    for (int f : gamma) {
      const int axis = g.face_axis(f);
      const double side = g.face_side(f);
      const Eigen::VectorXd dv = face_restrict(g, div, f);
      flux += (m.lambda + m.mu) * face_exact_inner_product(g, dv, dv);
      for (int c = 0; c < d; ++c) {
        const Eigen::VectorXd dn = side * face_restrict(g, partial(g, u.component(c), axis), f);
        flux += m.mu * face_exact_inner_product(g, dn, dn);
      }
    }
    out.boundary_flux_integral += w[n] * flux;

    // Perturbation of the equivalent continuous system: minus the Lame
    // operator sampled at boundary nodes, extended by the Lagrange basis.
    const VectorField L = lame_apply(m, u);
    Eigen::MatrixXd F = Eigen::MatrixXd::Zero(g.size(), d);
    for (Index b : g.boundary_indices()) F.row(b) = -L.values.row(b);
    const Eigen::MatrixXd mv = multiplier_field(u);
    double pair = 0.0;
    for (int c = 0; c < d; ++c) pair += exact_inner_product(g, F.col(c), mv.col(c));
    source += w[n] * pair;
  }
  out.source_coupling_integral = std::abs(source);

  const double combo = std::abs(out.X + 0.5 * (d - 1) * out.Y);
  out.bound_slack = 4.0 * std::sqrt(static_cast<double>(d)) / std::sqrt(m.mu) * out.energy0 - combo;
  out.identity_slack = combo + std::sqrt(static_cast<double>(d)) * out.boundary_flux_integral +
                       out.source_coupling_integral - out.interior_energy_integral;
  return out;
}

LanczosResult lanczos_smallest(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& apply,
                               const Eigen::VectorXd& metric, const Eigen::VectorXd& start, int iterations) {
  if (iterations < 1) throw std::invalid_argument("lanczos needs at least one iteration");
  const Index n = start.size();
  auto dot = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a.array() * metric.array() * b.array()).sum(); };
  const int kmax = static_cast<int>(std::min<Index>(iterations, n));
  Eigen::MatrixXd Q(n, kmax);
  Eigen::VectorXd alpha(kmax), beta(kmax);
  LanczosResult res;

  Eigen::VectorXd q = start / std::sqrt(dot(start, start));
  int k = 0;
  for (; k < kmax; ++k) {
    Q.col(k) = q;
    Eigen::VectorXd z = apply(q);
    alpha[k] = dot(q, z);
    // Two passes of Gram-Schmidt against every previous vector.
    for (int pass = 0; pass < 2; ++pass)
      for (int j = 0; j <= k; ++j) z -= dot(Q.col(j), z) * Q.col(j);
    beta[k] = std::sqrt(std::max(0.0, dot(z, z)));

    Eigen::MatrixXd Tk = Eigen::MatrixXd::Zero(k + 1, k + 1);
    for (int j = 0; j <= k; ++j) {
      Tk(j, j) = alpha[j];
      if (j < k) Tk(j, j + 1) = Tk(j + 1, j) = beta[j];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Tk);
    const double ritz = es.eigenvalues()[0];
    res.history.push_back(res.history.empty() ? ritz : std::min(res.history.back(), ritz));
    if (ritz <= res.history.back()) {
      res.value = ritz;
      res.vector = Q.leftCols(k + 1) * es.eigenvectors().col(0);
    }
    if (beta[k] <= 1e-13 * std::abs(alpha[k]) + 1e-300) {
      ++k;
      break;
    }
    q = z / beta[k];
  }
  // Pad the history so it has one entry per requested iteration.
  while (static_cast<int>(res.history.size()) < iterations) res.history.push_back(res.history.back());
  return res;
}

ModalObservation::ModalObservation(const ElasticPropagator& prop, ObservationWeights weights) : grid_(prop.grid()) {
  if (prop.spec().scheme != Scheme::Newmark) throw std::invalid_argument("modal observation requires the Newmark scheme");
  const Eigen::VectorXd& W = prop.mass();
  sqrt_mass_ = W.cwiseSqrt();
  const Eigen::VectorXd inv = sqrt_mass_.cwiseInverse();
  Eigen::MatrixXd A = -(sqrt_mass_.asDiagonal() * prop.assemble_interior_operator() * inv.asDiagonal());
  A = 0.5 * (A + A.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  omega_ = es.eigenvalues().cwiseSqrt();
  basis_ = inv.asDiagonal() * es.eigenvectors();

  const Eigen::MatrixXd Zt = basis_ * omega_.cwiseInverse().asDiagonal();
  const Eigen::MatrixXd G = Zt.transpose() * observation_form(prop, weights) * Zt;

  const int M = prop.steps();
  const Index n = omega_.size();
  const Eigen::VectorXd wt = trapezoid(M, prop.dt());
  Eigen::MatrixXd C(n, M + 1), S(n, M + 1);
  for (Index k = 0; k < n; ++k) {
    const double theta = 2.0 * std::atan(omega_[k] * prop.dt() / 2.0);
    for (int t = 0; t <= M; ++t) {
      C(k, t) = std::cos(t * theta);
      S(k, t) = std::sin(t * theta);
    }
  }
  const Eigen::MatrixXd Cw = C * wt.asDiagonal(), Sw = S * wt.asDiagonal();
  form_.resize(2 * n, 2 * n);
  form_.topLeftCorner(n, n) = G.cwiseProduct(Cw * C.transpose());
  form_.topRightCorner(n, n) = G.cwiseProduct(Cw * S.transpose());
  form_.bottomLeftCorner(n, n) = form_.topRightCorner(n, n).transpose();
  form_.bottomRightCorner(n, n) = G.cwiseProduct(Sw * S.transpose());
}

ElasticState ModalObservation::to_state(const Eigen::VectorXd& coords) const {
  const Index n = omega_.size();
  const Eigen::VectorXd u = basis_ * coords.head(n).cwiseQuotient(omega_);
  const Eigen::VectorXd v = basis_ * coords.tail(n);
  return ElasticState(unpack_interior(grid_, u), unpack_interior(grid_, v));
}

Eigen::VectorXd ModalObservation::from_state(const ElasticState& s) const {
  const Index n = omega_.size();
  // basis^{-1} = V^T W^{1/2}.
  const Eigen::MatrixXd Vt = (sqrt_mass_.asDiagonal() * basis_).transpose();
  Eigen::VectorXd out(2 * n);
  out.head(n) = omega_.cwiseProduct(Vt * (sqrt_mass_.cwiseProduct(pack_interior(s.displacement))));
  out.tail(n) = Vt * (sqrt_mass_.cwiseProduct(pack_interior(s.velocity)));
  return out;
}

WorstCase worst_case_ratio(const ElasticPropagator& prop, int iterations, ObservationWeights weights,
                           std::uint64_t seed) {
  if (iterations < 1) throw std::invalid_argument("iterations must be at least 1");
  const ModalObservation modal(prop, weights);
  const Index n = modal.form().rows();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Eigen::VectorXd start(n);
  for (Index i = 0; i < n; ++i) start[i] = nd(rng);
  const auto res = lanczos_smallest([&](const Eigen::VectorXd& x) { return Eigen::VectorXd(modal.form() * x); },
                                    Eigen::VectorXd::Ones(n), start, iterations);
  return WorstCase{res.value, modal.to_state(res.vector), res.history};
}

WorstCase worst_case_ratio_exact(const ElasticPropagator& prop, ObservationWeights weights) {
  const ModalObservation modal(prop, weights);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(modal.form());
  const double value = es.eigenvalues()[0];
  return WorstCase{value, modal.to_state(es.eigenvectors().col(0)), {value}};
}

}  // namespace specel
