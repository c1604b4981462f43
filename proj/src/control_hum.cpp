#include "specel/control_hum.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace specel {

LiftingKernels build_lifting(GridPtr grid, const Material& m) {
  m.validate();
  const auto& g = *grid;
  const LglRule& r = g.rule();
  const int N = r.degree;
  const int d = g.dim();

  LiftingKernels k;
  k.grid = grid;
  k.material = m;
  k.h1 = Eigen::VectorXd::Zero(N + 1);
  k.h2 = Eigen::VectorXd::Zero(N + 1);
  for (int j = 1; j < N; ++j) {
    k.h1[j] = (1.0 + r.nodes[j]) / 2.0;
    k.h2[j] = (1.0 - r.nodes[j]) / 2.0;
  }
  const EdgeDerivatives e = lagrange_edge_derivatives(r);
  const double wN = r.weights[N], w0 = r.weights[0];
  k.h1_tilde = (r.diff2 * k.h1 + e.psiN_prime / wN) / std::sqrt(wN);
  k.h2_tilde = (r.diff2 * k.h2 - e.psi0_prime / w0) / std::sqrt(w0);

  for (int a = 0; a < d; ++a) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(d, d) * m.mu;
    A(a, a) += m.mu + m.lambda;
    k.A.push_back(A);
  }

  // Face position of every node on each face, then of every interior node's projection.
  k.projection.resize(static_cast<std::size_t>(g.face_count()));
  std::vector<Index> pos(static_cast<std::size_t>(g.size()));
  for (int f = 1; f <= g.face_count(); ++f) {
    const auto& idx = g.face_indices(f);
    for (std::size_t p = 0; p < idx.size(); ++p) pos[static_cast<std::size_t>(idx[p])] = static_cast<Index>(p);
    const int a = g.face_axis(f);
    const int end = g.face_side(f) > 0 ? N : 0;
    auto& proj = k.projection[static_cast<std::size_t>(f - 1)];
    for (Index i : g.interior_indices()) {
      const int ka = g.multi_index(i)[static_cast<std::size_t>(a)];
      proj.push_back(pos[static_cast<std::size_t>(i + (end - ka) * g.stride(a))]);
    }
  }
  return k;
}

Eigen::MatrixXd LiftingKernels::source(int face, const Eigen::MatrixXd& gv) const {
  const auto& g = *grid;
  const int a = g.face_axis(face);
  const Eigen::VectorXd& ht = g.face_side(face) > 0 ? h1_tilde : h2_tilde;
  const auto& proj = projection[static_cast<std::size_t>(face - 1)];
  const auto& inner = g.interior_indices();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(g.size(), g.dim());
  for (std::size_t q = 0; q < inner.size(); ++q) {
    const Index i = inner[q];
    const double h = ht[g.multi_index(i)[static_cast<std::size_t>(a)]];
    for (int c = 0; c < g.dim(); ++c) out(i, c) = A[static_cast<std::size_t>(a)](c, c) * h * gv(proj[q], c);
  }
  return out;
}

Eigen::MatrixXd LiftingKernels::source_transpose(int face, const Eigen::MatrixXd& y) const {
  const auto& g = *grid;
  const int a = g.face_axis(face);
  const Eigen::VectorXd& ht = g.face_side(face) > 0 ? h1_tilde : h2_tilde;
  const auto& proj = projection[static_cast<std::size_t>(face - 1)];
  const auto& inner = g.interior_indices();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(g.face_size(), g.dim());
  for (std::size_t q = 0; q < inner.size(); ++q) {
    const Index i = inner[q];
    const double h = ht[g.multi_index(i)[static_cast<std::size_t>(a)]];
    for (int c = 0; c < g.dim(); ++c) out(proj[q], c) += A[static_cast<std::size_t>(a)](c, c) * h * y(i, c);
  }
  return out;
}

FaceTrace ControlResult::f_trace(int n, int face) const {
  const auto& idx = grid->face_indices(face);
  FaceTrace t{grid, face, Eigen::MatrixXd(static_cast<Index>(idx.size()), grid->dim())};
  const auto& fn = f[static_cast<std::size_t>(n)];
  for (std::size_t p = 0; p < idx.size(); ++p) t.values.row(static_cast<Index>(p)) = fn.row(idx[p]);
  return t;
}

FaceTrace ControlResult::g_trace(int n, int face) const {
  return FaceTrace{grid, face, g[static_cast<std::size_t>(n)][static_cast<std::size_t>(face - 1)]};
}

HumOperator::HumOperator(const ElasticPropagator& prop, double weight_g, ObservationMode mode)
    : prop_(&prop), lifting_(build_lifting(prop.grid(), prop.material())), weight_g_(weight_g), mode_(mode) {
  if (!(weight_g >= 0.0) || !std::isfinite(weight_g)) throw std::invalid_argument("weight_g must be non-negative");
  const auto& g = *prop.grid();
  const auto& w = g.rule().weights;
  const int N = g.degree();
  std::vector<double> dw;
  for (Index b : g.boundary_indices()) {
    const auto k = g.multi_index(b);
    double D = 0.0;
    for (int a = 0; a < g.dim(); ++a) {
      if (k[static_cast<std::size_t>(a)] != N) continue;
      double fw = 1.0;
      for (int c = 0; c < g.dim(); ++c)
        if (c != a) fw *= w[k[static_cast<std::size_t>(c)]];
      D += fw;
    }
    if (D > 0.0) {
      gamma_nodes_.push_back(b);
      dw.push_back(D);
    }
  }
  gamma_weight_ = Eigen::Map<const Eigen::VectorXd>(dw.data(), static_cast<Index>(dw.size()));
}

void HumOperator::observe(const ElasticState& phi, Eigen::MatrixXd& f, std::vector<Eigen::MatrixXd>& gv) const {
  const auto& g = *prop_->grid();
  if (mode_ == ObservationMode::Traction) {
    const Material& m = prop_->material();
    f = Eigen::MatrixXd::Zero(g.size(), g.dim());
    Eigen::VectorXd count = Eigen::VectorXd::Zero(g.size());
    for (int face : g.gamma_faces()) {
      const FaceTrace t = traction(m, phi.displacement, face);
      const auto& idx = g.face_indices(face);
      for (std::size_t p = 0; p < idx.size(); ++p) {
        f.row(idx[p]) += t.values.row(static_cast<Index>(p));
        count[idx[p]] += 1.0;
      }
    }
    for (Index i = 0; i < g.size(); ++i)
      if (count[i] > 1.0) f.row(i) /= count[i];
    gv.assign(static_cast<std::size_t>(g.face_count()), Eigen::MatrixXd::Zero(g.face_size(), g.dim()));
    if (weight_g_ == 0.0) return;
    for (int face = 1; face <= g.face_count(); ++face)
      gv[static_cast<std::size_t>(face - 1)] = weight_g_ * second_normal_term(m, phi.displacement, face).values;
    return;
  }
  const Eigen::MatrixXd y = g.weights().asDiagonal() * phi.displacement.values;
  const VectorField bt = lame_apply_transpose(prop_->material(), VectorField(prop_->grid(), y));
  f = Eigen::MatrixXd::Zero(g.size(), g.dim());
  for (std::size_t q = 0; q < gamma_nodes_.size(); ++q) {
    const Index b = gamma_nodes_[q];
    f.row(b) = -bt.values.row(b) / gamma_weight_[static_cast<Index>(q)];
  }
  gv.assign(static_cast<std::size_t>(g.face_count()), Eigen::MatrixXd::Zero(g.face_size(), g.dim()));
  if (weight_g_ == 0.0) return;
  for (int face = 1; face <= g.face_count(); ++face)
    gv[static_cast<std::size_t>(face - 1)] =
        -weight_g_ * (g.face_weights().cwiseInverse().asDiagonal() * lifting_.source_transpose(face, y));
}

BoundaryForcing HumOperator::forcing(const std::vector<Eigen::MatrixXd>& f,
                                     const std::vector<std::vector<Eigen::MatrixXd>>& gv) const {
  const auto& g = *prop_->grid();
  BoundaryForcing out;
  out.steps = prop_->steps();
  out.dt = prop_->dt();
  out.dirichlet = f;
  if (weight_g_ == 0.0) return out;
  out.source.reserve(gv.size());
  for (const auto& faces : gv) {
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(g.size(), g.dim());
    for (int face = 1; face <= g.face_count(); ++face) s += lifting_.source(face, faces[static_cast<std::size_t>(face - 1)]);
    out.source.push_back(std::move(s));
  }
  return out;
}

void HumOperator::controls(const ElasticState& data, std::vector<Eigen::MatrixXd>& f,
                           std::vector<std::vector<Eigen::MatrixXd>>& gv) const {
  const auto M = static_cast<std::size_t>(prop_->steps() + 1);
  f.assign(M, Eigen::MatrixXd());
  gv.assign(M, {});
  integrate_adjoint(*prop_, data, [&](int n, const ElasticState& s) {
    observe(s, f[static_cast<std::size_t>(n)], gv[static_cast<std::size_t>(n)]);
  });
}

ElasticState HumOperator::apply(const ElasticState& data) const {
  std::vector<Eigen::MatrixXd> f;
  std::vector<std::vector<Eigen::MatrixXd>> gv;
  controls(data, f, gv);
  const BoundaryForcing forc = forcing(f, gv);
  const int M = prop_->steps();
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(prop_->dofs());
  ElasticState y(prop_->unpack(zero, &forc.dirichlet.back()), VectorField(prop_->grid()), M * prop_->dt());
  for (int n = M; n > 0; --n) prop_->step_controlled(y, forc, n, true);
  return ElasticState(prop_->unpack(prop_->pack(y.velocity)), prop_->unpack(-prop_->pack(y.displacement)));
}

Eigen::VectorXd HumOperator::apply_packed(const Eigen::VectorXd& x) const {
  const Index n = prop_->dofs();
  const ElasticState out = apply(ElasticState(prop_->unpack(x.head(n)), prop_->unpack(x.tail(n))));
  Eigen::VectorXd r(2 * n);
  r << prop_->pack(out.displacement), prop_->pack(out.velocity);
  return r;
}

double HumOperator::pairing(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
  const Index n = prop_->dofs();
  const auto& W = prop_->mass();
  return (W.array() * a.head(n).array() * b.head(n).array()).sum() +
         (W.array() * a.tail(n).array() * b.tail(n).array()).sum();
}

ElasticState gramian_apply(const ElasticState& adjoint_data, const ElasticPropagator& prop, double weight_g) {
  return HumOperator(prop, weight_g).apply(adjoint_data);
}

double state_norm(const ElasticPropagator& prop, const VectorField& u, const VectorField& v) {
  const Eigen::VectorXd pu = prop.pack(u);
  const Eigen::VectorXd wv = prop.mass().cwiseProduct(prop.pack(v));
  double s = (prop.mass().array() * pu.array().square()).sum();
  if (wv.squaredNorm() > 0.0) s += wv.dot(prop.stiffness_solve(wv));
  return std::sqrt(std::max(0.0, s));
}

ElasticState apply_control(const ControlResult& result, const VectorField& u0, const VectorField& u1,
                           const ElasticPropagator& prop) {
  const LiftingKernels lift = build_lifting(prop.grid(), prop.material());
  const auto& g = *prop.grid();
  BoundaryForcing forc;
  forc.steps = prop.steps();
  forc.dt = prop.dt();
  forc.dirichlet = result.f;
  bool any_g = false;
  for (const auto& faces : result.g)
    for (const auto& m : faces) any_g = any_g || m.cwiseAbs().maxCoeff() > 0.0;
  if (any_g) {
    for (const auto& faces : result.g) {
      Eigen::MatrixXd s = Eigen::MatrixXd::Zero(g.size(), g.dim());
      for (int face = 1; face <= g.face_count(); ++face) s += lift.source(face, faces[static_cast<std::size_t>(face - 1)]);
      forc.source.push_back(std::move(s));
    }
  }
  const Eigen::MatrixXd rate = forc.dirichlet_rate(0);
  ElasticState st(prop.unpack(prop.pack(u0), &forc.dirichlet.front()), prop.unpack(prop.pack(u1), &rate));
  for (int n = 0; n < prop.steps(); ++n) prop.step_controlled(st, forc, n, false);
  return st;
}

namespace {

double energy_norm_sq(const ElasticPropagator& prop, const Eigen::VectorXd& x) {
  const Index n = prop.dofs();
  return x.head(n).dot(prop.stiffness_apply(x.head(n))) + (prop.mass().array() * x.tail(n).array().square()).sum();
}

// Riesz map of the W pairing into the energy inner product.
Eigen::VectorXd riesz(const ElasticPropagator& prop, const Eigen::VectorXd& r) {
  const Index n = prop.dofs();
  Eigen::VectorXd z(2 * n);
  z.head(n) = prop.stiffness_solve(prop.mass().cwiseProduct(r.head(n)));
  z.tail(n) = r.tail(n);
  return z;
}

}  // namespace

ControlResult solve_control(const VectorField& u0, const VectorField& u1, const ElasticPropagator& prop,
                            const ControlOptions& opts) {
  if (!(opts.tol > 0.0)) throw std::invalid_argument("tol must be positive");
  if (opts.max_iter < 1) throw std::invalid_argument("max_iter must be at least 1");
  if (prop.spec().scheme != Scheme::Newmark) throw std::invalid_argument("control synthesis requires the Newmark scheme");
  const HumOperator hum(prop, opts.weight_g, opts.mode);
  const Index n = prop.dofs();

  ControlResult res;
  res.grid = prop.grid();
  res.dt = prop.dt();
  res.steps = prop.steps();

  Eigen::VectorXd b(2 * n);
  b << prop.pack(u1), -prop.pack(u0);
  const Eigen::VectorXd bt = riesz(prop, b);
  const double bnorm = std::sqrt(std::max(0.0, energy_norm_sq(prop, bt)));

  Eigen::VectorXd x = Eigen::VectorXd::Zero(2 * n);
  if (bnorm > 0.0) {
    Eigen::VectorXd r = bt;
    Eigen::VectorXd Lr = hum.apply_packed(r);

    // Symmetry probe against a fixed pseudo-random direction.
    std::mt19937_64 rng(0x5eed);
    std::normal_distribution<double> nd;
    Eigen::VectorXd y(2 * n);
    for (Index i = 0; i < y.size(); ++i) y[i] = nd(rng);
    const Eigen::VectorXd Ly = hum.apply_packed(y);
    const double a1 = hum.pairing(y, Lr), a2 = hum.pairing(r, Ly);
    const double scale = std::sqrt(std::abs(hum.pairing(r, Lr)) * std::abs(hum.pairing(y, Ly)));
    if (std::abs(a1 - a2) > opts.symmetry_tol * scale) {
      std::ostringstream msg;
      msg << "Gramian symmetry defect " << std::abs(a1 - a2) / scale << " exceeds " << opts.symmetry_tol;
      throw GramianAsymmetryError(msg.str());
    }

    Eigen::VectorXd Tr = riesz(prop, Lr);
    Eigen::VectorXd p = r, Lp = Lr, Tp = Tr;
    double rho = hum.pairing(r, Lr);
    double best = 1.0;
    Eigen::VectorXd best_x = x;
    for (int it = 1; it <= opts.max_iter; ++it) {
      const double alpha = rho / hum.pairing(Tp, Lp);
      x += alpha * p;
      r -= alpha * Tp;
      const double rel = std::sqrt(std::max(0.0, energy_norm_sq(prop, r))) / bnorm;
      res.residual_history.push_back(rel);
      res.cg_iterations = it;
      if (opts.progress) opts.progress(it, rel);
      if (rel <= best) {
        best = rel;
        best_x = x;
      }
      if (rel <= opts.tol) {
        res.converged = true;
        break;
      }
      if (it == opts.max_iter) break;
      Lr = hum.apply_packed(r);
      Tr = riesz(prop, Lr);
      const double rho_next = hum.pairing(r, Lr);
      const double beta = rho_next / rho;
      rho = rho_next;
      p = r + beta * p;
      Lp = Lr + beta * Lp;
      Tp = Tr + beta * Tp;
    }
    x = best_x;
    res.cg_residual = best;
  } else {
    res.converged = true;
  }

  hum.controls(ElasticState(prop.unpack(x.head(n)), prop.unpack(x.tail(n))), res.f, res.g);
  if (bnorm > 0.0) {
    const ElasticState fin = apply_control(res, u0, u1, prop);
    res.final_state_norm_rel = state_norm(prop, fin.displacement, fin.velocity) / bnorm;
  }
  const ControlNorms norms = control_norms(res);
  res.f_norm = norms.f_norm;
  res.g_norm = norms.g_norm;
  return res;
}

ControlNorms control_norms(const ControlResult& result) {
  ControlNorms out;
  if (!result.grid || result.f.empty()) return out;
  const auto& g = *result.grid;
  const int M = static_cast<int>(result.f.size()) - 1;
  double fs = 0.0, gs = 0.0;
  for (int n = 0; n <= M; ++n) {
    double fn = 0.0, gn = 0.0;
    for (int face : g.gamma_faces()) fn += face_l2_norm_sq(result.f_trace(n, face));
    if (!result.g.empty())
      for (int face = 1; face <= g.face_count(); ++face) gn += face_l2_norm_sq(result.g_trace(n, face));
    out.f_trace.push_back(std::sqrt(fn));
    out.g_trace.push_back(std::sqrt(gn));
    const double w = result.dt * ((n == 0 || n == M) ? 0.5 : 1.0);
    fs += w * fn;
    gs += w * gn;
  }
  out.f_norm = std::sqrt(fs);
  out.g_norm = std::sqrt(gs);
  return out;
}

}  // namespace specel
