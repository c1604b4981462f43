#include "specel/dynamics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace specel {

Scheme parse_scheme(const std::string& name) {
  std::string s = name;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (s == "newmark") return Scheme::Newmark;
  if (s == "rk4") return Scheme::RK4;
  throw std::invalid_argument("unknown time scheme: " + name);
}

std::string to_string(Scheme s) { return s == Scheme::Newmark ? "newmark" : "rk4"; }

void TimeGridSpec::validate() const {
  if (!(T > 0.0) || !std::isfinite(T)) throw std::invalid_argument("final time must be positive");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("time step must be positive");
  if (dt > T) throw std::invalid_argument("time step exceeds the final time");
}

int TimeGridSpec::steps() const {
  validate();
  return std::max(1, static_cast<int>(std::ceil(T / dt - 1e-9)));
}

void BoundaryForcing::validate(const TensorGrid& grid) const {
  if (steps < 1 || !(dt > 0.0)) throw std::invalid_argument("forcing needs a positive step count and step");
  auto check_samples = [&](const std::vector<Eigen::MatrixXd>& s, const char* what) {
    if (s.empty()) return;
    if (static_cast<int>(s.size()) != steps + 1)
      throw std::invalid_argument(std::string(what) + ": expected steps + 1 samples");
    for (const auto& m : s)
      if (m.rows() != grid.size() || m.cols() != grid.dim())
        throw std::invalid_argument(std::string(what) + ": sample shape mismatch");
  };
  check_samples(dirichlet, "dirichlet");
  check_samples(source, "source");
  const int N = grid.degree();
  for (Index b : grid.boundary_indices()) {
    const auto k = grid.multi_index(b);
    if (std::find(k.begin(), k.end(), N) != k.end()) continue;
    for (const auto& m : dirichlet)
      if (m.row(b).cwiseAbs().maxCoeff() != 0.0)
        throw std::invalid_argument("dirichlet data must vanish off Gamma");
  }
}

Eigen::MatrixXd BoundaryForcing::dirichlet_rate(int n) const {
  if (dirichlet.empty()) return {};
  const auto& f = dirichlet;
  if (steps == 1) return (f[1] - f[0]) / dt;
  if (n == 0) return (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dt);
  if (n == steps) return (3.0 * f[static_cast<std::size_t>(n)] - 4.0 * f[static_cast<std::size_t>(n - 1)] +
                          f[static_cast<std::size_t>(n - 2)]) / (2.0 * dt);
  return (f[static_cast<std::size_t>(n + 1)] - f[static_cast<std::size_t>(n - 1)]) / (2.0 * dt);
}

namespace {

Eigen::MatrixXd kron_axes(const std::vector<const Eigen::MatrixXd*>& factors, Index m) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Ones(1, 1);
  for (const auto* f : factors) {
    const Eigen::MatrixXd A = f ? *f : Eigen::MatrixXd::Identity(m, m);
    Eigen::MatrixXd next(out.rows() * A.rows(), out.cols() * A.cols());
    for (Index i = 0; i < out.rows(); ++i)
      for (Index j = 0; j < out.cols(); ++j)
        next.block(i * A.rows(), j * A.cols(), A.rows(), A.cols()) = out(i, j) * A;
    out = std::move(next);
  }
  return out;
}

}  // namespace

ElasticPropagator::ElasticPropagator(GridPtr grid, Material m, TimeGridSpec spec)
    : grid_(std::move(grid)), material_(m), spec_(spec) {
  if (!grid_) throw std::invalid_argument("null grid");
  material_.validate();
  steps_ = spec_.steps();
  dt_ = spec_.step();
  const auto& inner = grid_->interior_indices();
  const Index n = static_cast<Index>(inner.size());
  const int d = grid_->dim();
  mass_.resize(n * d);
  for (int c = 0; c < d; ++c)
    for (Index p = 0; p < n; ++p) mass_[c * n + p] = grid_->weights()[inner[static_cast<std::size_t>(p)]];

  if (spec_.scheme == Scheme::Newmark) {
    Eigen::MatrixXd A = -(dt_ * dt_ / 4.0) * (mass_.asDiagonal() * assemble_interior_operator());
    A = 0.5 * (A + A.transpose()).eval();
    A.diagonal() += mass_;
    newmark_llt_.compute(A);
    if (newmark_llt_.info() != Eigen::Success) throw std::runtime_error("Newmark matrix is not positive definite");
  }
}

Eigen::VectorXd ElasticPropagator::pack(const VectorField& u) const {
  const auto& inner = grid_->interior_indices();
  const Index n = static_cast<Index>(inner.size());
  Eigen::VectorXd x(n * grid_->dim());
  for (int c = 0; c < grid_->dim(); ++c)
    for (Index p = 0; p < n; ++p) x[c * n + p] = u.values(inner[static_cast<std::size_t>(p)], c);
  return x;
}

VectorField ElasticPropagator::unpack(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::MatrixXd* boundary) const {
  VectorField u(grid_);
  if (boundary && boundary->size() > 0) u.values = *boundary;
  const auto& inner = grid_->interior_indices();
  const Index n = static_cast<Index>(inner.size());
  for (int c = 0; c < grid_->dim(); ++c)
    for (Index p = 0; p < n; ++p) u.values(inner[static_cast<std::size_t>(p)], c) = x[c * n + p];
  return u;
}

Eigen::VectorXd ElasticPropagator::interior_operator(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return pack(lame_apply(material_, unpack(x)));
}

Eigen::VectorXd ElasticPropagator::stiffness_apply(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return -(mass_.array() * interior_operator(x).array()).matrix();
}

Eigen::VectorXd ElasticPropagator::stiffness_solve(const Eigen::Ref<const Eigen::VectorXd>& r) const {
  if (!stiffness_llt_) {
    Eigen::MatrixXd S = -(mass_.asDiagonal() * assemble_interior_operator());
    S = 0.5 * (S + S.transpose()).eval();
    auto llt = std::make_shared<Eigen::LLT<Eigen::MatrixXd>>(S);
    if (llt->info() != Eigen::Success) throw std::runtime_error("stiffness matrix is not positive definite");
    stiffness_llt_ = std::move(llt);
  }
  return stiffness_llt_->solve(r);
}

Eigen::MatrixXd ElasticPropagator::assemble_interior_operator() const {
  const int d = grid_->dim();
  const int N = grid_->degree();
  const Index m = N - 1;
  const Eigen::MatrixXd D1 = grid_->rule().diff1.block(1, 1, m, m);
  const Eigen::MatrixXd D2 = grid_->rule().diff2.block(1, 1, m, m);
  const Index n = static_cast<Index>(grid_->interior_indices().size());
  auto factors = [&](int a, const Eigen::MatrixXd* A, int b, const Eigen::MatrixXd* B) {
    std::vector<const Eigen::MatrixXd*> f(static_cast<std::size_t>(d), nullptr);
    f[static_cast<std::size_t>(a)] = A;
    if (b >= 0) f[static_cast<std::size_t>(b)] = B;
    return kron_axes(f, m);
  };
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
  for (int a = 0; a < d; ++a) lap += factors(a, &D2, -1, nullptr);

  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n * d, n * d);
  const double lm = material_.lambda + material_.mu;
  for (int c = 0; c < d; ++c) {
    for (int b = 0; b < d; ++b) {
      auto blk = K.block(c * n, b * n, n, n);
      if (b == c) {
        blk = material_.mu * lap + lm * factors(c, &D2, -1, nullptr);
      } else {
        blk = lm * factors(c, &D1, b, &D1);
      }
    }
  }
  return K;
}

Eigen::VectorXd ElasticPropagator::boundary_coupling(const Eigen::MatrixXd& boundary) const {
  VectorField f(grid_);
  for (Index b : grid_->boundary_indices()) f.values.row(b) = boundary.row(b);
  return pack(lame_apply(material_, f));
}

Eigen::VectorXd ElasticPropagator::acceleration(const Eigen::Ref<const Eigen::VectorXd>& x,
                                                const Eigen::MatrixXd* boundary,
                                                const Eigen::MatrixXd* source) const {
  Eigen::VectorXd a = pack(lame_apply(material_, unpack(x, boundary)));
  if (source && source->size() > 0) a += pack(VectorField(grid_, *source));
  return a;
}

void ElasticPropagator::step_adjoint(ElasticState& state) const {
  if (spec_.scheme == Scheme::Newmark)
    newmark(state, nullptr, 0, false);
  else
    rk4(state, nullptr, 0, false);
}

void ElasticPropagator::step_controlled(ElasticState& state, const BoundaryForcing& forcing, int n, bool reverse) const {
  const int next = reverse ? n - 1 : n + 1;
  if (n < 0 || n > forcing.steps || next < 0 || next > forcing.steps)
    throw std::out_of_range("forcing sample index out of range");
  if (spec_.scheme == Scheme::Newmark)
    newmark(state, &forcing, n, reverse);
  else
    rk4(state, &forcing, n, reverse);
}

namespace {

const Eigen::MatrixXd* sample(const std::vector<Eigen::MatrixXd>* s, int n) {
  if (!s || s->empty()) return nullptr;
  return &(*s)[static_cast<std::size_t>(n)];
}

}  // namespace

void ElasticPropagator::newmark(ElasticState& state, const BoundaryForcing* forcing, int n, bool reverse) const {
  const double h = reverse ? -dt_ : dt_;
  const int next = reverse ? n - 1 : n + 1;
  const auto* fd = forcing ? &forcing->dirichlet : nullptr;
  const auto* fs = forcing ? &forcing->source : nullptr;
  const Eigen::MatrixXd* b0 = sample(fd, n);
  const Eigen::MatrixXd* b1 = sample(fd, next);
  const Eigen::MatrixXd* g0 = sample(fs, n);
  const Eigen::MatrixXd* g1 = sample(fs, next);

  const Eigen::VectorXd u = pack(state.displacement);
  const Eigen::VectorXd v = pack(state.velocity);
  const Eigen::VectorXd a0 = acceleration(u, b0 ? &state.displacement.values : nullptr, g0);

  Eigen::VectorXd drive = Eigen::VectorXd::Zero(u.size());
  if (b1) drive += boundary_coupling(*b1);
  if (g1) drive += pack(VectorField(grid_, *g1));

  const double q = h * h / 4.0;
  const Eigen::VectorXd rhs = u + h * v + q * (a0 + drive);
  const Eigen::VectorXd u1 = newmark_llt_.solve((mass_.array() * rhs.array()).matrix());
  const Eigen::VectorXd a1 = interior_operator(u1) + drive;
  const Eigen::VectorXd v1 = v + (h / 2.0) * (a0 + a1);

  state.displacement = unpack(u1, b1);
  if (b1) {
    const Eigen::MatrixXd rate = forcing->dirichlet_rate(next);
    state.velocity = unpack(v1, &rate);
  } else {
    state.velocity = unpack(v1);
  }
  state.time += h;
}

void ElasticPropagator::rk4(ElasticState& state, const BoundaryForcing* forcing, int n, bool reverse) const {
  const double h = reverse ? -dt_ : dt_;
  const int next = reverse ? n - 1 : n + 1;
  const auto* fd = forcing ? &forcing->dirichlet : nullptr;
  const auto* fs = forcing ? &forcing->source : nullptr;
  const Eigen::MatrixXd* b0 = sample(fd, n);
  const Eigen::MatrixXd* b1 = sample(fd, next);
  const Eigen::MatrixXd* g0 = sample(fs, n);
  const Eigen::MatrixXd* g1 = sample(fs, next);
  Eigen::MatrixXd bh, gh;
  if (b0) bh = 0.5 * (*b0 + *b1);
  if (g0) gh = 0.5 * (*g0 + *g1);
  const Eigen::MatrixXd* bm = b0 ? &bh : nullptr;
  const Eigen::MatrixXd* gm = g0 ? &gh : nullptr;

  const Eigen::VectorXd u = pack(state.displacement);
  const Eigen::VectorXd v = pack(state.velocity);
  const Eigen::VectorXd k1u = v;
  const Eigen::VectorXd k1v = acceleration(u, b0, g0);
  const Eigen::VectorXd k2u = v + 0.5 * h * k1v;
  const Eigen::VectorXd k2v = acceleration(u + 0.5 * h * k1u, bm, gm);
  const Eigen::VectorXd k3u = v + 0.5 * h * k2v;
  const Eigen::VectorXd k3v = acceleration(u + 0.5 * h * k2u, bm, gm);
  const Eigen::VectorXd k4u = v + h * k3v;
  const Eigen::VectorXd k4v = acceleration(u + h * k3u, b1, g1);
  const Eigen::VectorXd u1 = u + (h / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
  const Eigen::VectorXd v1 = v + (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);

  state.displacement = unpack(u1, b1);
  if (b1) {
    const Eigen::MatrixXd rate = forcing->dirichlet_rate(next);
    state.velocity = unpack(v1, &rate);
  } else {
    state.velocity = unpack(v1);
  }
  state.time += h;
}

double ElasticPropagator::spectral_radius() const {
  const Index n = dofs();
  if (n <= 1500) {
    // W^{-1/2} S W^{-1/2} is symmetric with the spectrum of -K.
    const Eigen::VectorXd s = mass_.cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd A = -(mass_.asDiagonal() * assemble_interior_operator());
    A = s.asDiagonal() * A * s.asDiagonal();
    A = 0.5 * (A + A.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  }
  Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
  double rho = 0.0;
  for (int it = 0; it < 2000; ++it) {
    Eigen::VectorXd y = interior_operator(x);
    const double num = (x.array() * mass_.array() * y.array()).sum();
    const double den = (x.array() * mass_.array() * x.array()).sum();
    const double next = std::abs(num / den);
    x = y / std::sqrt((y.array().square() * mass_.array()).sum());
    if (it > 10 && std::abs(next - rho) <= 1e-10 * next) return next;
    rho = next;
  }
  return rho;
}

double ElasticPropagator::rk4_step_limit() const { return 2.0 * std::sqrt(2.0) / std::sqrt(spectral_radius()); }

double discrete_energy(const ElasticState& state, const Material& m) {
  const auto& g = *state.grid();
  const auto& u = state.displacement;
  double kinetic = 0.0, grad = 0.0;
  for (int c = 0; c < g.dim(); ++c) {
    kinetic += discrete_inner_product(g, state.velocity.component(c), state.velocity.component(c));
    for (int a = 0; a < g.dim(); ++a) {
      const Eigen::VectorXd du = partial(g, u.component(c), a);
      grad += discrete_inner_product(g, du, du);
    }
  }
  const Eigen::VectorXd div = divergence(u);
  return 0.5 * (kinetic + m.mu * grad + (m.lambda + m.mu) * discrete_inner_product(g, div, div));
}

double interior_residual(const ElasticState& state, const VectorField& accel, const Material& m) {
  const VectorField L = lame_apply(m, state.displacement);
  double r = 0.0;
  for (Index i : state.grid()->interior_indices())
    r = std::max(r, (accel.values.row(i) - L.values.row(i)).cwiseAbs().maxCoeff());
  return r;
}

void integrate_adjoint(const ElasticPropagator& prop, ElasticState state,
                       const std::function<void(int, const ElasticState&)>& observer) {
  const bool watch = prop.spec().scheme == Scheme::RK4;
  const double e0 = watch ? discrete_energy(state, prop.material()) : 0.0;
  if (observer) observer(0, state);
  for (int n = 1; n <= prop.steps(); ++n) {
    prop.step_adjoint(state);
    if (watch) {
      const double e = discrete_energy(state, prop.material());
      if (!std::isfinite(e) || e > 10.0 * e0)
        throw InstabilityError("explicit scheme unstable: energy grew beyond 10x at step " + std::to_string(n));
    }
    if (observer) observer(n, state);
  }
}

}  // namespace specel
