#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "specel/elastic_fields.hpp"

namespace specel {

enum class Scheme { Newmark, RK4 };

Scheme parse_scheme(const std::string& name);
std::string to_string(Scheme s);

/// Uniform time grid on [0, T]. The step is shrunk so that T/dt is an integer.
struct TimeGridSpec {
  double T = 3.0;
  double dt = 0.01;
  Scheme scheme = Scheme::Newmark;

  void validate() const;
  int steps() const;
  double step() const { return T / steps(); }
};

struct ElasticState {
  VectorField displacement;
  VectorField velocity;
  double time = 0.0;

  explicit ElasticState(GridPtr grid) : displacement(grid), velocity(grid) {}
  ElasticState(VectorField u, VectorField v, double t = 0.0)
      : displacement(std::move(u)), velocity(std::move(v)), time(t) {}

  const GridPtr& grid() const { return displacement.grid; }
};

/// Time samples of the Dirichlet data on boundary nodes and of the interior
/// source, one full-grid (size x d) matrix per time node t_n = n dt, n = 0..steps.
/// Empty vectors stand for zero data.
struct BoundaryForcing {
  int steps = 0;
  double dt = 0.0;
  std::vector<Eigen::MatrixXd> dirichlet;
  std::vector<Eigen::MatrixXd> source;

  /// Throws if sample counts disagree with the step count or the Dirichlet
  /// data is nonzero on boundary nodes outside Gamma.
  void validate(const TensorGrid& grid) const;
  /// Second-order finite-difference time derivative of the Dirichlet data.
  Eigen::MatrixXd dirichlet_rate(int n) const;
};

/// Signals an explicit-scheme blow-up (energy growth beyond 10x).
class InstabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Semi-discrete elasticity operators restricted to interior degrees of freedom
/// together with the time integrator. Interior dofs are packed component-major:
/// entry c * n_interior + p is component c at interior_indices()[p].
///
/// With W the diagonal of quadrature weights and K the interior block of the
/// collocation Lame operator, S = -W K is symmetric positive definite, so the
/// Newmark (average acceleration) matrix W + dt^2/4 S is factored by Cholesky
/// once and reused for every step in both time directions.
class ElasticPropagator {
 public:
  ElasticPropagator(GridPtr grid, Material m, TimeGridSpec spec);

  const GridPtr& grid() const { return grid_; }
  const Material& material() const { return material_; }
  const TimeGridSpec& spec() const { return spec_; }
  double dt() const { return dt_; }
  int steps() const { return steps_; }
  Index dofs() const { return mass_.size(); }

  /// Quadrature weights per interior dof.
  const Eigen::VectorXd& mass() const { return mass_; }
  Eigen::VectorXd pack(const VectorField& u) const;
  /// Interior values from `x`, boundary values from `boundary` (zero if null).
  VectorField unpack(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::MatrixXd* boundary = nullptr) const;

  /// K x: interior rows of the Lame operator applied to a field with zero boundary values.
  Eigen::VectorXd interior_operator(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  /// S x = -W K x.
  Eigen::VectorXd stiffness_apply(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  /// S^{-1} r (Cholesky of S, built on first use).
  Eigen::VectorXd stiffness_solve(const Eigen::Ref<const Eigen::VectorXd>& r) const;
  /// Dense interior operator K assembled from Kronecker factors.
  Eigen::MatrixXd assemble_interior_operator() const;

  /// Advances the homogeneous system (zero Dirichlet data, no source) by one step.
  void step_adjoint(ElasticState& state) const;
  /// Advances the forced system from sample n to n+1 (or n-1 when reverse).
  /// The new boundary values equal the Dirichlet samples exactly.
  void step_controlled(ElasticState& state, const BoundaryForcing& forcing, int n, bool reverse) const;

  /// Largest eigenvalue magnitude of K.
  double spectral_radius() const;
  /// Largest RK4 step for the measured spectrum (|i omega dt| <= 2 sqrt 2).
  double rk4_step_limit() const;

 private:
  Eigen::VectorXd boundary_coupling(const Eigen::MatrixXd& boundary) const;
  Eigen::VectorXd acceleration(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::MatrixXd* boundary,
                               const Eigen::MatrixXd* source) const;
  void newmark(ElasticState& state, const BoundaryForcing* forcing, int n, bool reverse) const;
  void rk4(ElasticState& state, const BoundaryForcing* forcing, int n, bool reverse) const;

  GridPtr grid_;
  Material material_;
  TimeGridSpec spec_;
  double dt_;
  int steps_;
  Eigen::VectorXd mass_;
  Eigen::LLT<Eigen::MatrixXd> newmark_llt_;
  mutable std::shared_ptr<const Eigen::LLT<Eigen::MatrixXd>> stiffness_llt_;
};

/// E^N = 1/2 (||u_t||_N^2 + mu ||grad u||_N^2 + (lambda + mu) ||div u||_N^2).
double discrete_energy(const ElasticState& state, const Material& m);

/// max over interior nodes and components of |accel - Lame(u)|.
double interior_residual(const ElasticState& state, const VectorField& accel, const Material& m);

/// Integrates the homogeneous system over spec.steps() steps and calls
/// `observer(n, state)` for n = 0..steps. RK4 runs throw InstabilityError
/// once the energy exceeds 10x its initial value.
void integrate_adjoint(const ElasticPropagator& prop, ElasticState state,
                       const std::function<void(int, const ElasticState&)>& observer);

}  // namespace specel
