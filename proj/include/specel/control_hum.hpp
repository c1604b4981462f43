#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "specel/dynamics.hpp"

namespace specel {

/// Boundary lifting of the auxiliary controls g_j.
///
/// For face j with axis a, G_j(P_i) = A_a htilde(x_a(P_i)) g_j(projection of
/// P_i onto face j) at interior nodes P_i, with htilde = h1_tilde on {x_a = +1}
/// faces and h2_tilde on {x_a = -1} faces.
struct LiftingKernels {
  GridPtr grid;
  Material material;
  Eigen::VectorXd h1;        // (1 + s)/2 at interior nodes, 0 at s = +-1
  Eigen::VectorXd h2;        // (1 - s)/2 at interior nodes, 0 at s = +-1
  Eigen::VectorXd h1_tilde;  // (h1'' + Psi_N' / w_N) / sqrt(w_N) at every node
  Eigen::VectorXd h2_tilde;  // (h2'' - Psi_0' / w_0) / sqrt(w_0) at every node
  std::vector<Eigen::MatrixXd> A;  // A[a] = diag(mu + (mu + lambda) delta_{ka})

  /// Interior source (size x d, zero on boundary nodes) produced by the face
  /// values `g` (face_size x d, face order) on face `face`.
  Eigen::MatrixXd source(int face, const Eigen::MatrixXd& g) const;
  /// Transpose of source(): face values from a full-grid field.
  Eigen::MatrixXd source_transpose(int face, const Eigen::MatrixXd& y) const;

  /// Per face: face position of the projection of every interior node.
  std::vector<std::vector<Index>> projection;
};

LiftingKernels build_lifting(GridPtr grid, const Material& m);

/// Raised when the Gramian symmetry probe fails.
class GramianAsymmetryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// How adjoint states are turned into controls.
///  Duality: c = -D^{-1} H^T W phi, which keeps the Gramian symmetric.
///  Traction: f = traction, g = weight_g * second normal term, read off the faces.
enum class ObservationMode { Duality, Traction };

struct ControlOptions {
  double tol = 1e-6;
  int max_iter = 200;
  double weight_g = 1.0;
  double symmetry_tol = 1e-6;
  ObservationMode mode = ObservationMode::Duality;
  /// Called after every CG iteration with (iteration, relative residual).
  std::function<void(int, double)> progress;
};

/// Time samples t_n = n dt, n = 0..steps, of the boundary controls.
struct ControlResult {
  GridPtr grid;
  double dt = 0.0;
  int steps = 0;
  /// Dirichlet control, full grid (size x d); nonzero only at nodes of Gamma.
  std::vector<Eigen::MatrixXd> f;
  /// g[n][face - 1]: face_size x d values of g_face at t_n.
  std::vector<std::vector<Eigen::MatrixXd>> g;
  double f_norm = 0.0;
  double g_norm = 0.0;
  double final_state_norm_rel = 0.0;
  int cg_iterations = 0;
  double cg_residual = 0.0;
  bool converged = false;
  std::vector<double> residual_history;

  /// f at time sample n restricted to a face.
  FaceTrace f_trace(int n, int face) const;
  FaceTrace g_trace(int n, int face) const;
};

struct ControlNorms {
  double f_norm = 0.0;
  double g_norm = 0.0;
  /// |f(t_n)|_{L2(Gamma)} and |g(t_n)|_{L2(dOmega)} per time sample.
  std::vector<double> f_trace;
  std::vector<double> g_trace;
};

/// Maps adjoint initial data to control samples and control samples to the
/// forcing of the controlled system. Controls are c = -D^{-1} H^T W phi, where H
/// is the forcing produced by the controls on interior dofs, W the quadrature
/// weights and D the boundary quadrature weights of each control value. This
/// makes the Gramian symmetric in the W pairing.
class HumOperator {
 public:
  HumOperator(const ElasticPropagator& prop, double weight_g, ObservationMode mode = ObservationMode::Duality);

  const ElasticPropagator& propagator() const { return *prop_; }
  const LiftingKernels& lifting() const { return lifting_; }

  /// Controls observed from an adjoint state with zero boundary values.
  void observe(const ElasticState& phi, Eigen::MatrixXd& f, std::vector<Eigen::MatrixXd>& g) const;
  /// Forcing samples for the controlled system.
  BoundaryForcing forcing(const std::vector<Eigen::MatrixXd>& f, const std::vector<std::vector<Eigen::MatrixXd>>& g) const;

  /// Adjoint trajectory from `data`, observed at every time sample.
  void controls(const ElasticState& data, std::vector<Eigen::MatrixXd>& f,
                std::vector<std::vector<Eigen::MatrixXd>>& g) const;

  /// Lambda(data) = (y_t(0), -y(0)) where y solves the controlled system
  /// backward from rest at T.
  ElasticState apply(const ElasticState& data) const;
  /// Same on packed interior vectors [displacement; velocity].
  Eigen::VectorXd apply_packed(const Eigen::VectorXd& x) const;
  /// <a, b> = a_u^T W b_u + a_v^T W b_v on packed vectors.
  double pairing(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;

 private:
  const ElasticPropagator* prop_;
  LiftingKernels lifting_;
  double weight_g_;
  ObservationMode mode_;
  std::vector<Index> gamma_nodes_;
  Eigen::VectorXd gamma_weight_;  // D for each Gamma node
};

/// Gramian of the duality construction; see HumOperator::apply.
ElasticState gramian_apply(const ElasticState& adjoint_data, const ElasticPropagator& prop, double weight_g);

/// HUM control driving (u0, u1) to rest at T. Conjugate residuals on the
/// Gramian in the discrete energy inner product.
ControlResult solve_control(const VectorField& u0, const VectorField& u1, const ElasticPropagator& prop,
                            const ControlOptions& opts = {});

/// Space-time L2 norms by exact face quadrature and the trapezoid rule in time.
ControlNorms control_norms(const ControlResult& result);

/// Integrates the controlled system forward from (u0, u1) under `result`'s controls.
ElasticState apply_control(const ControlResult& result, const VectorField& u0, const VectorField& u1,
                           const ElasticPropagator& prop);

/// sqrt(|u|_W^2 + (W v)^T S^{-1} (W v)) over interior dofs: the norm in which
/// the controlled state is measured.
double state_norm(const ElasticPropagator& prop, const VectorField& u, const VectorField& v);

}  // namespace specel
