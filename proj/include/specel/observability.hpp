#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "specel/dynamics.hpp"

namespace specel {

/// Relative weights of the two boundary terms in the observation functional.
struct ObservationWeights {
  double traction = 1.0;
  double second = 1.0;
};

struct ObservabilityReport {
  double lhs_norm_sq = 0.0;    // 2 E^N(0)
  double term_traction = 0.0;  // int_0^T int_Gamma |traction|^2
  double term_second = 0.0;    // int_0^T int_{dOmega} |second normal term|^2
  double ratio = 0.0;          // NaN for zero data
  double T = 0.0;
  double threshold = 0.0;
  int N = 0;
};

struct MultiplierDiagnostics {
  double X = 0.0;
  double Y = 0.0;
  double interior_energy_integral = 0.0;
  double boundary_flux_integral = 0.0;
  double source_coupling_integral = 0.0;
  double energy0 = 0.0;
  /// (4 sqrt(d) / sqrt(mu)) E^N(0) - |X + (d-1)/2 Y|.
  double bound_slack = 0.0;
  /// |X + (d-1)/2 Y| + sqrt(d) flux + source - interior energy integral.
  double identity_slack = 0.0;
};

/// Minimal observation time 4 sqrt(d) (2 + 1/N)^d / sqrt(mu).
double observability_threshold(int dim, int degree, const Material& m);

/// Every snapshot t_n, n = 0..steps, of the homogeneous trajectory.
std::vector<ElasticState> record_trajectory(const ElasticPropagator& prop, const ElasticState& initial);

/// Integrates the homogeneous system and evaluates both boundary terms with
/// exact face quadrature and the trapezoid rule in time.
ObservabilityReport observe_trajectory(const ElasticPropagator& prop, const ElasticState& initial,
                                       ObservationWeights weights = {});

/// Multiplier quantities with m(x) = x + (1, ..., 1), evaluated by exact
/// spatial quadrature and the trapezoid rule in time.
MultiplierDiagnostics multiplier_diagnostics(const std::vector<ElasticState>& trajectory, const Material& m,
                                             double dt);

struct LanczosResult {
  double value = 0.0;
  Eigen::VectorXd vector;
  /// Smallest Ritz value after each iteration; non-increasing.
  std::vector<double> history;
};

/// Smallest eigenvalue of an operator self-adjoint in the inner product
/// <x, y> = x^T diag(metric) y, by Lanczos with full reorthogonalization.
LanczosResult lanczos_smallest(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& apply,
                               const Eigen::VectorXd& metric, const Eigen::VectorXd& start, int iterations);

/// Observation functional in scaled modal coordinates, where 2 E^N(0) is the
/// identity. Exact for the Newmark trajectory, which rotates every eigenmode.
class ModalObservation {
 public:
  ModalObservation(const ElasticPropagator& prop, ObservationWeights weights = {});

  const Eigen::MatrixXd& form() const { return form_; }
  /// Initial data for a vector of scaled modal coordinates.
  ElasticState to_state(const Eigen::VectorXd& coords) const;
  Eigen::VectorXd from_state(const ElasticState& s) const;

 private:
  GridPtr grid_;
  Eigen::VectorXd omega_;
  Eigen::VectorXd sqrt_mass_;
  Eigen::MatrixXd basis_;  // W^{-1/2} V
  Eigen::MatrixXd form_;
};

struct WorstCase {
  double ratio = 0.0;
  ElasticState data;
  std::vector<double> history;
};

/// Approximate minimum over initial data of (observation) / (2 E^N(0)).
/// Requires the Newmark scheme.
WorstCase worst_case_ratio(const ElasticPropagator& prop, int iterations, ObservationWeights weights = {},
                           std::uint64_t seed = 1);

/// Exact minimum by a dense eigensolver on the modal form. Requires Newmark.
WorstCase worst_case_ratio_exact(const ElasticPropagator& prop, ObservationWeights weights = {});

}  // namespace specel
