#pragma once

#include <Eigen/Dense>

#include "specel/tensorgrid.hpp"

namespace specel {

/// Lame parameters of an isotropic homogeneous medium.
struct Material {
  double lambda = 0.5;
  double mu = 4.0;

  /// Throws std::invalid_argument unless both parameters are strictly positive.
  void validate() const;
};

/// d-component nodal field; column c holds component c at every grid node.
struct VectorField {
  GridPtr grid;
  Eigen::MatrixXd values;

  explicit VectorField(GridPtr g);
  VectorField(GridPtr g, Eigen::MatrixXd v);

  int dim() const { return grid->dim(); }
  auto component(int c) { return values.col(c); }
  auto component(int c) const { return values.col(c); }
};

/// Per-node values of a vector quantity on one face, in face order.
struct FaceTrace {
  GridPtr grid;
  int face = 1;
  Eigen::MatrixXd values;  // face_size x d
};

/// First derivative along `axis` of a scalar nodal array.
Eigen::VectorXd partial(const TensorGrid& grid, const Eigen::Ref<const Eigen::VectorXd>& v, int axis);
/// Second derivative along `axis` (exact second-derivative collocation matrix).
Eigen::VectorXd partial2(const TensorGrid& grid, const Eigen::Ref<const Eigen::VectorXd>& v, int axis);
/// d_a d_b v; uses the second-derivative matrix when a == b.
Eigen::VectorXd mixed_partial(const TensorGrid& grid, const Eigen::Ref<const Eigen::VectorXd>& v, int a, int b);
Eigen::VectorXd divergence(const VectorField& u);

/// mu Laplace(u) + (lambda + mu) grad div u at every grid node.
VectorField lame_apply(const Material& m, const VectorField& u);
/// Transpose of lame_apply as a linear map on nodal arrays (no weights).
VectorField lame_apply_transpose(const Material& m, const VectorField& y);

/// mu du/dnu + (lambda + mu) nu div u on face j.
FaceTrace traction(const Material& m, const VectorField& u, int face);
/// mu d^2u/dnu^2 + (lambda + mu) nu d(div u)/dnu on face j.
FaceTrace second_normal_term(const Material& m, const VectorField& u, int face);

/// Exact surface integral of |trace|^2 over the face.
double face_l2_norm_sq(const FaceTrace& t);

}  // namespace specel
