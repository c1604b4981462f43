#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "specel/legendre1d.hpp"

namespace specel {

using Index = Eigen::Index;

/// Tensor-product LGL grid on (-1,1)^d with the same degree in every variable.
///
/// Nodes are flattened lexicographically: the multi-index (k_1, ..., k_d) maps
/// to sum_a k_a (N+1)^(d-1-a), so the last axis varies fastest.
///
/// Faces use 1-based ids: face j <= d is {x_j = +1}, face d+j is {x_j = -1}.
/// The observation boundary Gamma is the union of faces 1..d.
class TensorGrid {
 public:
  TensorGrid(int dim, int degree);

  int dim() const { return dim_; }
  int degree() const { return rule_.degree; }
  int points_per_axis() const { return rule_.degree + 1; }
  Index size() const { return size_; }

  const LglRule& rule() const { return rule_; }
  /// Degree N+1 rule: exact for per-variable degree 2N+1, which covers
  /// products of two degree-N polynomials.
  const LglRule& fine_rule() const { return fine_; }
  /// Interpolation from the N+1 nodes to the fine rule's nodes.
  const Eigen::MatrixXd& fine_interp() const { return fine_interp_; }
  /// Product weights of the fine rule over the volume and over one face.
  const Eigen::VectorXd& fine_weights() const { return fine_weights_; }
  const Eigen::VectorXd& fine_face_weights() const { return fine_face_weights_; }

  /// Product weights omega_i = prod_a omega_{k_a}.
  const Eigen::VectorXd& weights() const { return weights_; }
  /// Coordinates of every node, one row per node.
  const Eigen::MatrixXd& coordinates() const { return coords_; }

  std::vector<int> multi_index(Index flat) const;
  Index flat_index(std::span<const int> k) const;
  Index stride(int axis) const { return strides_[static_cast<std::size_t>(axis)]; }

  const std::vector<Index>& interior_indices() const { return interior_; }
  const std::vector<Index>& boundary_indices() const { return boundary_; }
  bool is_interior(Index flat) const { return interior_mask_[static_cast<std::size_t>(flat)] != 0; }
  /// Position of an interior node inside interior_indices(), or -1.
  Index interior_position(Index flat) const { return interior_pos_[static_cast<std::size_t>(flat)]; }

  int face_count() const { return 2 * dim_; }
  /// Flat indices of the nodes on face j, in the face's own lexicographic order
  /// over the remaining axes. Edge and corner nodes appear in every face they lie on.
  const std::vector<Index>& face_indices(int face) const;
  int face_axis(int face) const;
  /// +1 for {x = +1} faces, -1 for {x = -1} faces; equals the outward normal component.
  int face_side(int face) const;
  Index face_size() const { return face_size_; }
  /// (d-1)-dimensional product LGL weights in face order.
  const Eigen::VectorXd& face_weights() const { return face_weights_; }
  std::vector<int> gamma_faces() const;

 private:
  void check_face(int face) const;

  int dim_;
  LglRule rule_;
  LglRule fine_;
  Eigen::MatrixXd fine_interp_;
  Eigen::VectorXd fine_weights_;
  Eigen::VectorXd fine_face_weights_;
  Index size_ = 0;
  Index face_size_ = 0;
  std::vector<Index> strides_;
  Eigen::VectorXd weights_;
  Eigen::MatrixXd coords_;
  std::vector<Index> interior_;
  std::vector<Index> boundary_;
  std::vector<std::uint8_t> interior_mask_;
  std::vector<Index> interior_pos_;
  std::vector<std::vector<Index>> faces_;
  Eigen::VectorXd face_weights_;
};

using GridPtr = std::shared_ptr<const TensorGrid>;

GridPtr make_grid(int dim, int degree);

/// Nodal representation of an element of P_N(Omega).
struct ScalarGridFn {
  GridPtr grid;
  Eigen::VectorXd values;

  ScalarGridFn(GridPtr g, Eigen::VectorXd v);
  static ScalarGridFn from_function(GridPtr g, const std::function<double(std::span<const double>)>& f);
};

/// Applies a 1-D operator along one axis of a tensor array with the given extents.
/// M.cols() must equal extents[axis]; the result has extents[axis] = M.rows().
Eigen::VectorXd tensor_apply(const Eigen::MatrixXd& M, const Eigen::Ref<const Eigen::VectorXd>& values,
                             std::span<const Index> extents, int axis);

/// Values of the degree-N interpolant on the fine tensor rule.
Eigen::VectorXd to_fine_grid(const TensorGrid& grid, const Eigen::Ref<const Eigen::VectorXd>& values);

/// (w, z)_N = sum_i w(P_i) z(P_i) omega_i.
double discrete_inner_product(const ScalarGridFn& w, const ScalarGridFn& z);
double discrete_inner_product(const TensorGrid& grid, const Eigen::Ref<const Eigen::VectorXd>& w,
                              const Eigen::Ref<const Eigen::VectorXd>& z);

/// Exact L2(Omega) inner product of the two degree-N interpolants.
double exact_inner_product(const TensorGrid& grid, const Eigen::Ref<const Eigen::VectorXd>& w,
                           const Eigen::Ref<const Eigen::VectorXd>& z);

/// |p|_{L2} of the interpolant of w.
double l2_norm_exact(const ScalarGridFn& w);

struct NormRatioRange {
  double min_ratio = 0.0;
  double max_ratio = 0.0;
};

/// Extremal ||p||_N^2 / |p|_{L2}^2 over `samples` random polynomials with
/// independent standard normal nodal values.
NormRatioRange norm_equivalence_report(const TensorGrid& grid, int samples, std::uint64_t seed);

/// Upper constant of the discrete/continuous L2 equivalence, (2 + 1/N)^d.
double norm_equivalence_upper(int dim, int degree);

/// Restriction of nodal values to the nodes of a face, in face order.
Eigen::VectorXd face_restrict(const TensorGrid& grid, const Eigen::Ref<const Eigen::VectorXd>& values, int face);

/// Exact integral over a face of the product of two face polynomials, given as
/// face-ordered nodal values.
double face_exact_inner_product(const TensorGrid& grid, const Eigen::Ref<const Eigen::VectorXd>& a,
                                const Eigen::Ref<const Eigen::VectorXd>& b);

}  // namespace specel
