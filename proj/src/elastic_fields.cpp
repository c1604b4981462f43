#include "specel/elastic_fields.hpp"

#include <stdexcept>
#include <vector>

namespace specel {

void Material::validate() const {
  if (!(lambda > 0.0) || !(mu > 0.0)) throw std::invalid_argument("Material: Lame parameters must be positive");
}

VectorField::VectorField(GridPtr g) : grid(std::move(g)) {
  if (!grid) throw std::invalid_argument("VectorField: null grid");
  values = Eigen::MatrixXd::Zero(grid->size(), grid->dim());
}

VectorField::VectorField(GridPtr g, Eigen::MatrixXd v) : grid(std::move(g)), values(std::move(v)) {
  if (!grid) throw std::invalid_argument("VectorField: null grid");
  if (values.rows() != grid->size() || values.cols() != grid->dim())
    throw std::invalid_argument("VectorField: shape does not match grid");
}

namespace {

std::vector<Index> extents(const TensorGrid& grid) {
  return std::vector<Index>(static_cast<std::size_t>(grid.dim()), grid.points_per_axis());
}

// Applies the operator in the (c, a) block of grad div: d_c d_a, optionally transposed.
Eigen::VectorXd grad_div_block(const TensorGrid& grid, const Eigen::Ref<const Eigen::VectorXd>& v, int c, int a,
                               bool transpose) {
  const auto ext = extents(grid);
  const LglRule& r = grid.rule();
  if (c == a) return tensor_apply(transpose ? Eigen::MatrixXd(r.diff2.transpose()) : r.diff2, v, ext, a);
  const Eigen::MatrixXd D = transpose ? Eigen::MatrixXd(r.diff1.transpose()) : r.diff1;
  return tensor_apply(D, tensor_apply(D, v, ext, a), ext, c);
}

VectorField lame_impl(const Material& m, const VectorField& u, bool transpose) {
  const TensorGrid& grid = *u.grid;
  const int d = grid.dim();
  const auto ext = extents(grid);
  const Eigen::MatrixXd D2 = transpose ? Eigen::MatrixXd(grid.rule().diff2.transpose()) : grid.rule().diff2;
  VectorField out(u.grid);
  for (int c = 0; c < d; ++c) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(grid.size());
    for (int a = 0; a < d; ++a) acc += tensor_apply(D2, u.values.col(c), ext, a);
    acc *= m.mu;
    // Forward: (grad div u)_c = sum_a d_c d_a u_a. Transposed: sum_a (d_a d_c)^T y_a.
    for (int a = 0; a < d; ++a) {
      acc += (m.lambda + m.mu) *
             (transpose ? grad_div_block(grid, u.values.col(a), a, c, true) : grad_div_block(grid, u.values.col(a), c, a, false));
    }
    out.values.col(c) = acc;
  }
  return out;
}

}  // namespace

Eigen::VectorXd partial(const TensorGrid& grid, const Eigen::Ref<const Eigen::VectorXd>& v, int axis) {
  return tensor_apply(grid.rule().diff1, v, extents(grid), axis);
}

Eigen::VectorXd partial2(const TensorGrid& grid, const Eigen::Ref<const Eigen::VectorXd>& v, int axis) {
  return tensor_apply(grid.rule().diff2, v, extents(grid), axis);
}

Eigen::VectorXd mixed_partial(const TensorGrid& grid, const Eigen::Ref<const Eigen::VectorXd>& v, int a, int b) {
  return grad_div_block(grid, v, a, b, false);
}

Eigen::VectorXd divergence(const VectorField& u) {
  Eigen::VectorXd div = Eigen::VectorXd::Zero(u.grid->size());
  for (int a = 0; a < u.dim(); ++a) div += partial(*u.grid, u.values.col(a), a);
  return div;
}

VectorField lame_apply(const Material& m, const VectorField& u) { return lame_impl(m, u, false); }

VectorField lame_apply_transpose(const Material& m, const VectorField& y) { return lame_impl(m, y, true); }

FaceTrace traction(const Material& m, const VectorField& u, int face) {
  const TensorGrid& grid = *u.grid;
  const int axis = grid.face_axis(face);
  const double side = grid.face_side(face);
  const Eigen::VectorXd div = face_restrict(grid, divergence(u), face);
  FaceTrace t{u.grid, face, Eigen::MatrixXd(grid.face_size(), grid.dim())};
  for (int c = 0; c < grid.dim(); ++c) {
    Eigen::VectorXd col = m.mu * side * face_restrict(grid, partial(grid, u.values.col(c), axis), face);
    if (c == axis) col += (m.lambda + m.mu) * side * div;
    t.values.col(c) = col;
  }
  return t;
}

FaceTrace second_normal_term(const Material& m, const VectorField& u, int face) {
  const TensorGrid& grid = *u.grid;
  const int axis = grid.face_axis(face);
  FaceTrace t{u.grid, face, Eigen::MatrixXd(grid.face_size(), grid.dim())};
  for (int c = 0; c < grid.dim(); ++c) {
    Eigen::VectorXd col = m.mu * face_restrict(grid, partial2(grid, u.values.col(c), axis), face);
    if (c == axis) {
      // nu_c d(div u)/dnu = side^2 d_axis(div u) = sum_b d_axis d_b u_b.
      Eigen::VectorXd ddiv = Eigen::VectorXd::Zero(grid.size());
      for (int b = 0; b < grid.dim(); ++b) ddiv += mixed_partial(grid, u.values.col(b), axis, b);
      col += (m.lambda + m.mu) * face_restrict(grid, ddiv, face);
    }
    t.values.col(c) = col;
  }
  return t;
}

double face_l2_norm_sq(const FaceTrace& t) {
  double s = 0.0;
  for (Index c = 0; c < t.values.cols(); ++c) s += face_exact_inner_product(*t.grid, t.values.col(c), t.values.col(c));
  return s;
}

}  // namespace specel
