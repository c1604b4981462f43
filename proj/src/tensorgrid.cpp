#include "specel/tensorgrid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace specel {

namespace {

Eigen::VectorXd product_weights(const LglRule& fine, int dims) {
  const Index n = fine.size();
  Index total = 1;
  for (int a = 0; a < dims; ++a) total *= n;
  Eigen::VectorXd w = Eigen::VectorXd::Ones(total);
  for (Index i = 0; i < total; ++i) {
    Index rem = i;
    for (int a = 0; a < dims; ++a) {
      w[i] *= fine.weights[rem % n];
      rem /= n;
    }
  }
  return w;
}

}  // namespace

TensorGrid::TensorGrid(int dim, int degree)
    : dim_(dim), rule_(lgl_rule(degree)), fine_(lgl_rule(degree + 1)) {
  if (dim < 1 || dim > 3) throw std::invalid_argument("TensorGrid: dimension must be 1, 2 or 3");
  fine_interp_ = interpolation_matrix(rule_, fine_.nodes);
  fine_weights_ = product_weights(fine_, dim_);
  fine_face_weights_ = product_weights(fine_, dim_ - 1);

  const Index n = points_per_axis();
  size_ = 1;
  for (int a = 0; a < dim_; ++a) size_ *= n;
  face_size_ = size_ / n;

  strides_.assign(static_cast<std::size_t>(dim_), 1);
  for (int a = dim_ - 2; a >= 0; --a) strides_[static_cast<std::size_t>(a)] = strides_[static_cast<std::size_t>(a) + 1] * n;

  weights_.resize(size_);
  coords_.resize(size_, dim_);
  interior_mask_.assign(static_cast<std::size_t>(size_), 0);
  interior_pos_.assign(static_cast<std::size_t>(size_), -1);
  for (Index i = 0; i < size_; ++i) {
    const auto k = multi_index(i);
    double w = 1.0;
    bool inside = true;
    for (int a = 0; a < dim_; ++a) {
      const int ka = k[static_cast<std::size_t>(a)];
      w *= rule_.weights[ka];
      coords_(i, a) = rule_.nodes[ka];
      if (ka == 0 || ka == degree) inside = false;
    }
    weights_[i] = w;
    if (inside) {
      interior_pos_[static_cast<std::size_t>(i)] = static_cast<Index>(interior_.size());
      interior_.push_back(i);
      interior_mask_[static_cast<std::size_t>(i)] = 1;
    } else {
      boundary_.push_back(i);
    }
  }

  faces_.resize(static_cast<std::size_t>(2 * dim_));
  for (int face = 1; face <= 2 * dim_; ++face) {
    const int axis = face_axis(face);
    const int fixed = face_side(face) > 0 ? degree : 0;
    auto& idx = faces_[static_cast<std::size_t>(face - 1)];
    idx.reserve(static_cast<std::size_t>(face_size_));
    // Lexicographic order over the remaining axes equals increasing flat order.
    for (Index i = 0; i < size_; ++i) {
      if ((i / strides_[static_cast<std::size_t>(axis)]) % n == fixed) idx.push_back(i);
    }
  }

  face_weights_ = Eigen::VectorXd::Ones(face_size_);
  for (Index p = 0; p < face_size_; ++p) {
    Index rem = p;
    for (int a = dim_ - 2; a >= 0; --a) {
      face_weights_[p] *= rule_.weights[rem % n];
      rem /= n;
    }
  }
}

std::vector<int> TensorGrid::multi_index(Index flat) const {
  std::vector<int> k(static_cast<std::size_t>(dim_));
  const Index n = points_per_axis();
  for (int a = dim_ - 1; a >= 0; --a) {
    k[static_cast<std::size_t>(a)] = static_cast<int>(flat % n);
    flat /= n;
  }
  return k;
}

Index TensorGrid::flat_index(std::span<const int> k) const {
  Index flat = 0;
  for (int a = 0; a < dim_; ++a) flat += k[static_cast<std::size_t>(a)] * strides_[static_cast<std::size_t>(a)];
  return flat;
}

void TensorGrid::check_face(int face) const {
  if (face < 1 || face > 2 * dim_) throw std::out_of_range("invalid face id " + std::to_string(face));
}

const std::vector<Index>& TensorGrid::face_indices(int face) const {
  check_face(face);
  return faces_[static_cast<std::size_t>(face - 1)];
}

int TensorGrid::face_axis(int face) const {
  check_face(face);
  return (face - 1) % dim_;
}

int TensorGrid::face_side(int face) const {
  check_face(face);
  return face <= dim_ ? 1 : -1;
}

std::vector<int> TensorGrid::gamma_faces() const {
  std::vector<int> out;
  for (int j = 1; j <= dim_; ++j) out.push_back(j);
  return out;
}

GridPtr make_grid(int dim, int degree) { return std::make_shared<const TensorGrid>(dim, degree); }

ScalarGridFn::ScalarGridFn(GridPtr g, Eigen::VectorXd v) : grid(std::move(g)), values(std::move(v)) {
  if (!grid) throw std::invalid_argument("ScalarGridFn: null grid");
  if (values.size() != grid->size()) throw std::invalid_argument("ScalarGridFn: length does not match grid");
}

ScalarGridFn ScalarGridFn::from_function(GridPtr g, const std::function<double(std::span<const double>)>& f) {
  Eigen::VectorXd v(g->size());
  std::vector<double> x(static_cast<std::size_t>(g->dim()));
  for (Index i = 0; i < g->size(); ++i) {
    for (int a = 0; a < g->dim(); ++a) x[static_cast<std::size_t>(a)] = g->coordinates()(i, a);
    v[i] = f(x);
  }
  return {std::move(g), std::move(v)};
}

Eigen::VectorXd tensor_apply(const Eigen::MatrixXd& M, const Eigen::Ref<const Eigen::VectorXd>& values,
                             std::span<const Index> extents, int axis) {
  const auto ax = static_cast<std::size_t>(axis);
  if (M.cols() != extents[ax]) throw std::invalid_argument("tensor_apply: operator/extent mismatch");
  Index outer = 1, inner = 1;
  for (std::size_t a = 0; a < ax; ++a) outer *= extents[a];
  for (std::size_t a = ax + 1; a < extents.size(); ++a) inner *= extents[a];
  const Index n_in = M.cols(), n_out = M.rows();

  Eigen::VectorXd out = Eigen::VectorXd::Zero(outer * n_out * inner);
  for (Index o = 0; o < outer; ++o) {
    // Slab view: rows = this axis, cols = trailing axes (row-major contiguous).
    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const RowMat> in_slab(values.data() + o * n_in * inner, n_in, inner);
    Eigen::Map<RowMat> out_slab(out.data() + o * n_out * inner, n_out, inner);
    out_slab.noalias() = M * in_slab;
  }
  return out;
}

Eigen::VectorXd to_fine_grid(const TensorGrid& grid, const Eigen::Ref<const Eigen::VectorXd>& values) {
  std::vector<Index> ext(static_cast<std::size_t>(grid.dim()), grid.points_per_axis());
  Eigen::VectorXd v = values;
  for (int a = 0; a < grid.dim(); ++a) {
    v = tensor_apply(grid.fine_interp(), v, ext, a);
    ext[static_cast<std::size_t>(a)] = grid.fine_rule().size();
  }
  return v;
}

double discrete_inner_product(const TensorGrid& grid, const Eigen::Ref<const Eigen::VectorXd>& w,
                              const Eigen::Ref<const Eigen::VectorXd>& z) {
  return (w.array() * z.array() * grid.weights().array()).sum();
}

double discrete_inner_product(const ScalarGridFn& w, const ScalarGridFn& z) {
  if (w.grid != z.grid && (w.grid->dim() != z.grid->dim() || w.grid->degree() != z.grid->degree()))
    throw std::invalid_argument("discrete_inner_product: grid mismatch");
  return discrete_inner_product(*w.grid, w.values, z.values);
}

double exact_inner_product(const TensorGrid& grid, const Eigen::Ref<const Eigen::VectorXd>& w,
                           const Eigen::Ref<const Eigen::VectorXd>& z) {
  const Eigen::VectorXd wf = to_fine_grid(grid, w);
  const Eigen::VectorXd zf = to_fine_grid(grid, z);
  return (wf.array() * zf.array() * grid.fine_weights().array()).sum();
}

double l2_norm_exact(const ScalarGridFn& w) { return std::sqrt(exact_inner_product(*w.grid, w.values, w.values)); }

double norm_equivalence_upper(int dim, int degree) { return std::pow(2.0 + 1.0 / degree, dim); }

NormRatioRange norm_equivalence_report(const TensorGrid& grid, int samples, std::uint64_t seed) {
  if (samples < 1) throw std::invalid_argument("norm_equivalence_report: samples must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  NormRatioRange r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  Eigen::VectorXd p(grid.size());
  for (int s = 0; s < samples; ++s) {
    for (Index i = 0; i < p.size(); ++i) p[i] = normal(rng);
    const double ratio = discrete_inner_product(grid, p, p) / exact_inner_product(grid, p, p);
    r.min_ratio = std::min(r.min_ratio, ratio);
    r.max_ratio = std::max(r.max_ratio, ratio);
  }
  return r;
}

Eigen::VectorXd face_restrict(const TensorGrid& grid, const Eigen::Ref<const Eigen::VectorXd>& values, int face) {
  const auto& idx = grid.face_indices(face);
  Eigen::VectorXd out(static_cast<Index>(idx.size()));
  for (std::size_t p = 0; p < idx.size(); ++p) out[static_cast<Index>(p)] = values[idx[p]];
  return out;
}

double face_exact_inner_product(const TensorGrid& grid, const Eigen::Ref<const Eigen::VectorXd>& a,
                                const Eigen::Ref<const Eigen::VectorXd>& b) {
  const int fd = grid.dim() - 1;
  if (fd == 0) return a[0] * b[0];
  std::vector<Index> ext(static_cast<std::size_t>(fd), grid.points_per_axis());
  Eigen::VectorXd af = a, bf = b;
  for (int ax = 0; ax < fd; ++ax) {
    af = tensor_apply(grid.fine_interp(), af, ext, ax);
    bf = tensor_apply(grid.fine_interp(), bf, ext, ax);
    ext[static_cast<std::size_t>(ax)] = grid.fine_rule().size();
  }
  return (af.array() * bf.array() * grid.fine_face_weights().array()).sum();
}

}  // namespace specel
