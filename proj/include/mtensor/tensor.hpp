#pragma once

// Dense order-p tensors in column-major layout (first index fastest), plus
// the slicing, reshaping and mode-k machinery the M-product algebra is built on.
//
// All slicing functions return copies. Mode numbers are 1-based (mode 1 is the
// row mode, mode 3 the first transformed mode); element indices are 0-based.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "mtensor/error.hpp"
#include "mtensor/shape.hpp"

namespace mtensor {

using Complex = std::complex<double>;
template <class T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;
using RealMatrix = Matrix<double>;
using ComplexMatrix = Matrix<Complex>;

template <class T>
class BasicTensor {
 public:
  using value_type = T;
  using SliceMap = Eigen::Map<Matrix<T>>;
  using ConstSliceMap = Eigen::Map<const Matrix<T>>;

  BasicTensor() : data_(1, T{}) {}
  explicit BasicTensor(Shape shape) : shape_(std::move(shape)), data_(shape_.numel(), T{}) {}
  BasicTensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_.numel())
      throw ShapeError("buffer of length " + std::to_string(data_.size()) +
                       " does not match shape " + shape_.str());
  }

  // Order-2 tensor holding a copy of `m`.
  static BasicTensor from_matrix(const Matrix<T>& m) {
    BasicTensor t(Shape{static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
    Eigen::Map<Matrix<T>>(t.data_.data(), m.rows(), m.cols()) = m;
    return t;
  }

  const Shape& shape() const { return shape_; }
  std::size_t order() const { return shape_.order(); }
  std::size_t numel() const { return data_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_[axis]; }

  std::span<const T> data() const { return data_; }
  std::span<T> data() { return data_; }

  std::size_t offset(std::span<const std::size_t> idx) const {
    if (idx.size() != shape_.order())
      throw std::out_of_range("index of order " + std::to_string(idx.size()) +
                              " for tensor of shape " + shape_.str());
    std::size_t off = 0;
    std::size_t stride = 1;
    for (std::size_t a = 0; a < idx.size(); ++a) {
      if (idx[a] >= shape_[a])
        throw std::out_of_range("index " + std::to_string(idx[a]) + " out of range on axis " +
                                std::to_string(a) + " of shape " + shape_.str());
      off += idx[a] * stride;
      stride *= shape_[a];
    }
    return off;
  }

  const T& operator()(std::span<const std::size_t> idx) const { return data_[offset(idx)]; }
  T& operator()(std::span<const std::size_t> idx) { return data_[offset(idx)]; }

  template <class... I>
    requires(std::is_integral_v<I> && ...)
  const T& at(I... i) const {
    const std::size_t idx[] = {static_cast<std::size_t>(i)...};
    return data_[offset(idx)];
  }
  template <class... I>
    requires(std::is_integral_v<I> && ...)
  T& at(I... i) {
    const std::size_t idx[] = {static_cast<std::size_t>(i)...};
    return data_[offset(idx)];
  }

  // Number of frontal slices and their extents.
  std::size_t slice_count() const { return shape_.slice_count(); }
  std::size_t rows() const { return shape_[0]; }
  std::size_t cols() const { return shape_.order() >= 2 ? shape_[1] : 1; }

  // In-place view of the s-th frontal slice; s runs over the trailing indices
  // with i3 fastest.
  ConstSliceMap slice(std::size_t s) const {
    return ConstSliceMap(data_.data() + s * rows() * cols(), rows(), cols());
  }
  SliceMap slice(std::size_t s) { return SliceMap(data_.data() + s * rows() * cols(), rows(), cols()); }

  friend bool operator==(const BasicTensor& a, const BasicTensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<T> data_;
};

using DenseTensor = BasicTensor<double>;
using ComplexTensor = BasicTensor<Complex>;

namespace detail {

// Views the buffer as (left, n, right) around a 1-based mode.
struct ModeBlocks {
  std::size_t left = 1;
  std::size_t extent = 1;
  std::size_t right = 1;
};

inline ModeBlocks mode_blocks(const Shape& shape, std::size_t mode) {
  if (mode < 1 || mode > shape.order())
    throw std::invalid_argument("mode " + std::to_string(mode) + " invalid for tensor of shape " +
                                shape.str());
  ModeBlocks b;
  for (std::size_t a = 0; a + 1 < mode; ++a) b.left *= shape[a];
  b.extent = shape[mode - 1];
  for (std::size_t a = mode; a < shape.order(); ++a) b.right *= shape[a];
  return b;
}

inline double abs2(double x) { return x * x; }
inline double abs2(const Complex& x) { return std::norm(x); }

}  // namespace detail

// ---- slices -------------------------------------------------------------------

// Frontal slice at linear trailing index s (i3 fastest).
template <class T>
Matrix<T> frontal_slice(const BasicTensor<T>& a, std::size_t s) {
  if (a.order() < 2) throw ShapeError("frontal_slice requires order >= 2");
  if (s >= a.slice_count()) throw std::out_of_range("frontal slice index out of range");
  return a.slice(s);
}

// Frontal slice A(:, :, i3, ..., ip).
template <class T>
Matrix<T> frontal_slice(const BasicTensor<T>& a, std::span<const std::size_t> trailing) {
  if (a.order() < 2) throw ShapeError("frontal_slice requires order >= 2");
  if (trailing.size() != a.order() - 2)
    throw std::out_of_range("frontal_slice expects " + std::to_string(a.order() - 2) +
                            " trailing indices");
  std::size_t s = 0;
  std::size_t stride = 1;
  for (std::size_t j = 0; j < trailing.size(); ++j) {
    if (trailing[j] >= a.dim(j + 2)) throw std::out_of_range("frontal slice index out of range");
    s += trailing[j] * stride;
    stride *= a.dim(j + 2);
  }
  return a.slice(s);
}

template <class T>
void set_frontal_slice(BasicTensor<T>& a, std::size_t s, const Matrix<T>& m) {
  if (static_cast<std::size_t>(m.rows()) != a.rows() || static_cast<std::size_t>(m.cols()) != a.cols())
    throw ShapeError("slice dimensions do not match tensor " + a.shape().str());
  a.slice(s) = m;
}

// Lateral slices at the given column indices, in the given order.
template <class T>
BasicTensor<T> select_lateral_slices(const BasicTensor<T>& a, std::span<const std::size_t> cols) {
  if (a.order() < 2) throw ShapeError("lateral slices require order >= 2");
  for (std::size_t j : cols)
    if (j >= a.cols())
      throw std::out_of_range("lateral slice index " + std::to_string(j) + " out of range for shape " +
                              a.shape().str());
  if (cols.empty()) throw ShapeError("cannot select zero lateral slices");
  BasicTensor<T> out(a.shape().with_extent(1, cols.size()));
  const std::size_t n1 = a.rows();
  auto src = a.data();
  auto dst = out.data();
  for (std::size_t s = 0; s < a.slice_count(); ++s)
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const T* from = src.data() + (s * a.cols() + cols[c]) * n1;
      std::copy(from, from + n1, dst.data() + (s * cols.size() + c) * n1);
    }
  return out;
}

// Lateral slice A(:, j, :, ..., :) kept at order p with n2 = 1.
template <class T>
BasicTensor<T> lateral_slice(const BasicTensor<T>& a, std::size_t j) {
  const std::size_t idx[] = {j};
  return select_lateral_slices(a, std::span<const std::size_t>(idx));
}

// Concatenates tensors along mode 2. All other extents must agree.
template <class T>
BasicTensor<T> concat_lateral(std::span<const BasicTensor<T>> parts) {
  if (parts.empty()) throw ShapeError("concat_lateral needs at least one tensor");
  const Shape& ref = parts.front().shape();
  if (ref.order() < 2) throw ShapeError("concat_lateral requires order >= 2");
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.shape().with_extent(1, 1) != ref.with_extent(1, 1))
      throw ShapeError("concat_lateral: shape " + p.shape().str() + " incompatible with " + ref.str());
    total += p.cols();
  }
  BasicTensor<T> out(ref.with_extent(1, total));
  const std::size_t n1 = ref[0];
  auto dst = out.data();
  for (std::size_t s = 0; s < ref.slice_count(); ++s) {
    std::size_t col = 0;
    for (const auto& p : parts) {
      const T* from = p.data().data() + s * p.cols() * n1;
      std::copy(from, from + p.cols() * n1, dst.data() + (s * total + col) * n1);
      col += p.cols();
    }
  }
  return out;
}

// Tube A(i, j, :, ..., :) of shape (1, 1, n3, ..., np).
template <class T>
BasicTensor<T> tube(const BasicTensor<T>& a, std::size_t i, std::size_t j) {
  if (a.order() < 2) throw ShapeError("tube requires order >= 2");
  if (i >= a.rows() || j >= a.cols()) throw std::out_of_range("tube index out of range");
  BasicTensor<T> out(a.shape().with_extent(0, 1).with_extent(1, 1));
  for (std::size_t s = 0; s < a.slice_count(); ++s) out.data()[s] = a.slice(s)(i, j);
  return out;
}

// Builds a (1, 1, n3, ..., np) tube from its values, i3 fastest.
template <class T>
BasicTensor<T> make_tube(std::span<const std::size_t> trailing, std::vector<T> values) {
  std::vector<std::size_t> dims{1, 1};
  dims.insert(dims.end(), trailing.begin(), trailing.end());
  return BasicTensor<T>(Shape(std::move(dims)), std::move(values));
}

// ---- reshaping ------------------------------------------------------------------

// Column-major vectorization; a copy of the buffer.
template <class T>
Vector<T> vectorize(const BasicTensor<T>& a) {
  return Eigen::Map<const Vector<T>>(a.data().data(), static_cast<Eigen::Index>(a.numel()));
}

// Mode-k unfolding (n_k x prod_{j != k} n_j). Columns are the mode-k fibers,
// ordered with the remaining modes in ascending order, lowest fastest.
template <class T>
Matrix<T> mode_unfold(const BasicTensor<T>& a, std::size_t mode) {
  const auto b = detail::mode_blocks(a.shape(), mode);
  Matrix<T> m(b.extent, b.left * b.right);
  auto src = a.data();
  for (std::size_t r = 0; r < b.right; ++r)
    for (std::size_t i = 0; i < b.extent; ++i)
      for (std::size_t l = 0; l < b.left; ++l) m(i, l + b.left * r) = src[l + b.left * (i + b.extent * r)];
  return m;
}

// Inverse of mode_unfold for the given target shape.
template <class T>
BasicTensor<T> mode_fold(const Matrix<T>& m, std::size_t mode, const Shape& shape) {
  const auto b = detail::mode_blocks(shape, mode);
  if (static_cast<std::size_t>(m.rows()) != b.extent ||
      static_cast<std::size_t>(m.cols()) != b.left * b.right)
    throw ShapeError("mode_fold: " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                     " matrix does not fold into " + shape.str() + " along mode " + std::to_string(mode));
  BasicTensor<T> out(shape);
  auto dst = out.data();
  for (std::size_t r = 0; r < b.right; ++r)
    for (std::size_t i = 0; i < b.extent; ++i)
      for (std::size_t l = 0; l < b.left; ++l) dst[l + b.left * (i + b.extent * r)] = m(i, l + b.left * r);
  return out;
}

// A x_k M = fold(M * A_(k)); M is d x n_k.
template <class T>
BasicTensor<T> mode_product(const BasicTensor<T>& a, const Matrix<T>& m, std::size_t mode) {
  const auto b = detail::mode_blocks(a.shape(), mode);
  if (static_cast<std::size_t>(m.cols()) != b.extent)
    throw ShapeError("mode_product: matrix with " + std::to_string(m.cols()) +
                     " columns applied to mode " + std::to_string(mode) + " of extent " +
                     std::to_string(b.extent));
  const std::size_t d = static_cast<std::size_t>(m.rows());
  BasicTensor<T> out(a.shape().with_extent(mode - 1, d));
  const Matrix<T> mt = m.transpose();
  for (std::size_t r = 0; r < b.right; ++r) {
    Eigen::Map<const Matrix<T>> block(a.data().data() + b.left * b.extent * r, b.left, b.extent);
    Eigen::Map<Matrix<T>> dst(out.data().data() + b.left * d * r, b.left, d);
    dst.noalias() = block * mt;
  }
  return out;
}

// ---- norms and predicates -----------------------------------------------------------

template <class T>
double frobenius_norm(const BasicTensor<T>& a) {
  double s = 0.0;
  for (const T& x : a.data()) s += detail::abs2(x);
  return std::sqrt(s);
}

// True iff every frontal slice has all off-diagonal magnitudes <= tol.
template <class T>
bool is_f_diagonal(const BasicTensor<T>& a, double tol) {
  if (a.order() < 2) throw ShapeError("is_f_diagonal requires order >= 2");
  for (std::size_t s = 0; s < a.slice_count(); ++s) {
    auto sl = a.slice(s);
    for (Eigen::Index j = 0; j < sl.cols(); ++j)
      for (Eigen::Index i = 0; i < sl.rows(); ++i)
        if (i != j && std::abs(sl(i, j)) > tol) return false;
  }
  return true;
}

// ---- elementwise arithmetic -----------------------------------------------------------

template <class T>
BasicTensor<T> operator+(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.shape() != b.shape()) throw ShapeError("shape mismatch " + a.shape().str() + " vs " + b.shape().str());
  BasicTensor<T> out = a;
  auto d = out.data();
  auto s = b.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
  return out;
}

template <class T>
BasicTensor<T> operator-(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.shape() != b.shape()) throw ShapeError("shape mismatch " + a.shape().str() + " vs " + b.shape().str());
  BasicTensor<T> out = a;
  auto d = out.data();
  auto s = b.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] -= s[i];
  return out;
}

template <class T>
BasicTensor<T> operator*(T c, const BasicTensor<T>& a) {
  BasicTensor<T> out = a;
  for (T& x : out.data()) x *= c;
  return out;
}

inline ComplexTensor to_complex(const DenseTensor& a) {
  std::vector<Complex> v(a.data().begin(), a.data().end());
  return ComplexTensor(a.shape(), std::move(v));
}

// Largest |Im| over the buffer.
inline double max_imag(const ComplexTensor& a) {
  double m = 0.0;
  for (const Complex& x : a.data()) m = std::max(m, std::abs(x.imag()));
  return m;
}

inline DenseTensor real_part(const ComplexTensor& a) {
  std::vector<double> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.data()[i].real();
  return DenseTensor(a.shape(), std::move(v));
}

}  // namespace mtensor
