#include "mtensor/transforms.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <numbers>
#include <random>

#include "fast_transforms.hpp"

namespace mtensor {

namespace detail {

struct TransformAccess {
  static ModeTransform make(TransformKind kind, std::string param, ComplexMatrix m, ComplexMatrix inv,
                            std::optional<double> scale,
                            std::shared_ptr<const FastTransform> fast = nullptr) {
    ModeTransform t;
    t.kind_ = kind;
    t.size_ = static_cast<std::size_t>(m.rows());
    t.param_ = std::move(param);
    t.real_ = m.imag().isZero(0.0);
    t.scale_ = scale;
    t.matrix_ = std::move(m);
    t.inverse_ = std::move(inv);
    t.fast_ = std::move(fast);
    return t;
  }
};

}  // namespace detail

namespace {

constexpr double kOrthogonalityTolerance = 1e-10;

// c such that M^H M = c^2 I to the library tolerance, if any.
std::optional<double> detect_orthogonal_scale(const ComplexMatrix& m) {
  const ComplexMatrix gram = m.adjoint() * m;
  const double c2 = gram.trace().real() / static_cast<double>(m.rows());
  if (!(c2 > 0.0)) return std::nullopt;
  const ComplexMatrix dev = gram - ComplexMatrix::Identity(m.rows(), m.cols()) * c2;
  if (dev.norm() <= kOrthogonalityTolerance * c2) return std::sqrt(c2);
  return std::nullopt;
}

// Wraps a matrix known to be orthogonal (c = 1), verifying it.
ModeTransform orthogonal_transform(const RealMatrix& q, TransformKind kind, std::string param,
                                   std::shared_ptr<const detail::FastTransform> fast = nullptr) {
  const RealMatrix gram = q.transpose() * q;
  const double dev = (gram - RealMatrix::Identity(q.rows(), q.cols())).norm();
  if (dev > kOrthogonalityTolerance)
    throw NumericalError(std::string(kind_name(kind)) + " matrix failed orthogonality check");
  return detail::TransformAccess::make(kind, std::move(param), q.cast<Complex>(),
                                       q.transpose().cast<Complex>(), 1.0, std::move(fast));
}

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// U from the SVD of x, always square (rows x rows).
RealMatrix left_singular_vectors(const RealMatrix& x) {
  Eigen::JacobiSVD<RealMatrix> svd(x, Eigen::ComputeFullU);
  if (svd.info() != Eigen::Success) throw NumericalError("SVD failed while building transform");
  return svd.matrixU();
}

}  // namespace

std::string_view kind_name(TransformKind kind) {
  switch (kind) {
    case TransformKind::identity: return "identity";
    case TransformKind::dft: return "dft";
    case TransformKind::dct: return "dct";
    case TransformKind::haar: return "haar";
    case TransformKind::banded: return "banded";
    case TransformKind::random_orthogonal: return "random";
    case TransformKind::data_dependent: return "data";
    case TransformKind::roi_dependent: return "roi";
    case TransformKind::explicit_matrix: return "explicit";
  }
  return "unknown";
}

TransformKind parse_kind(std::string_view name) {
  if (name == "identity" || name == "facewise") return TransformKind::identity;
  if (name == "dft" || name == "fft") return TransformKind::dft;
  if (name == "dct") return TransformKind::dct;
  if (name == "haar") return TransformKind::haar;
  if (name == "banded") return TransformKind::banded;
  if (name == "random" || name == "orthogonal" || name == "random_orthogonal")
    return TransformKind::random_orthogonal;
  if (name == "data" || name == "data_dependent") return TransformKind::data_dependent;
  if (name == "roi" || name == "roi_dependent") return TransformKind::roi_dependent;
  if (name == "explicit" || name == "matrix_file" || name == "file") return TransformKind::explicit_matrix;
  throw std::invalid_argument("unknown transform kind '" + std::string(name) + "'");
}

// ---- ModeTransform ------------------------------------------------------------------

ModeTransform ModeTransform::from_matrix(const RealMatrix& m, TransformKind kind, std::string param) {
  if (m.rows() == 0 || m.rows() != m.cols()) throw ShapeError("transform matrix must be square and non-empty");
  if (!m.allFinite()) throw NumericalError("transform matrix has non-finite entries");
  const ComplexMatrix mc = m.cast<Complex>();
  if (auto c = detect_orthogonal_scale(mc))
    return detail::TransformAccess::make(kind, std::move(param), mc, mc.adjoint() / (*c * *c), c);
  Eigen::FullPivLU<RealMatrix> lu(m);
  if (!lu.isInvertible() || !(lu.rcond() > 1e-14))
    throw NumericalError("transform matrix is singular or numerically not invertible");
  return detail::TransformAccess::make(kind, std::move(param), mc, lu.inverse().cast<Complex>(), std::nullopt);
}

std::string ModeTransform::describe() const {
  std::string s(kind_name(kind_));
  if (!param_.empty()) s += ":" + param_;
  return s;
}

RealMatrix ModeTransform::real_matrix() const {
  if (!real_) throw std::logic_error("transform matrix is complex");
  return matrix_.real();
}

std::size_t ModeTransform::conjugate_index(std::size_t j) const {
  if (real_) return j;
  if (kind_ == TransformKind::dft) return (size_ - j) % size_;
  throw std::logic_error("conjugate row undefined for complex explicit transform");
}

ComplexTensor ModeTransform::apply(const ComplexTensor& t, std::size_t mode, Direction dir,
                                   Realization how) const {
  if (mode < 1 || mode > t.order()) throw std::invalid_argument("transform mode out of range");
  if (t.dim(mode - 1) != size_)
    throw ShapeError("transform of size " + std::to_string(size_) + " applied to mode " +
                     std::to_string(mode) + " of tensor " + t.shape().str());
  if (how == Realization::fast && !fast_)
    throw std::invalid_argument(std::string(kind_name(kind_)) + " has no fast realization");
  if (how != Realization::explicit_matrix && fast_) {
    ComplexTensor out = t;
    fast_->apply(out, mode, dir);
    return out;
  }
  if (kind_ == TransformKind::identity && how == Realization::automatic) return t;
  return mode_product(t, dir == Direction::forward ? matrix_ : inverse_, mode);
}

// ---- builders ------------------------------------------------------------------------

ModeTransform build_identity(std::size_t n) {
  if (n == 0) throw UnsupportedSize("transform size must be >= 1");
  const ComplexMatrix id = ComplexMatrix::Identity(n, n);
  return detail::TransformAccess::make(TransformKind::identity, {}, id, id, 1.0);
}

ModeTransform build_dft(std::size_t n) {
  if (n == 0) throw UnsupportedSize("transform size must be >= 1");
  ComplexMatrix f(n, n);
  const Complex quarter[] = {{1, 0}, {0, -1}, {-1, 0}, {0, 1}};
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t l = 0; l < n; ++l) {
      const std::size_t r = (j * l) % n;
      if ((4 * r) % n == 0) {
        f(j, l) = quarter[(4 * r) / n];  // exact at multiples of pi/2
      } else {
        f(j, l) = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(r) / static_cast<double>(n));
      }
    }
  ComplexMatrix inv = f.adjoint() / static_cast<double>(n);
  auto fast = std::make_shared<const detail::FastTransform>(detail::FastTransform::Type::dft, n);
  return detail::TransformAccess::make(TransformKind::dft, {}, std::move(f), std::move(inv),
                                       std::sqrt(static_cast<double>(n)), std::move(fast));
}

ModeTransform build_dct(std::size_t n) {
  if (n == 0) throw UnsupportedSize("transform size must be >= 1");
  RealMatrix d(n, n);
  const double nn = static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double alpha = k == 0 ? std::sqrt(1.0 / nn) : std::sqrt(2.0 / nn);
    for (std::size_t j = 0; j < n; ++j)
      d(k, j) = alpha * std::cos(std::numbers::pi * (2.0 * j + 1.0) * k / (2.0 * nn));
  }
  auto fast = std::make_shared<const detail::FastTransform>(detail::FastTransform::Type::dct, n);
  return orthogonal_transform(d, TransformKind::dct, {}, std::move(fast));
}

ModeTransform build_haar(std::size_t n) {
  if (!is_power_of_two(n))
    throw UnsupportedSize("Haar transform requires a power-of-two size, got " + std::to_string(n));
  RealMatrix h = RealMatrix::Ones(1, 1);
  const double s = 1.0 / std::sqrt(2.0);
  while (static_cast<std::size_t>(h.rows()) < n) {
    const Eigen::Index m = h.rows();
    RealMatrix next = RealMatrix::Zero(2 * m, 2 * m);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < m; ++j) {
        next(i, 2 * j) = s * h(i, j);
        next(i, 2 * j + 1) = s * h(i, j);
      }
    for (Eigen::Index i = 0; i < m; ++i) {
      next(m + i, 2 * i) = s;
      next(m + i, 2 * i + 1) = -s;
    }
    h = std::move(next);
  }
  return orthogonal_transform(h, TransformKind::haar, {});
}

ModeTransform build_banded(std::size_t n, std::size_t bandwidth) {
  if (n == 0) throw UnsupportedSize("transform size must be >= 1");
  if (bandwidth < 1 || bandwidth > n)
    throw std::invalid_argument("banded transform bandwidth must satisfy 1 <= b <= n");
  RealMatrix m = RealMatrix::Zero(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i + 1 >= bandwidth ? i + 1 - bandwidth : 0;
    const double w = 1.0 / static_cast<double>(std::min(i + 1, bandwidth));
    for (std::size_t j = lo; j <= i; ++j) m(i, j) = w;
  }
  return ModeTransform::from_matrix(m, TransformKind::banded, std::to_string(bandwidth));
}

ModeTransform build_random_orthogonal(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw UnsupportedSize("transform size must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  RealMatrix g(n, n);
  for (Eigen::Index j = 0; j < g.cols(); ++j)
    for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = normal(rng);
  Eigen::HouseholderQR<RealMatrix> qr(g);
  RealMatrix q = qr.householderQ();
  const RealMatrix& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < q.cols(); ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return orthogonal_transform(q, TransformKind::random_orthogonal, std::to_string(seed));
}

ModeTransform build_data_dependent(const DenseTensor& a, std::size_t mode) {
  const RealMatrix unfolded = mode_unfold(a, mode);
  if (unfolded.norm() == 0.0)
    throw NumericalError("data-dependent transform: mode-" + std::to_string(mode) + " unfolding is zero");
  return orthogonal_transform(left_singular_vectors(unfolded).transpose(), TransformKind::data_dependent, {});
}

RealMatrix RoiSelection::matrix() const {
  RealMatrix p = RealMatrix::Zero(unfolded_cols, columns.size());
  for (std::size_t l = 0; l < columns.size(); ++l) p(columns[l], l) = 1.0;
  return p;
}

RoiSelection build_roi_selection(const DenseTensor& labels, int roi_label, std::size_t mode) {
  const auto b = detail::mode_blocks(labels.shape(), mode);
  const double target = static_cast<double>(roi_label);
  RoiSelection sel;
  sel.unfolded_cols = b.left * b.right;
  auto d = labels.data();
  for (std::size_t r = 0; r < b.right; ++r)
    for (std::size_t l = 0; l < b.left; ++l)
      for (std::size_t i = 0; i < b.extent; ++i)
        if (d[l + b.left * (i + b.extent * r)] == target) {
          sel.columns.push_back(l + b.left * r);
          break;
        }
  if (sel.columns.empty())
    throw std::invalid_argument("ROI label " + std::to_string(roi_label) + " absent along mode " +
                                std::to_string(mode) + " (q = 0)");
  return sel;
}

ModeTransform build_roi_dependent(const DenseTensor& a, const DenseTensor& labels, int roi_label,
                                  std::size_t mode) {
  if (a.shape() != labels.shape())
    throw ShapeError("ROI label tensor " + labels.shape().str() + " does not match data " + a.shape().str());
  const RoiSelection sel = build_roi_selection(labels, roi_label, mode);
  const RealMatrix unfolded = mode_unfold(a, mode);
  RealMatrix restricted(unfolded.rows(), static_cast<Eigen::Index>(sel.columns.size()));
  for (std::size_t l = 0; l < sel.columns.size(); ++l)
    restricted.col(static_cast<Eigen::Index>(l)) = unfolded.col(static_cast<Eigen::Index>(sel.columns[l]));
  return orthogonal_transform(left_singular_vectors(restricted).transpose(), TransformKind::roi_dependent,
                              std::to_string(roi_label));
}

// ---- TransformSet -----------------------------------------------------------------------

TransformSet::TransformSet() : modes_(std::make_shared<const std::vector<ModeTransform>>()) {}

TransformSet::TransformSet(std::vector<ModeTransform> modes_from_3)
    : modes_(std::make_shared<const std::vector<ModeTransform>>(std::move(modes_from_3))) {
  for (const auto& m : *modes_)
    if (m.size() == 0) throw std::invalid_argument("TransformSet contains an empty transform");
}

const ModeTransform& TransformSet::at_mode(std::size_t mode) const {
  if (mode < 3 || mode - 3 >= modes_->size())
    throw std::out_of_range("no transform for mode " + std::to_string(mode));
  return (*modes_)[mode - 3];
}

bool TransformSet::orthogonal_multiple() const {
  for (const auto& m : *modes_)
    if (!m.orthogonal_scale()) return false;
  return true;
}

double TransformSet::scale() const {
  double c = 1.0;
  for (const auto& m : *modes_) {
    if (!m.orthogonal_scale()) throw std::logic_error("transform set is not an orthogonal multiple");
    c *= *m.orthogonal_scale();
  }
  return c;
}

bool TransformSet::is_real() const {
  for (const auto& m : *modes_)
    if (!m.is_real()) return false;
  return true;
}

void TransformSet::check_compatible(const Shape& shape) const {
  const std::size_t expected = modes_->size() + 2;
  const bool order_ok = modes_->empty() ? shape.order() <= 2 : shape.order() == expected;
  if (!order_ok)
    throw ShapeError("transform set covers " + std::to_string(modes_->size()) +
                     " trailing modes; tensor has shape " + shape.str());
  for (std::size_t j = 0; j < modes_->size(); ++j)
    if ((*modes_)[j].size() != shape[j + 2])
      throw ShapeError("transform for mode " + std::to_string(j + 3) + " has size " +
                       std::to_string((*modes_)[j].size()) + " but tensor " + shape.str() + " has extent " +
                       std::to_string(shape[j + 2]));
}

std::size_t TransformSet::conjugate_slice(const Shape& shape, std::size_t s) const {
  std::size_t rest = s;
  std::size_t out = 0;
  std::size_t stride = 1;
  for (std::size_t j = 0; j < modes_->size(); ++j) {
    const std::size_t n = shape[j + 2];
    const std::size_t idx = rest % n;
    rest /= n;
    out += (*modes_)[j].conjugate_index(idx) * stride;
    stride *= n;
  }
  return out;
}

std::string TransformSet::describe() const {
  std::string s;
  for (std::size_t j = 0; j < modes_->size(); ++j) {
    if (j) s += ",";
    s += std::to_string(j + 3) + ":" + (*modes_)[j].describe();
  }
  return s.empty() ? "none" : s;
}

bool operator==(const TransformSet& a, const TransformSet& b) {
  if (a.modes_ == b.modes_) return true;
  if (a.modes_->size() != b.modes_->size()) return false;
  for (std::size_t j = 0; j < a.modes_->size(); ++j) {
    const auto& x = (*a.modes_)[j];
    const auto& y = (*b.modes_)[j];
    if (x.kind() != y.kind() || x.size() != y.size() || x.matrix() != y.matrix()) return false;
  }
  return true;
}

// ---- domain movement ----------------------------------------------------------------------

TransformDomainTensor forward(const DenseTensor& a, const TransformSet& t, Realization how) {
  return forward(to_complex(a), t, how);
}

TransformDomainTensor forward(const ComplexTensor& a, const TransformSet& t, Realization how) {
  t.check_compatible(a.shape());
  ComplexTensor v = a;
  for (std::size_t mode = 3; mode < t.mode_count() + 3; ++mode)
    v = t.at_mode(mode).apply(v, mode, Direction::forward, how);
  return {std::move(v), t};
}

ComplexTensor inverse_complex(const TransformDomainTensor& a, Realization how) {
  const TransformSet& t = a.transform;
  t.check_compatible(a.values.shape());
  ComplexTensor v = a.values;
  for (std::size_t mode = 3; mode < t.mode_count() + 3; ++mode)
    v = t.at_mode(mode).apply(v, mode, Direction::inverse, how);
  return v;
}

DenseTensor inverse(const TransformDomainTensor& a, Realization how) {
  ComplexTensor v = inverse_complex(a, how);
  double peak = 1.0;
  for (const Complex& x : v.data()) peak = std::max(peak, std::abs(x.real()));
  const double residue = max_imag(v);
  if (residue > kImaginaryTolerance * peak)
    throw NumericalError("inverse transform left an imaginary residue of " + std::to_string(residue));
  return real_part(v);
}

}  // namespace mtensor
