#pragma once

// Per-mode invertible transforms M3..Mp and movement between the spatial
// domain and the transform domain.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mtensor/tensor.hpp"

namespace mtensor {

enum class TransformKind {
  identity,
  dft,
  dct,
  haar,
  banded,
  random_orthogonal,
  data_dependent,
  roi_dependent,
  explicit_matrix,
};

std::string_view kind_name(TransformKind kind);
// Accepts the names returned by kind_name plus "facewise" (identity),
// "fft" (dft), "random" / "orthogonal" (random_orthogonal), "data" and "roi".
TransformKind parse_kind(std::string_view name);

enum class Direction { forward, inverse };
enum class Realization { automatic, explicit_matrix, fast };

namespace detail {
class FastTransform;
struct TransformAccess;
}

/// One square invertible matrix M_k together with its inverse.
///
/// DFT and DCT additionally carry a fast realization (FFTW) that agrees with
/// the explicit matrix to round-off; `apply` uses it by default.
class ModeTransform {
 public:
  ModeTransform() = default;

  // Wraps an explicit real matrix. Throws NumericalError if it is singular.
  // Orthogonal multiples (M^T M = c^2 I) are detected automatically.
  static ModeTransform from_matrix(const RealMatrix& m, TransformKind kind = TransformKind::explicit_matrix,
                                   std::string param = {});

  TransformKind kind() const { return kind_; }
  std::size_t size() const { return size_; }
  const std::string& param() const { return param_; }
  // "kind" or "kind:param".
  std::string describe() const;

  bool is_real() const { return real_; }
  // c_k such that M^H M = c_k^2 I, if M is a multiple of an orthogonal matrix.
  std::optional<double> orthogonal_scale() const { return scale_; }

  const ComplexMatrix& matrix() const { return matrix_; }
  const ComplexMatrix& inverse_matrix() const { return inverse_; }
  // Real part of the matrix; throws if the matrix is complex.
  RealMatrix real_matrix() const;

  bool has_fast_path() const { return fast_ != nullptr; }

  // Index of the row whose entries are the conjugates of row j (j itself for
  // real matrices, n - j mod n for the DFT).
  std::size_t conjugate_index(std::size_t j) const;

  // Applies M (forward) or M^{-1} (inverse) along `mode` (1-based).
  ComplexTensor apply(const ComplexTensor& t, std::size_t mode, Direction dir,
                      Realization how = Realization::automatic) const;

 private:
  friend struct detail::TransformAccess;

  TransformKind kind_ = TransformKind::identity;
  std::size_t size_ = 0;
  std::string param_;
  bool real_ = true;
  std::optional<double> scale_;
  ComplexMatrix matrix_;
  ComplexMatrix inverse_;
  std::shared_ptr<const detail::FastTransform> fast_;
};

ModeTransform build_identity(std::size_t n);
// Unnormalized DFT, F[j,l] = exp(-2 pi i j l / n); inverse F^H / n; c = sqrt(n).
ModeTransform build_dft(std::size_t n);
// Orthonormal DCT-II.
ModeTransform build_dct(std::size_t n);
// Orthonormal Haar matrix; n must be a power of two (UnsupportedSize otherwise).
ModeTransform build_haar(std::size_t n);
// Lower-triangular causal moving average: M[i,j] = 1/min(i+1, b) for
// max(0, i-b+1) <= j <= i. Not an orthogonal multiple.
ModeTransform build_banded(std::size_t n, std::size_t bandwidth);
// Q from the QR factorization of an n x n standard normal matrix, with the
// diagonal of R made nonnegative.
ModeTransform build_random_orthogonal(std::size_t n, std::uint64_t seed);
// M_k = U^T from the SVD of the mode-k unfolding of `a`.
ModeTransform build_data_dependent(const DenseTensor& a, std::size_t mode);

/// Columns of the mode-k unfolding of a label tensor that contain a label.
struct RoiSelection {
  std::size_t unfolded_cols = 0;     // m_k
  std::vector<std::size_t> columns;  // j_1 < ... < j_q
  // Dense m_k x q selection matrix whose l-th column is e_{j_l}.
  RealMatrix matrix() const;
};

RoiSelection build_roi_selection(const DenseTensor& labels, int roi_label, std::size_t mode);
// M_k = U^T from the SVD of A_(k) P_ROI; U is n_k x n_k, completed to a full
// orthogonal basis when the selection has fewer than n_k columns.
ModeTransform build_roi_dependent(const DenseTensor& a, const DenseTensor& labels, int roi_label,
                                  std::size_t mode);

/// Transforms for modes 3..p of an order-p tensor.
///
/// Immutable and cheap to copy (the matrices are shared).
class TransformSet {
 public:
  TransformSet();  // no transformed modes (order <= 2)
  explicit TransformSet(std::vector<ModeTransform> modes_from_3);

  // The same builder applied to every trailing mode of `shape`.
  template <class Builder>
  static TransformSet uniform(const Shape& shape, Builder&& build) {
    std::vector<ModeTransform> modes;
    for (std::size_t n : shape.trailing()) modes.push_back(build(n));
    return TransformSet(std::move(modes));
  }

  std::size_t mode_count() const { return modes_->size(); }
  // 1-based mode number, 3 <= mode <= mode_count() + 2.
  const ModeTransform& at_mode(std::size_t mode) const;
  const std::vector<ModeTransform>& modes() const { return *modes_; }

  bool orthogonal_multiple() const;
  // c = c3 * ... * cp; throws if not an orthogonal multiple.
  double scale() const;
  bool is_real() const;

  // Throws ShapeError unless the trailing extents of `shape` match.
  void check_compatible(const Shape& shape) const;
  // Linear index of the frontal slice holding the conjugate of slice s.
  std::size_t conjugate_slice(const Shape& shape, std::size_t s) const;

  std::string describe() const;

  friend bool operator==(const TransformSet& a, const TransformSet& b);

 private:
  std::shared_ptr<const std::vector<ModeTransform>> modes_;
};

/// A tensor expressed in the transform domain of a TransformSet.
struct TransformDomainTensor {
  ComplexTensor values;
  TransformSet transform;
};

TransformDomainTensor forward(const DenseTensor& a, const TransformSet& t,
                              Realization how = Realization::automatic);
TransformDomainTensor forward(const ComplexTensor& a, const TransformSet& t,
                              Realization how = Realization::automatic);
// Back to the spatial domain, keeping complex values.
ComplexTensor inverse_complex(const TransformDomainTensor& a, Realization how = Realization::automatic);
// Back to the spatial domain for tensors known to be real. Imaginary residue up
// to 1e-10 (relative to the largest magnitude, at least 1) is discarded; more
// raises NumericalError.
DenseTensor inverse(const TransformDomainTensor& a, Realization how = Realization::automatic);

// Largest imaginary residue accepted by inverse(), relative to max(1, max|x|).
inline constexpr double kImaginaryTolerance = 1e-10;

}  // namespace mtensor
