#pragma once

// The M-product algebra: facewise products in the transform domain, the
// M-product itself, transpose, identity, orthogonality and t-linear combinations.

#include <span>

#include "mtensor/tensor.hpp"
#include "mtensor/transforms.hpp"

namespace mtensor {

// Slice-by-slice matrix product: C(:,:,s) = A(:,:,s) * B(:,:,s).
ComplexTensor facewise_product(const ComplexTensor& a, const ComplexTensor& b, std::size_t threads = 1);
TransformDomainTensor facewise_product(const TransformDomainTensor& a, const TransformDomainTensor& b,
                                       std::size_t threads = 1);
// Slice-by-slice conjugate transpose.
ComplexTensor facewise_adjoint(const ComplexTensor& a);

// C = A *M B: forward both operands, multiply facewise, transform back.
DenseTensor starm_product(const DenseTensor& a, const DenseTensor& b, const TransformSet& t,
                          std::size_t threads = 1);

// Conjugate-transposes every transform-domain frontal slice. For real
// transforms this is the plain slice transpose in the transform domain.
DenseTensor starm_transpose(const DenseTensor& a, const TransformSet& t);

// n x n x n3 x ... x np tensor whose transform-domain slices are all I.
DenseTensor starm_identity(std::size_t n, std::span<const std::size_t> trailing, const TransformSet& t);

// Q^T *M Q and Q *M Q^T both within tol * ||I||_F of the identity.
bool is_starm_orthogonal(const DenseTensor& q, const TransformSet& t, double tol = 1e-8);

// sum_i basis[i] *M coeffs[i] for lateral slices basis[i] (n1 x 1 x ...) and
// tubes coeffs[i] (1 x 1 x ...).
DenseTensor t_linear_combination(std::span<const DenseTensor> basis, std::span<const DenseTensor> coeffs,
                                 const TransformSet& t);

}  // namespace mtensor
