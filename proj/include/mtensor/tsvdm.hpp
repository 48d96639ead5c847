#pragma once

// t-SVDM: A = U *M S *M V^T computed slice-by-slice in the transform domain,
// with t-rank, truncation, reconstruction and the truncation-error identity.

#include <cstddef>
#include <vector>

#include "mtensor/tensor.hpp"
#include "mtensor/transforms.hpp"

namespace mtensor {

/// Factors of a t-SVDM (or a truncation of one).
///
/// U is n1 x r x n3 x ... x np, S is r x r' x ..., V is n2 x r' x ...; for the
/// full decomposition r = n1 and r' = n2 (square U and V). `singular_values`
/// holds the transform-domain singular values, one column per frontal slice,
/// in non-increasing order down each column.
struct TSVDMFactors {
  DenseTensor U;
  DenseTensor S;
  DenseTensor V;
  TransformSet transform;
  RealMatrix singular_values;
};

// Per-slice SVDs run on up to `threads` workers; the result does not depend on
// the worker count.
TSVDMFactors tsvdm(const DenseTensor& a, const TransformSet& t, std::size_t threads = 1);

// Number of singular tubes with norm > tol * ||s_1||_F.
std::size_t t_rank(const TSVDMFactors& f, double tol = 1e-10);

// Keeps the first k lateral slices of U and V and the leading k x k tubes of S.
TSVDMFactors truncate(const TSVDMFactors& f, std::size_t k);

// U *M S *M V^T.
DenseTensor reconstruct(const TSVDMFactors& f);
// sum_i U_i *M s_ii *M V_i^T over the diagonal tubes.
DenseTensor reconstruct_by_expansion(const TSVDMFactors& f);

// ||s_i||_F of the spatial-domain diagonal tubes of S.
std::vector<double> singular_tube_norms(const TSVDMFactors& f);
// ||s^_i||_F of the transform-domain diagonal tubes.
std::vector<double> transform_tube_norms(const TSVDMFactors& f);

// sqrt(sum_{i>k} ||s^_i||_F^2) / c, which equals ||A - A_k||_F when the
// transforms are multiples of orthogonal matrices. Throws std::logic_error
// for other transforms, where the identity does not hold.
double truncation_error(const TSVDMFactors& f, std::size_t k);

}  // namespace mtensor
