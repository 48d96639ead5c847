#include "mtensor/starm.hpp"

#include <cmath>

#include "mtensor/parallel.hpp"

namespace mtensor {

namespace {

void check_facewise(const Shape& a, const Shape& b) {
  if (a.order() != b.order() || a.order() < 2)
    throw ShapeError("facewise product needs equal orders >= 2, got " + a.str() + " and " + b.str());
  if (a[1] != b[0]) throw ShapeError("facewise product inner dimensions differ: " + a.str() + " x " + b.str());
  for (std::size_t ax = 2; ax < a.order(); ++ax)
    if (a[ax] != b[ax]) throw ShapeError("facewise product trailing dimensions differ: " + a.str() + " x " + b.str());
}

}  // namespace

ComplexTensor facewise_product(const ComplexTensor& a, const ComplexTensor& b, std::size_t threads) {
  check_facewise(a.shape(), b.shape());
  ComplexTensor c(a.shape().with_extent(1, b.dim(1)));
  parallel_for(a.slice_count(), threads, [&](std::size_t s) { c.slice(s).noalias() = a.slice(s) * b.slice(s); });
  return c;
}

TransformDomainTensor facewise_product(const TransformDomainTensor& a, const TransformDomainTensor& b,
                                       std::size_t threads) {
  if (!(a.transform == b.transform)) throw std::invalid_argument("facewise product of tensors from different transform domains");
  return {facewise_product(a.values, b.values, threads), a.transform};
}

ComplexTensor facewise_adjoint(const ComplexTensor& a) {
  if (a.order() < 2) throw ShapeError("facewise_adjoint requires order >= 2");
  std::vector<std::size_t> dims(a.shape().dims().begin(), a.shape().dims().end());
  std::swap(dims[0], dims[1]);
  ComplexTensor out{Shape(std::move(dims))};
  for (std::size_t s = 0; s < a.slice_count(); ++s) out.slice(s) = a.slice(s).adjoint();
  return out;
}

DenseTensor starm_product(const DenseTensor& a, const DenseTensor& b, const TransformSet& t, std::size_t threads) {
  check_facewise(a.shape(), b.shape());
  const auto ah = forward(a, t);
  const auto bh = forward(b, t);
  return inverse(facewise_product(ah, bh, threads));
}

DenseTensor starm_transpose(const DenseTensor& a, const TransformSet& t) {
  const auto ah = forward(a, t);
  return inverse({facewise_adjoint(ah.values), t});
}

DenseTensor starm_identity(std::size_t n, std::span<const std::size_t> trailing, const TransformSet& t) {
  std::vector<std::size_t> dims{n, n};
  dims.insert(dims.end(), trailing.begin(), trailing.end());
  ComplexTensor hat{Shape(std::move(dims))};
  for (std::size_t s = 0; s < hat.slice_count(); ++s) hat.slice(s).setIdentity();
  return inverse({std::move(hat), t});
}

bool is_starm_orthogonal(const DenseTensor& q, const TransformSet& t, double tol) {
  if (q.order() < 2 || q.dim(0) != q.dim(1)) return false;
  const auto qh = forward(q, t);
  const ComplexTensor qa = facewise_adjoint(qh.values);
  const ComplexTensor left = facewise_product(qa, qh.values);
  const ComplexTensor right = facewise_product(qh.values, qa);
  // Compare in the spatial domain, where the identity is starm_identity.
  const TransformDomainTensor lh{left, t};
  const TransformDomainTensor rh{right, t};
  const auto trailing = q.shape().trailing();
  const DenseTensor id = starm_identity(q.dim(0), trailing, t);
  const double bound = tol * frobenius_norm(id);
  return frobenius_norm(inverse(lh) - id) <= bound && frobenius_norm(inverse(rh) - id) <= bound;
}

DenseTensor t_linear_combination(std::span<const DenseTensor> basis, std::span<const DenseTensor> coeffs,
                                 const TransformSet& t) {
  if (basis.size() != coeffs.size())
    throw std::invalid_argument("t_linear_combination: " + std::to_string(basis.size()) + " basis slices but " +
                                std::to_string(coeffs.size()) + " coefficient tubes");
  if (basis.empty()) throw std::invalid_argument("t_linear_combination needs at least one term");
  DenseTensor sum(basis.front().shape());
  for (std::size_t i = 0; i < basis.size(); ++i) {
    if (basis[i].order() < 2 || basis[i].dim(1) != 1)
      throw ShapeError("t_linear_combination: basis element is not a lateral slice: " + basis[i].shape().str());
    if (coeffs[i].dim(0) != 1 || coeffs[i].dim(1) != 1)
      throw ShapeError("t_linear_combination: coefficient is not a tube: " + coeffs[i].shape().str());
    if (basis[i].shape() != sum.shape()) throw ShapeError("t_linear_combination: basis slices differ in shape");
    sum = sum + starm_product(basis[i], coeffs[i], t);
  }
  return sum;
}

}  // namespace mtensor
