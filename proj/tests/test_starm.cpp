#include <doctest.h>

#include <array>

#include "mtensor/starm.hpp"
#include "test_support.hpp"

using namespace mtensor;
using test::random_tensor;

namespace {

TransformSet example_set() {
  return TransformSet(std::vector<ModeTransform>{ModeTransform::from_matrix(test::example_m())});
}

// t-product under the DFT is circular convolution of the tubes.
DenseTensor circular_tproduct(const DenseTensor& a, const DenseTensor& b) {
  const std::size_t n3 = a.dim(2);
  DenseTensor c(Shape{a.dim(0), b.dim(1), n3});
  for (std::size_t s = 0; s < n3; ++s)
    for (std::size_t r = 0; r < n3; ++r) c.slice(s) += a.slice(r) * b.slice((s + n3 - r) % n3);
  return c;
}

}  // namespace

TEST_CASE("facewise product") {
  const TransformSet m = example_set();
  const TransformDomainTensor ah = forward(test::example_a(), m);
  const TransformDomainTensor bh = forward(test::example_b(), m);
  const ComplexTensor ch = facewise_product(ah, bh).values;
  CHECK(std::abs(ch.at(0, 0, 0) - Complex(37)) < 1e-12);
  CHECK(std::abs(ch.at(1, 0, 0) - Complex(-11)) < 1e-12);
  CHECK(std::abs(ch.at(0, 0, 1) - Complex(6)) < 1e-12);
  CHECK(std::abs(ch.at(1, 0, 1) - Complex(-1)) < 1e-12);

  const ComplexTensor a = to_complex(random_tensor(Shape{3, 4, 2, 3}, 1));
  ComplexTensor ident(Shape{4, 4, 2, 3});
  for (std::size_t s = 0; s < ident.slice_count(); ++s) ident.slice(s).setIdentity();
  CHECK(facewise_product(a, ident) == a);

  const ComplexTensor b = to_complex(random_tensor(Shape{4, 2, 2, 3}, 2));
  const ComplexTensor c = facewise_product(a, b, 3);
  for (std::size_t s = 0; s < c.slice_count(); ++s)
    CHECK((c.slice(s) - a.slice(s) * b.slice(s)).cwiseAbs().maxCoeff() < 1e-13);
  CHECK_THROWS_AS(facewise_product(a, a), ShapeError);
  CHECK_THROWS_AS(facewise_product(a, to_complex(random_tensor(Shape{4, 2, 3, 2}, 3))), ShapeError);
}

TEST_CASE("M-product") {
  const DenseTensor c = starm_product(test::example_a(), test::example_b(), example_set());
  CHECK(std::abs(c.at(0, 0, 0) - 25) < 1e-12);
  CHECK(std::abs(c.at(1, 0, 0) + 9) < 1e-12);
  CHECK(std::abs(c.at(0, 0, 1) + 19) < 1e-12);
  CHECK(std::abs(c.at(1, 0, 1) - 8) < 1e-12);

  const DenseTensor a = random_tensor(Shape{2, 2, 4}, 4);
  const DenseTensor b = random_tensor(Shape{2, 3, 4}, 5);
  const TransformSet dft = test::uniform_set(a.shape(), TransformKind::dft);
  CHECK(test::max_abs_diff(starm_product(a, b, dft), circular_tproduct(a, b)) < 1e-10);

  for (TransformKind kind : {TransformKind::dft, TransformKind::dct, TransformKind::banded,
                             TransformKind::random_orthogonal}) {
    const Shape sh{3, 3, 4, 2};
    const TransformSet t = test::uniform_set(sh, kind);
    const DenseTensor x = random_tensor(Shape{2, 3, 4, 2}, 6);
    const DenseTensor y = random_tensor(Shape{3, 4, 4, 2}, 7);
    const DenseTensor z = random_tensor(Shape{4, 2, 4, 2}, 8);
    const std::array<std::size_t, 2> trailing{4, 2};
    const DenseTensor id = starm_identity(3, trailing, t);
    CHECK(test::max_abs_diff(starm_product(x, id, t), x) < 1e-10);
    CHECK(test::rel_diff(starm_product(starm_product(x, y, t), z, t), starm_product(x, starm_product(y, z, t), t)) <
          1e-10);
    CHECK(test::rel_diff(starm_product(x, y, t, 2), starm_product(x, y, t, 1)) < 1e-12);
  }
  CHECK_THROWS_AS(starm_product(a, random_tensor(Shape{3, 3, 4}, 9), dft), ShapeError);
  CHECK_THROWS_AS(starm_product(a, random_tensor(Shape{2, 3, 5}, 9), dft), ShapeError);
}

TEST_CASE("M-transpose") {
  const Shape sh{3, 2, 4, 3};
  const DenseTensor a = random_tensor(sh, 10);
  const DenseTensor b = random_tensor(Shape{2, 5, 4, 3}, 11);
  for (TransformKind kind : {TransformKind::dft, TransformKind::dct, TransformKind::haar, TransformKind::banded,
                             TransformKind::explicit_matrix}) {
    const TransformSet t = kind == TransformKind::haar ? TransformSet(std::vector<ModeTransform>{
                                                             build_haar(4), build_identity(3)})
                                                       : test::uniform_set(sh, kind);
    const DenseTensor at = starm_transpose(a, t);
    CHECK(at.shape() == Shape{2, 3, 4, 3});
    CHECK(test::max_abs_diff(starm_transpose(at, t), a) < 1e-12);
    CHECK(test::rel_diff(starm_transpose(starm_product(a, b, t), t),
                         starm_product(starm_transpose(b, t), at, t)) < 1e-10);
  }
  const DenseTensor plain = starm_transpose(a, test::uniform_set(sh, TransformKind::identity));
  for (std::size_t s = 0; s < a.slice_count(); ++s) CHECK(plain.slice(s) == a.slice(s).transpose());
}

TEST_CASE("identity and orthogonality") {
  const std::array<std::size_t, 1> two{2};
  const TransformSet dft2 = test::uniform_set(Shape{3, 3, 2}, TransformKind::dft);
  const DenseTensor id = starm_identity(3, two, dft2);
  CHECK(test::max_abs_diff(DenseTensor::from_matrix(frontal_slice(id, 0)),
                           DenseTensor::from_matrix(RealMatrix::Identity(3, 3))) < 1e-12);
  CHECK(frontal_slice(id, 1).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(is_f_diagonal(id, 1e-12));

  const Shape sh{4, 4, 4, 2};
  for (TransformKind kind : {TransformKind::dft, TransformKind::dct, TransformKind::random_orthogonal}) {
    const TransformSet t = test::uniform_set(sh, kind);
    const std::array<std::size_t, 2> trailing{4, 2};
    CHECK(is_starm_orthogonal(starm_identity(4, trailing, t), t));
    CHECK_FALSE(is_starm_orthogonal(random_tensor(sh, 12), t));
  }
}

TEST_CASE("t-linear combination") {
  const Shape sh{3, 1, 4};
  const TransformSet t = test::uniform_set(sh, TransformKind::dct);
  std::vector<DenseTensor> basis{random_tensor(sh, 13), random_tensor(sh, 14)};
  std::vector<DenseTensor> coeffs{random_tensor(Shape{1, 1, 4}, 15), random_tensor(Shape{1, 1, 4}, 16)};
  const DenseTensor combo = t_linear_combination(basis, coeffs, t);
  const DenseTensor expected = starm_product(basis[0], coeffs[0], t) + starm_product(basis[1], coeffs[1], t);
  CHECK(test::max_abs_diff(combo, expected) < 1e-12);
  coeffs.pop_back();
  CHECK_THROWS(t_linear_combination(basis, coeffs, t));
}
