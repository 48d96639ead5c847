#pragma once

#include <cstddef>

#include "mtensor/transforms.hpp"

namespace mtensor::detail {

// FFTW-backed DFT / orthonormal DCT-II along one mode. Plans are created once
// and executed on per-call buffers, so apply() is safe to call concurrently.
class FastTransform {
 public:
  enum class Type { dft, dct };

  FastTransform(Type type, std::size_t n);
  ~FastTransform();
  FastTransform(const FastTransform&) = delete;
  FastTransform& operator=(const FastTransform&) = delete;

  void apply(ComplexTensor& t, std::size_t mode, Direction dir) const;

 private:
  void apply_dft(ComplexTensor& t, std::size_t mode, Direction dir) const;
  void apply_dct(ComplexTensor& t, std::size_t mode, Direction dir) const;

  Type type_;
  std::size_t n_;
  void* forward_plan_ = nullptr;
  void* inverse_plan_ = nullptr;
};

}  // namespace mtensor::detail
