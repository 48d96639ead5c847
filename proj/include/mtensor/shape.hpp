#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace mtensor {

/// Extents (n1, ..., np) of an order-p tensor.
///
/// Every extent is >= 1 and the element count is checked against overflow
/// at construction. Axes are addressed 0-based through operator[]; the
/// mode-k functions elsewhere in the library take 1-based mode numbers.
class Shape {
 public:
  Shape();  // order 1, one element
  explicit Shape(std::vector<std::size_t> dims);
  Shape(std::initializer_list<std::size_t> dims);

  std::size_t order() const { return dims_.size(); }
  std::size_t numel() const { return numel_; }
  std::size_t operator[](std::size_t axis) const { return dims_[axis]; }
  std::span<const std::size_t> dims() const { return dims_; }

  // Number of frontal slices: n3 * ... * np (1 for order <= 2).
  std::size_t slice_count() const;
  // Extents of modes 3..p.
  std::vector<std::size_t> trailing() const;

  Shape with_extent(std::size_t axis, std::size_t extent) const;

  std::string str() const;

  friend bool operator==(const Shape&, const Shape&) = default;

 private:
  std::vector<std::size_t> dims_;
  std::size_t numel_ = 1;
};

}  // namespace mtensor
