#include "mtensor/shape.hpp"

#include <limits>
#include <sstream>

#include "mtensor/error.hpp"

namespace mtensor {

Shape::Shape() : dims_{1}, numel_(1) {}

Shape::Shape(std::initializer_list<std::size_t> dims) : Shape(std::vector<std::size_t>(dims)) {}

Shape::Shape(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
  if (dims_.empty()) throw ShapeError("shape must have order >= 1");
  numel_ = 1;
  for (std::size_t d : dims_) {
    if (d == 0) throw ShapeError("shape extents must be >= 1, got " + str());
    if (numel_ > std::numeric_limits<std::size_t>::max() / d)
      throw ShapeError("element count of shape " + str() + " overflows the index type");
    numel_ *= d;
  }
}

std::size_t Shape::slice_count() const {
  std::size_t n = 1;
  for (std::size_t a = 2; a < dims_.size(); ++a) n *= dims_[a];
  return n;
}

std::vector<std::size_t> Shape::trailing() const {
  if (dims_.size() <= 2) return {};
  return {dims_.begin() + 2, dims_.end()};
}

Shape Shape::with_extent(std::size_t axis, std::size_t extent) const {
  if (axis >= dims_.size()) throw ShapeError("axis out of range for shape " + str());
  auto d = dims_;
  d[axis] = extent;
  return Shape(std::move(d));
}

std::string Shape::str() const {
  std::ostringstream os;
  os << '(';
  for (std::size_t a = 0; a < dims_.size(); ++a) os << (a ? ", " : "") << dims_[a];
  os << ')';
  return os.str();
}

}  // namespace mtensor
