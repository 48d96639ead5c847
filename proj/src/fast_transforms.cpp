#include "fast_transforms.hpp"

#include <fftw3.h>

#include <cmath>
#include <memory>
#include <mutex>

namespace mtensor::detail {
namespace {

// The FFTW planner is not thread-safe; execution with new arrays is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

template <class T>
std::unique_ptr<T[], FftwFree> fftw_buffer(std::size_t n) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * n));
  if (!p) throw std::bad_alloc();
  return std::unique_ptr<T[], FftwFree>(p);
}

}  // namespace

FastTransform::FastTransform(Type type, std::size_t n) : type_(type), n_(n) {
  std::lock_guard lock(planner_mutex());
  const int len = static_cast<int>(n);
  if (type_ == Type::dft) {
    auto in = fftw_buffer<fftw_complex>(n);
    auto out = fftw_buffer<fftw_complex>(n);
    forward_plan_ = fftw_plan_dft_1d(len, in.get(), out.get(), FFTW_FORWARD, FFTW_ESTIMATE);
    inverse_plan_ = fftw_plan_dft_1d(len, in.get(), out.get(), FFTW_BACKWARD, FFTW_ESTIMATE);
  } else {
    auto in = fftw_buffer<double>(n);
    auto out = fftw_buffer<double>(n);
    forward_plan_ = fftw_plan_r2r_1d(len, in.get(), out.get(), FFTW_REDFT10, FFTW_ESTIMATE);
    inverse_plan_ = fftw_plan_r2r_1d(len, in.get(), out.get(), FFTW_REDFT01, FFTW_ESTIMATE);
  }
  if (!forward_plan_ || !inverse_plan_) throw NumericalError("FFTW planning failed");
}

FastTransform::~FastTransform() {
  std::lock_guard lock(planner_mutex());
  if (forward_plan_) fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  if (inverse_plan_) fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
}

void FastTransform::apply(ComplexTensor& t, std::size_t mode, Direction dir) const {
  if (t.dim(mode - 1) != n_) throw ShapeError("fast transform size does not match tensor extent");
  if (type_ == Type::dft)
    apply_dft(t, mode, dir);
  else
    apply_dct(t, mode, dir);
}

void FastTransform::apply_dft(ComplexTensor& t, std::size_t mode, Direction dir) const {
  const auto b = mode_blocks(t.shape(), mode);
  auto in = fftw_buffer<fftw_complex>(n_);
  auto out = fftw_buffer<fftw_complex>(n_);
  auto plan = static_cast<fftw_plan>(dir == Direction::forward ? forward_plan_ : inverse_plan_);
  const double scale = dir == Direction::forward ? 1.0 : 1.0 / static_cast<double>(n_);
  Complex* data = t.data().data();
  for (std::size_t r = 0; r < b.right; ++r)
    for (std::size_t l = 0; l < b.left; ++l) {
      Complex* fiber = data + l + b.left * b.extent * r;
      for (std::size_t i = 0; i < n_; ++i) {
        in[i][0] = fiber[i * b.left].real();
        in[i][1] = fiber[i * b.left].imag();
      }
      fftw_execute_dft(plan, in.get(), out.get());
      for (std::size_t i = 0; i < n_; ++i) fiber[i * b.left] = Complex(out[i][0], out[i][1]) * scale;
    }
}

void FastTransform::apply_dct(ComplexTensor& t, std::size_t mode, Direction dir) const {
  const auto b = mode_blocks(t.shape(), mode);
  auto re_in = fftw_buffer<double>(n_);
  auto im_in = fftw_buffer<double>(n_);
  auto re_out = fftw_buffer<double>(n_);
  auto im_out = fftw_buffer<double>(n_);
  const double n = static_cast<double>(n_);
  // REDFT10 is 2 * the unnormalized DCT-II; REDFT01 is its unnormalized inverse
  // up to the same factors.
  const double dc = dir == Direction::forward ? std::sqrt(1.0 / (4.0 * n)) : 1.0 / std::sqrt(n);
  const double ac = dir == Direction::forward ? std::sqrt(1.0 / (2.0 * n)) : 1.0 / std::sqrt(2.0 * n);
  auto plan = static_cast<fftw_plan>(dir == Direction::forward ? forward_plan_ : inverse_plan_);
  Complex* data = t.data().data();
  for (std::size_t r = 0; r < b.right; ++r)
    for (std::size_t l = 0; l < b.left; ++l) {
      Complex* fiber = data + l + b.left * b.extent * r;
      bool has_imag = false;
      for (std::size_t i = 0; i < n_; ++i) {
        re_in[i] = fiber[i * b.left].real();
        im_in[i] = fiber[i * b.left].imag();
        has_imag = has_imag || im_in[i] != 0.0;
      }
      if (dir == Direction::inverse) {
        for (std::size_t i = 0; i < n_; ++i) {
          const double s = i == 0 ? dc : ac;
          re_in[i] *= s;
          im_in[i] *= s;
        }
      }
      fftw_execute_r2r(plan, re_in.get(), re_out.get());
      if (has_imag)
        fftw_execute_r2r(plan, im_in.get(), im_out.get());
      else
        for (std::size_t i = 0; i < n_; ++i) im_out[i] = 0.0;
      for (std::size_t i = 0; i < n_; ++i) {
        const double s = dir == Direction::forward ? (i == 0 ? dc : ac) : 1.0;
        fiber[i * b.left] = Complex(re_out[i] * s, im_out[i] * s);
      }
    }
}

}  // namespace mtensor::detail
