#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "dip/rng.hpp"

namespace dip {

using Shape = std::vector<std::size_t>;

/// Number of elements; throws InvalidShape for an empty shape or a zero dim.
std::size_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

/// Dense row-major array of doubles. Images are channels-first (C x H x W)
/// with samples nominally in [0, 1].
///
/// A default-constructed Tensor is an empty placeholder (rank 0) and is not a
/// valid operand for any operation.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double value = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double value) { return Tensor(Shape{1}, value); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t numel() const noexcept { return data_.size(); }
  bool empty() const noexcept { return shape_.empty(); }

  // Rank-3 image accessors.
  std::size_t channels() const { return shape_.at(0); }
  std::size_t height() const { return shape_.at(1); }
  std::size_t width() const { return shape_.at(2); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::vector<double>& storage() noexcept { return data_; }

  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  double& at(std::size_t c, std::size_t y, std::size_t x) {
    return data_[(c * shape_[1] + y) * shape_[2] + x];
  }
  double at(std::size_t c, std::size_t y, std::size_t x) const {
    return data_[(c * shape_[1] + y) * shape_[2] + x];
  }

  /// Value of a single-element tensor.
  double item() const;

  /// Bitwise equality of shape and contents.
  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<double> data_;
};

Tensor new_filled(const Shape& shape, double value);
/// Uniform samples in [lo, hi); InvalidRange unless lo < hi.
Tensor rand_uniform(Rng& rng, const Shape& shape, double lo, double hi);
/// Gaussian samples; InvalidRange for negative stddev.
Tensor rand_normal(Rng& rng, const Shape& shape, double mean, double stddev);

enum class BinaryOp { Add, Sub, Mul };

/// Elementwise op on equal shapes (ShapeMismatch otherwise).
Tensor ew_binary(const Tensor& a, const Tensor& b, BinaryOp op);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor clamp(const Tensor& a, double lo, double hi);

/// Left-to-right summation.
double sum(const Tensor& a);
double mean(const Tensor& a);

/// acc += alpha * b.
void axpy_inplace(Tensor& acc, const Tensor& b, double alpha = 1.0);
void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

bool all_finite(const Tensor& a) noexcept;

/// Debug-build guard: an operation fed finite inputs must produce finite output.
#ifndef NDEBUG
void debug_check_finite(const Tensor& out, std::initializer_list<const Tensor*> inputs, const char* where);
#else
inline void debug_check_finite(const Tensor&, std::initializer_list<const Tensor*>, const char*) {}
#endif

}  // namespace dip
