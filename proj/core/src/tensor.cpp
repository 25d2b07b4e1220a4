#include "dip/tensor.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <sstream>

#include "dip/error.hpp"

namespace dip {

std::size_t shape_numel(const Shape& shape) {
  if (shape.empty()) throw Error(ErrorKind::InvalidShape, "empty shape");
  std::size_t n = 1;
  for (std::size_t d : shape) {
    if (d == 0) throw Error(ErrorKind::InvalidShape, "zero dimension in " + shape_to_string(shape));
    n *= d;
  }
  return n;
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, double value) : shape_(std::move(shape)) {
  data_.assign(shape_numel(shape_), value);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_numel(shape_) != data_.size()) {
    throw Error(ErrorKind::InvalidShape, "data length " + std::to_string(data_.size()) +
                                             " does not match shape " + shape_to_string(shape_));
  }
}

double Tensor::item() const {
  if (data_.size() != 1) throw Error(ErrorKind::NotAScalar, "shape " + shape_to_string(shape_));
  return data_[0];
}

Tensor new_filled(const Shape& shape, double value) { return Tensor(shape, value); }

Tensor rand_uniform(Rng& rng, const Shape& shape, double lo, double hi) {
  if (!(lo < hi)) throw Error(ErrorKind::InvalidRange, "uniform range requires lo < hi");
  Tensor t(shape);
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

Tensor rand_normal(Rng& rng, const Shape& shape, double mean, double stddev) {
  if (!(stddev >= 0.0)) throw Error(ErrorKind::InvalidRange, "normal stddev must be >= 0");
  Tensor t(shape);
  if (stddev == 0.0) {
    std::fill(t.data().begin(), t.data().end(), mean);
    return t;
  }
  for (double& v : t.data()) v = rng.normal(mean, stddev);
  return t;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw Error(ErrorKind::ShapeMismatch,
                std::string(what) + ": " + shape_to_string(a.shape()) + " vs " + shape_to_string(b.shape()));
  }
}

Tensor ew_binary(const Tensor& a, const Tensor& b, BinaryOp op) {
  require_same_shape(a, b, "ew_binary");
  Tensor out(a.shape());
  auto x = a.data();
  auto y = b.data();
  auto o = out.data();
  switch (op) {
    case BinaryOp::Add:
      for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] + y[i];
      break;
    case BinaryOp::Sub:
      for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] - y[i];
      break;
    case BinaryOp::Mul:
      for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] * y[i];
      break;
  }
  debug_check_finite(out, {&a, &b}, "ew_binary");
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) { return ew_binary(a, b, BinaryOp::Add); }
Tensor sub(const Tensor& a, const Tensor& b) { return ew_binary(a, b, BinaryOp::Sub); }
Tensor mul(const Tensor& a, const Tensor& b) { return ew_binary(a, b, BinaryOp::Mul); }

Tensor scale(const Tensor& a, double factor) {
  Tensor out(a.shape());
  auto x = a.data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = factor * x[i];
  return out;
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  if (lo > hi) throw Error(ErrorKind::InvalidRange, "clamp requires lo <= hi");
  Tensor out(a.shape());
  auto x = a.data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = std::clamp(x[i], lo, hi);
  return out;
}

double sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  return s;
}

double mean(const Tensor& a) { return sum(a) / static_cast<double>(a.numel()); }

void axpy_inplace(Tensor& acc, const Tensor& b, double alpha) {
  require_same_shape(acc, b, "axpy");
  auto o = acc.data();
  auto x = b.data();
  if (alpha == 1.0) {
    for (std::size_t i = 0; i < o.size(); ++i) o[i] += x[i];
  } else {
    for (std::size_t i = 0; i < o.size(); ++i) o[i] += alpha * x[i];
  }
}

bool all_finite(const Tensor& a) noexcept {
  return std::all_of(a.data().begin(), a.data().end(), [](double v) { return std::isfinite(v); });
}

#ifndef NDEBUG
void debug_check_finite(const Tensor& out, std::initializer_list<const Tensor*> inputs, const char* where) {
  for (const Tensor* t : inputs) {
    if (!all_finite(*t)) return;
  }
  assert(all_finite(out) && where);
  (void)where;
}
#endif

}  // namespace dip
