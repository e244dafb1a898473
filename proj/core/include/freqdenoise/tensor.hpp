#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "freqdenoise/errors.hpp"

namespace freqdenoise {

template <class T>
struct dtype_traits;

template <>
struct dtype_traits<float> {
  static constexpr const char* name = "f32";
};
template <>
struct dtype_traits<double> {
  static constexpr const char* name = "f64";
};

// Value-semantic N-dimensional array, row-major, immutable once built.
// Copies are cheap (shared buffer). The scalar type doubles as the dtype
// tag: float for training, double for wide-precision tests and oracles.
template <class T>
class Tensor {
 public:
  using value_type = T;

  Tensor() : shape_{0}, data_(std::make_shared<std::vector<T>>()) {}

  static Tensor zeros(std::vector<std::size_t> shape) {
    std::size_t n = checked_size(shape);
    return Tensor(std::move(shape), std::make_shared<std::vector<T>>(n, T(0)));
  }

  static Tensor full(std::vector<std::size_t> shape, T v) {
    std::size_t n = checked_size(shape);
    return Tensor(std::move(shape), std::make_shared<std::vector<T>>(n, v));
  }

  static Tensor scalar(T v) {
    return Tensor({1}, std::make_shared<std::vector<T>>(1, v));
  }

  // Construction from external data: validates element count and rejects
  // non-finite values.
  static Tensor from_vector(std::vector<std::size_t> shape,
                            std::vector<T> values) {
    std::size_t n = checked_size(shape);
    if (n != values.size()) {
      throw DimensionError("tensor data length " +
                           std::to_string(values.size()) +
                           " does not match shape product " +
                           std::to_string(n));
    }
    for (T v : values) {
      if (!std::isfinite(static_cast<double>(v))) {
        throw NonFiniteError("non-finite value in tensor data");
      }
    }
    return Tensor(std::move(shape),
                  std::make_shared<std::vector<T>>(std::move(values)));
  }

  // Internal fast path: result buffers of already-validated computations.
  static Tensor wrap(std::vector<std::size_t> shape, std::vector<T> values) {
    return Tensor(std::move(shape),
                  std::make_shared<std::vector<T>>(std::move(values)));
  }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const { return data_->size(); }
  bool empty() const { return data_->empty(); }

  std::span<const T> data() const { return {data_->data(), data_->size()}; }
  const T* raw() const { return data_->data(); }
  T at(std::size_t i) const { return (*data_)[i]; }
  T at2(std::size_t r, std::size_t c) const {
    return (*data_)[r * shape_[1] + c];
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  Tensor reshaped(std::vector<std::size_t> shape) const {
    std::size_t n = checked_size(shape);
    if (n != size()) {
      throw DimensionError("reshape to incompatible element count");
    }
    return Tensor(std::move(shape), data_);
  }

  template <class U>
  Tensor<U> cast() const {
    std::vector<U> out(size());
    const auto& d = *data_;
    for (std::size_t i = 0; i < d.size(); ++i) out[i] = static_cast<U>(d[i]);
    return Tensor<U>::wrap(shape_, std::move(out));
  }

  bool all_finite() const {
    for (T v : *data_) {
      if (!std::isfinite(static_cast<double>(v))) return false;
    }
    return true;
  }

  static std::size_t checked_size(const std::vector<std::size_t>& shape) {
    if (shape.empty()) throw DimensionError("tensor shape must be non-empty");
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
  }

 private:
  Tensor(std::vector<std::size_t> shape,
         std::shared_ptr<std::vector<T>> data)
      : shape_(std::move(shape)), data_(std::move(data)) {}

  std::vector<std::size_t> shape_;
  std::shared_ptr<std::vector<T>> data_;
};

template <class T>
std::string shape_string(const Tensor<T>& t) {
  std::string s = "[";
  for (std::size_t i = 0; i < t.rank(); ++i) {
    if (i) s += ",";
    s += std::to_string(t.dim(i));
  }
  return s + "]";
}

}  // namespace freqdenoise
