#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gran/error.hpp"

namespace gran {

// Dense n-dimensional array of doubles in row-major order. This is the
// universal value type: images, activations, weights and gradients are all
// Tensors. Invariant: product(shape) == data.size(), every extent > 0.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    data_.assign(static_cast<size_t>(checked_numel(shape_)), 0.0);
  }

  Tensor(std::vector<int> shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (checked_numel(shape_) != static_cast<int64_t>(data_.size())) {
      throw ShapeError("tensor: shape " + shape_to_string(shape_) + " does not match data length " +
                       std::to_string(data_.size()));
    }
  }

  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  static Tensor full(std::vector<int> shape, double v) {
    Tensor t(std::move(shape));
    for (auto& x : t.data_) x = v;
    return t;
  }

  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
  static Tensor ones(std::vector<int> shape) { return full(std::move(shape), 1.0); }

  const std::vector<int>& shape() const { return shape_; }
  int ndim() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  int64_t numel() const { return static_cast<int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& vec() { return data_; }
  const std::vector<double>& vec() const { return data_; }

  double& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  double operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  // multi-index access; slow, meant for tests and setup code
  double& at(std::initializer_list<int> idx) { return data_[static_cast<size_t>(flat(idx))]; }
  double at(std::initializer_list<int> idx) const { return data_[static_cast<size_t>(flat(idx))]; }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  double item() const {
    if (numel() != 1) throw ShapeError("item: tensor has shape " + shape_str() + ", expected a scalar");
    return data_[0];
  }

  Tensor reshaped(std::vector<int> shape) const {
    if (checked_numel(shape) != numel()) {
      throw ShapeError("reshape: cannot view " + shape_str() + " as " + shape_to_string(shape));
    }
    return Tensor(std::move(shape), data_);
  }

  std::string shape_str() const { return shape_to_string(shape_); }

  static std::string shape_to_string(const std::vector<int>& s) {
    std::ostringstream os;
    for (size_t i = 0; i < s.size(); ++i) {
      if (i) os << 'x';
      os << s[i];
    }
    return s.empty() ? "scalar" : os.str();
  }

 private:
  static int64_t checked_numel(const std::vector<int>& shape) {
    if (shape.empty()) throw ShapeError("tensor: empty shape");
    int64_t n = 1;
    for (int d : shape) {
      if (d <= 0) throw ShapeError("tensor: non-positive extent in shape " + shape_to_string(shape));
      n *= d;
    }
    return n;
  }

  int64_t flat(std::initializer_list<int> idx) const {
    int64_t off = 0;
    size_t k = 0;
    for (int i : idx) {
      off = off * shape_[k] + i;
      ++k;
    }
    return off;
  }

  std::vector<int> shape_;
  std::vector<double> data_;
};

inline double l1_norm(const Tensor& t) {
  double s = 0.0;
  for (int64_t i = 0; i < t.numel(); ++i) s += std::fabs(t[i]);
  return s;
}

inline double l2_distance(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (int64_t i = 0; i < a.numel(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

inline double linf_distance(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

}  // namespace gran
