// Copyright 2026 The SIAN Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SIAN_CORE_ARRAY_HPP_
#define SIAN_CORE_ARRAY_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sian {

using Shape = std::vector<int64_t>;

[[noreturn]] inline void fail(const std::string& msg) {
  throw std::invalid_argument(msg);
}

[[noreturn]] inline void fail_runtime(const std::string& msg) {
  throw std::runtime_error(msg);
}

inline void check(bool cond, const std::string& msg) {
  if (!cond) fail(msg);
}

inline void check_runtime(bool cond, const std::string& msg) {
  if (!cond) fail_runtime(msg);
}

inline int64_t shape_size(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ']';
  return os.str();
}

// Dense row-major n-d array. Copies are shallow (shared buffer); clone()
// makes an independent copy. Ops throughout the codebase treat arrays as
// immutable values unless they created the buffer themselves.
template <typename T>
class Array {
 public:
  Array() = default;

  explicit Array(Shape shape) : shape_(std::move(shape)) {
    for (int64_t d : shape_) check(d >= 0, "Array: bad dim in " + shape_str(shape_));
    size_ = shape_size(shape_);
    data_ = std::shared_ptr<T[]>(new T[static_cast<size_t>(std::max<int64_t>(size_, 1))]());
  }

  static Array zeros(Shape shape) { return Array(std::move(shape)); }

  static Array full(Shape shape, T v) {
    Array a(std::move(shape));
    std::fill_n(a.data(), a.size(), v);
    return a;
  }

  static Array from(Shape shape, const std::vector<T>& v) {
    Array a(std::move(shape));
    check(static_cast<int64_t>(v.size()) == a.size(), "Array::from: size mismatch");
    std::copy(v.begin(), v.end(), a.data());
    return a;
  }

  static Array scalar(T v) { return full({1}, v); }

  bool defined() const { return data_ != nullptr; }
  const Shape& shape() const { return shape_; }
  int64_t size() const { return size_; }
  int ndim() const { return static_cast<int>(shape_.size()); }
  int64_t dim(int i) const { return shape_.at(static_cast<size_t>(i)); }

  T* data() { return data_.get(); }
  const T* data() const { return data_.get(); }

  T& operator[](int64_t i) { return data_[i]; }
  const T& operator[](int64_t i) const { return data_[i]; }

  // NCHW-style indexers; shape arity is the caller's contract.
  T& at(int64_t i, int64_t j) { return data_[i * shape_[1] + j]; }
  const T& at(int64_t i, int64_t j) const { return data_[i * shape_[1] + j]; }
  T& at(int64_t i, int64_t j, int64_t k) {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  const T& at(int64_t i, int64_t j, int64_t k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  T& at(int64_t n, int64_t c, int64_t y, int64_t x) {
    return data_[((n * shape_[1] + c) * shape_[2] + y) * shape_[3] + x];
  }
  const T& at(int64_t n, int64_t c, int64_t y, int64_t x) const {
    return data_[((n * shape_[1] + c) * shape_[2] + y) * shape_[3] + x];
  }

  Array clone() const {
    Array a(shape_);
    std::copy_n(data(), size_, a.data());
    return a;
  }

  // Shares the buffer under a new shape of equal element count.
  Array reshaped(Shape shape) const {
    check(shape_size(shape) == size_, "reshaped: element count mismatch " +
                                          shape_str(shape_) + " -> " + shape_str(shape));
    Array a;
    a.shape_ = std::move(shape);
    a.size_ = size_;
    a.data_ = data_;
    return a;
  }

  template <typename U>
  Array<U> astype() const {
    Array<U> a(shape_);
    for (int64_t i = 0; i < size_; ++i) a[i] = static_cast<U>(data_[i]);
    return a;
  }

  bool same_shape(const Array& o) const { return shape_ == o.shape_; }

  bool all_finite() const {
    for (int64_t i = 0; i < size_; ++i)
      if (!std::isfinite(static_cast<double>(data_[i]))) return false;
    return true;
  }

  void fill(T v) { std::fill_n(data(), size_, v); }

 private:
  template <typename U>
  friend class Array;

  Shape shape_;
  int64_t size_ = 0;
  std::shared_ptr<T[]> data_;
};

}  // namespace sian

#endif  // SIAN_CORE_ARRAY_HPP_
