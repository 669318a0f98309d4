#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "holosplat/core/error.hpp"

namespace holosplat {

struct Shape {
  std::size_t ny = 0;
  std::size_t nx = 0;

  std::size_t size() const noexcept { return ny * nx; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

// Dense row-major (y-major) 2D array.
template <typename T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;
  explicit Grid(Shape shape, T fill = T{}) : shape_(shape), data_(shape.size(), fill) {}
  Grid(std::size_t ny, std::size_t nx, T fill = T{}) : Grid(Shape{ny, nx}, fill) {}

  Shape shape() const noexcept { return shape_; }
  std::size_t rows() const noexcept { return shape_.ny; }
  std::size_t cols() const noexcept { return shape_.nx; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t y, std::size_t x) noexcept { return data_[y * shape_.nx + x]; }
  const T& operator()(std::size_t y, std::size_t x) const noexcept {
    return data_[y * shape_.nx + x];
  }
  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }
  std::span<T> span() noexcept { return data_; }
  std::span<const T> span() const noexcept { return data_; }

  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  Shape shape_{};
  std::vector<T> data_;
};

template <typename A, typename B>
void require_same_shape(const Grid<A>& a, const Grid<B>& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw invalid_argument(std::string(what) + ": shape mismatch");
  }
}

}  // namespace holosplat
