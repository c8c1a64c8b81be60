#pragma once

#include <cstddef>
#include <vector>

namespace topoforge {

/// Index of a raster cell; `a` runs along u, `b` along v.
struct Cell {
  int a = 0;
  int b = 0;

  friend bool operator==(const Cell&, const Cell&) = default;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

/// Dense row-major 2-D array indexed by (a, b) with `a` the slow index.
template <typename T>
class Grid2D {
 public:
  Grid2D() = default;
  Grid2D(int rows, int cols, const T& fill = T{})
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {}

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  T& operator()(int a, int b) { return data_[index(a, b)]; }
  const T& operator()(int a, int b) const { return data_[index(a, b)]; }
  T& operator[](Cell c) { return (*this)(c.a, c.b); }
  const T& operator[](Cell c) const { return (*this)(c.a, c.b); }

  bool contains(int a, int b) const noexcept { return a >= 0 && b >= 0 && a < rows_ && b < cols_; }

  std::size_t index(int a, int b) const noexcept { return static_cast<std::size_t>(a) * cols_ + b; }
  Cell cell(std::size_t flat) const noexcept {
    return {static_cast<int>(flat / cols_), static_cast<int>(flat % cols_)};
  }

  std::vector<T>& data() noexcept { return data_; }
  const std::vector<T>& data() const noexcept { return data_; }

  friend bool operator==(const Grid2D&, const Grid2D&) = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> data_;
};

}  // namespace topoforge
