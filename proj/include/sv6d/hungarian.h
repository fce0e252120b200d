#pragma once

// Minimum-cost assignment (Kuhn-Munkres) over rectangular cost matrices.

#include <cstddef>
#include <initializer_list>
#include <utility>
#include <vector>

namespace sv6d {

class CostMatrix {
 public:
  CostMatrix() = default;
  CostMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  CostMatrix(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0 || cols_ == 0; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct Assignment {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (row, col), ascending row
  double total_cost = 0.0;  // summed over pairs in row order
};

// Cost of a dummy cell when a rectangular matrix is padded to square. Any
// constant is exact for the optimum; 2.0 sits above the [0,1] cost range.
inline constexpr double kDummyCost = 2.0;

// Returns a partial bijection of size min(rows, cols) with minimal total cost.
// Among optimal assignments the lexicographically smallest one is chosen:
// the lowest row takes the lowest column it can while staying optimal, then
// the next row, and so on. Throws Error(kInvalidArgument) on negative or
// non-finite entries. An empty matrix yields an empty assignment.
Assignment hungarian_match(const CostMatrix& costs);

}  // namespace sv6d
