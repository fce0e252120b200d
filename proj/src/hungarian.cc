#include "sv6d/hungarian.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "sv6d/error.h"

namespace sv6d {

CostMatrix::CostMatrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() == 0 ? 0 : rows.begin()->size()) {
  data_.reserve(rows_ * cols_);
  for (const auto& row : rows) {
    if (row.size() != cols_) throw Error(ErrorKind::kInvalidArgument, "ragged cost matrix");
    data_.insert(data_.end(), row.begin(), row.end());
  }
}

namespace {

struct SquareSolution {
  std::vector<std::size_t> row_to_col;
  std::vector<std::size_t> col_to_row;
  std::vector<double> u;  // row potentials
  std::vector<double> v;  // column potentials
};

// Shortest augmenting path Hungarian method with potentials, O(n^3).
template <typename Cell>
SquareSolution solve_square(std::size_t n, const Cell& cell) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cell(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  SquareSolution sol;
  sol.row_to_col.assign(n, 0);
  sol.col_to_row.assign(n, 0);
  for (std::size_t j = 1; j <= n; ++j) {
    sol.col_to_row[j - 1] = p[j] - 1;
    sol.row_to_col[p[j] - 1] = j - 1;
  }
  sol.u.assign(u.begin() + 1, u.end());
  sol.v.assign(v.begin() + 1, v.end());
  return sol;
}

// Moves to the lexicographically smallest assignment among those using only
// tight cells (zero reduced cost), which are exactly the optimal ones.
template <typename Cell>
void lexicographic_refine(std::size_t n, const Cell& cell, double eps, SquareSolution& sol) {
  auto tight = [&](std::size_t r, std::size_t c) {
    return cell(r, c) - sol.u[r] - sol.v[c] <= eps;
  };
  std::vector<char> locked(n, 0);
  std::vector<char> visited(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < sol.row_to_col[i]; ++j) {
      if (locked[j] || !tight(i, j)) continue;
      const std::size_t freed = sol.row_to_col[i];
      const std::size_t displaced = sol.col_to_row[j];
      std::fill(visited.begin(), visited.end(), 0);
      visited[j] = 1;
      std::function<bool(std::size_t)> reroute = [&](std::size_t row) -> bool {
        for (std::size_t c = 0; c < n; ++c) {
          if (locked[c] || visited[c] || !tight(row, c)) continue;
          visited[c] = 1;
          if (c == freed || reroute(sol.col_to_row[c])) {
            sol.row_to_col[row] = c;
            sol.col_to_row[c] = row;
            return true;
          }
        }
        return false;
      };
      if (reroute(displaced)) {
        sol.row_to_col[i] = j;
        sol.col_to_row[j] = i;
        break;
      }
    }
    locked[sol.row_to_col[i]] = 1;
  }
}

Assignment collect(const CostMatrix& costs, const std::vector<std::size_t>& row_to_col) {
  Assignment out;
  for (std::size_t r = 0; r < costs.rows(); ++r) {
    const std::size_t c = row_to_col[r];
    if (c < costs.cols()) {
      out.pairs.emplace_back(r, c);
      out.total_cost += costs(r, c);
    }
  }
  return out;
}

}  // namespace

Assignment hungarian_match(const CostMatrix& costs) {
  if (costs.empty()) return {};
  double scale = 1.0;
  for (std::size_t r = 0; r < costs.rows(); ++r) {
    for (std::size_t c = 0; c < costs.cols(); ++c) {
      const double x = costs(r, c);
      if (!std::isfinite(x) || x < 0.0) {
        throw Error(ErrorKind::kInvalidArgument,
                    "cost matrix entries must be finite and non-negative");
      }
      scale = std::max(scale, x);
    }
  }
  const std::size_t n = std::max(costs.rows(), costs.cols());
  auto cell = [&](std::size_t r, std::size_t c) {
    return (r < costs.rows() && c < costs.cols()) ? costs(r, c) : kDummyCost;
  };
  SquareSolution sol = solve_square(n, cell);
  Assignment optimal = collect(costs, sol.row_to_col);

  lexicographic_refine(n, cell, 1e-10 * std::max(scale, kDummyCost), sol);
  Assignment refined = collect(costs, sol.row_to_col);
  // Tightness is tested with a tolerance; never trade optimality for order.
  return refined.total_cost <= optimal.total_cost ? refined : optimal;
}

}  // namespace sv6d
