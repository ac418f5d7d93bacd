// Copyright (c) 2026 stereotrack contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <limits>
#include <vector>

namespace stereotrack {

/// Minimum-cost assignment (Kuhn-Munkres, shortest augmenting path, O(n^2 m)).
/// Rectangular matrices are handled by solving the transposed problem when
/// there are more rows than columns. Returns row -> column (-1 when a row is
/// left out because columns ran short). Deterministic for a given matrix.
inline std::vector<int> solve_assignment(const std::vector<std::vector<double>>& cost) {
  const int n_rows = static_cast<int>(cost.size());
  if (n_rows == 0) return {};
  const int n_cols = static_cast<int>(cost[0].size());
  if (n_cols == 0) return std::vector<int>(n_rows, -1);

  const bool transposed = n_rows > n_cols;
  const int n = transposed ? n_cols : n_rows;  // assigned side
  const int m = transposed ? n_rows : n_cols;
  auto at = [&](int i, int j) { return transposed ? cost[j][i] : cost[i][j]; };

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);

  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = 0;
      double delta = kInf;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = at(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
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
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }

  std::vector<int> row_to_col(n_rows, -1);
  for (int j = 1; j <= m; ++j) {
    if (p[j] == 0) continue;
    if (transposed)
      row_to_col[j - 1] = p[j] - 1;
    else
      row_to_col[p[j] - 1] = j - 1;
  }
  return row_to_col;
}

}  // namespace stereotrack
