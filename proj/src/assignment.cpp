#include "swgauge/assignment.hpp"

#include <limits>

#include "swgauge/errors.hpp"

namespace swgauge {

Assignment solve_assignment(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  if (n == 0 || cost.cols() != cost.rows()) throw InvalidInput("assignment needs a non-empty square cost matrix");
  if (!cost.allFinite()) throw InvalidInput("assignment cost matrix has non-finite entries");

  const double inf = std::numeric_limits<double>::infinity();
  // 1-based arrays; column 0 is the virtual root of each augmenting search.
  std::vector<double> u(n + 1, 0.0);
  std::vector<double> v(n + 1, 0.0);
  std::vector<int> match(n + 1, 0);  // match[col] = row
  std::vector<int> way(n + 1, 0);

  for (int row = 1; row <= n; ++row) {
    match[0] = row;
    int col0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[col0] = 1;
      const int i0 = match[col0];
      double delta = inf;
      int col1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double reduced = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (reduced < minv[j]) {
          minv[j] = reduced;
          way[j] = col0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          col1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      col0 = col1;
    } while (match[col0] != 0);
    do {
      const int col1 = way[col0];
      match[col0] = match[col1];
      col0 = col1;
    } while (col0 != 0);
  }

  Assignment result;
  result.row_to_col.assign(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= n; ++j) result.row_to_col[static_cast<std::size_t>(match[j] - 1)] = j - 1;
  for (int i = 0; i < n; ++i) result.cost += cost(i, result.row_to_col[static_cast<std::size_t>(i)]);
  return result;
}

}  // namespace swgauge
