#include "svcsub/assignment.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace svcsub {

namespace {

constexpr double kCostEpsilon = 1e-12;

bool better(MatchValue v, double cost, const Assignment& best, bool have_best) {
  if (!have_best) return true;
  if (v != best.value) return v < best.value;
  return cost < best.cost - kCostEpsilon;
}

struct Enumerator {
  const CellMatrix& m;
  MatchValue floor;
  std::vector<std::size_t> current;
  std::vector<bool> used;
  Assignment best;
  bool have_best = false;

  void run(std::size_t row, MatchValue worst_so_far, double cost) {
    if (have_best && best.value < worst_so_far) return;
    if (row == m.rows()) {
      if (better(worst_so_far, cost, best, have_best)) {
        best.value = worst_so_far;
        best.cost = cost;
        best.columns = current;
        have_best = true;
      }
      return;
    }
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (used[c]) continue;
      const auto& cell = m.at(row, c);
      used[c] = true;
      current[row] = c;
      run(row + 1, worst(worst_so_far, cell.value), cost + cell.cost);
      used[c] = false;
    }
  }
};

void check_shape(const CellMatrix& m) {
  if (m.rows() > m.cols())
    throw std::invalid_argument("assignment requires rows <= cols");
}

}  // namespace

std::vector<std::size_t> hungarian(std::size_t rows, std::size_t cols,
                                   const std::vector<double>& costs) {
  if (rows > cols) throw std::invalid_argument("hungarian requires rows <= cols");
  if (rows == 0) return {};
  // Potentials formulation, 1-based with a virtual column 0.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(rows + 1, 0.0), v(cols + 1, 0.0);
  std::vector<std::size_t> p(cols + 1, 0), way(cols + 1, 0);
  for (std::size_t i = 1; i <= rows; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(cols + 1, inf);
    std::vector<bool> visited(cols + 1, false);
    do {
      visited[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= cols; ++j) {
        if (visited[j]) continue;
        const double cur = costs[(i0 - 1) * cols + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= cols; ++j) {
        if (visited[j]) {
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
  std::vector<std::size_t> columns(rows, 0);
  for (std::size_t j = 1; j <= cols; ++j)
    if (p[j] != 0) columns[p[j] - 1] = j - 1;
  return columns;
}

Assignment enumerate_assignment(const CellMatrix& m, MatchValue floor) {
  check_shape(m);
  Enumerator e{m, floor, std::vector<std::size_t>(m.rows(), 0), std::vector<bool>(m.cols(), false),
               {}, false};
  e.run(0, floor, 0.0);
  return e.best;
}

Assignment threshold_assignment(const CellMatrix& m, MatchValue floor) {
  check_shape(m);
  if (m.rows() == 0) return {floor, 0.0, {}};
  // Inadmissible cells get a penalty larger than any admissible total.
  double span = 1.0;
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) span += std::abs(m.at(r, c).cost);
  const double penalty = span * 4.0 + 1.0;

  std::vector<double> costs(m.rows() * m.cols());
  for (auto level = static_cast<int>(floor); level <= static_cast<int>(MatchValue::Fail); ++level) {
    const auto threshold = static_cast<MatchValue>(level);
    for (std::size_t r = 0; r < m.rows(); ++r)
      for (std::size_t c = 0; c < m.cols(); ++c) {
        const auto& cell = m.at(r, c);
        costs[r * m.cols() + c] = cell.value <= threshold ? cell.cost : cell.cost + penalty;
      }
    auto columns = hungarian(m.rows(), m.cols(), costs);
    Assignment a{floor, 0.0, std::move(columns)};
    bool admissible = true;
    for (std::size_t r = 0; r < m.rows(); ++r) {
      const auto& cell = m.at(r, a.columns[r]);
      if (cell.value > threshold) {
        admissible = false;
        break;
      }
      a.value = worst(a.value, cell.value);
      a.cost += cell.cost;
    }
    if (admissible) return a;
  }
  throw std::logic_error("threshold assignment found no feasible level");
}

Assignment best_assignment(const CellMatrix& m, MatchValue floor) {
  return m.cols() <= kMaxEnumeration ? enumerate_assignment(m, floor)
                                     : threshold_assignment(m, floor);
}

}  // namespace svcsub
