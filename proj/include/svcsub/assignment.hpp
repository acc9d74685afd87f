#pragma once

#include <cstddef>
#include <vector>

#include "svcsub/ontology.hpp"

namespace svcsub {

/// Largest column count for which injections are enumerated exhaustively.
inline constexpr std::size_t kMaxEnumeration = 6;

struct AssignmentCell {
  MatchValue value = MatchValue::Fail;
  double cost = 0.0;
};

/// Row-major rows x cols grid of candidate pairings, rows <= cols.
class CellMatrix {
 public:
  CellMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), cells_(rows * cols) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  AssignmentCell& at(std::size_t r, std::size_t c) { return cells_[r * cols_ + c]; }
  const AssignmentCell& at(std::size_t r, std::size_t c) const { return cells_[r * cols_ + c]; }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<AssignmentCell> cells_;
};

struct Assignment {
  MatchValue value = MatchValue::Exact;  // worst cell, raised to the floor
  double cost = 0.0;
  std::vector<std::size_t> columns;  // columns[row]
};

/// Injective row -> column assignment minimising (max(floor, worst cell),
/// total cost) lexicographically. Exhaustive for cols <= kMaxEnumeration
/// (first optimum in lexicographic order wins ties); above that, the lowest
/// feasible class threshold is found and a min-cost assignment is solved over
/// the admissible cells. Requires rows <= cols.
Assignment best_assignment(const CellMatrix& m, MatchValue floor = MatchValue::Exact);

/// Exhaustive route only, for any size. Exposed for cross-checking.
Assignment enumerate_assignment(const CellMatrix& m, MatchValue floor = MatchValue::Exact);
/// Threshold + Hungarian route only, for any size. Exposed for cross-checking.
Assignment threshold_assignment(const CellMatrix& m, MatchValue floor = MatchValue::Exact);

/// Minimum-cost injective assignment of rows to columns (rows <= cols).
/// Returns columns[row].
std::vector<std::size_t> hungarian(std::size_t rows, std::size_t cols,
                                   const std::vector<double>& costs);

}  // namespace svcsub
