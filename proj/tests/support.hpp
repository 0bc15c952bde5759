#pragma once

#include <initializer_list>
#include <random>
#include <string>

#include "loomata/automaton.hpp"

namespace loomata::test {

// Rows of digit characters, e.g. {"0110", "1001"}.
inline StateMatrix cells_from(std::initializer_list<std::string> rows) {
  StateMatrix m(static_cast<Eigen::Index>(rows.size()),
                static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = static_cast<State>(row[c] - '0');
    ++r;
  }
  return m;
}

inline PatternGrid grid_from(std::initializer_list<std::string> rows, int k = 2) {
  return PatternGrid(cells_from(rows), k);
}

inline StateMatrix random_cells(std::mt19937& gen, int rows, int cols, int k = 2) {
  std::uniform_int_distribution<int> pick(0, k - 1);
  StateMatrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = static_cast<State>(pick(gen));
  return m;
}

inline StateMatrix checkerboard(int rows, int cols) {
  StateMatrix m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = static_cast<State>((r + c) % 2);
  return m;
}

}  // namespace loomata::test
