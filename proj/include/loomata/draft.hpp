#pragma once

// Cloth semantics for binary grids. State 1 means the warp end passes over
// the weft pick (warp-up); state 0 means weft-up.

#include <algorithm>
#include <map>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "loomata/automaton.hpp"
#include "loomata/image.hpp"

namespace loomata {

inline constexpr State kWeftUp = 0;
inline constexpr State kWarpUp = 1;
inline constexpr int kDefaultLoomCapacity = 32;

/// Palette with at least `k` entries: light weft, dark warp, then accents.
std::vector<Rgb> default_palette(int k = 2);

class Drawdown {
 public:
  /// Empty color arrays select defaults (warp color 1, weft color 0, default
  /// palette). Throws UnsupportedError for k != 2 and ValidationError for
  /// mismatched lengths or out-of-range color indices.
  Drawdown(PatternGrid grid, std::vector<int> warp_colors = {}, std::vector<int> weft_colors = {},
           std::vector<Rgb> palette = {});

  const PatternGrid& grid() const noexcept { return grid_; }
  const StateMatrix& cells() const noexcept { return grid_.cells(); }
  int ends() const noexcept { return grid_.width(); }
  int picks() const noexcept { return grid_.rows(); }
  const std::vector<int>& warp_colors() const noexcept { return warp_colors_; }
  const std::vector<int>& weft_colors() const noexcept { return weft_colors_; }
  const std::vector<Rgb>& palette() const noexcept { return palette_; }

  friend bool operator==(const Drawdown&, const Drawdown&) = default;

 private:
  PatternGrid grid_;
  std::vector<int> warp_colors_;
  std::vector<int> weft_colors_;
  std::vector<Rgb> palette_;
};

inline Drawdown drawdown_from_grid(PatternGrid grid, std::vector<int> warp_colors = {},
                                   std::vector<int> weft_colors = {},
                                   std::vector<Rgb> palette = {}) {
  return Drawdown(std::move(grid), std::move(warp_colors), std::move(weft_colors),
                  std::move(palette));
}

struct StateMapping {
  bool warp_up = false;
  int color = 0;
  friend bool operator==(const StateMapping&, const StateMapping&) = default;
};

/// state 0 -> (weft-up, color 0), state s > 0 -> (warp-up, color s).
std::vector<StateMapping> default_mapping(int k);

struct ColorSeparation {
  PatternGrid structure;
  /// Per pick: color of the most frequent state among its weft-up cells, or
  /// among all its cells when none is weft-up. Ties go to the lower state.
  std::vector<int> weft_colors;
};

ColorSeparation color_separate(const PatternGrid& grid,
                               const std::vector<StateMapping>& mapping = {});

struct FloatReport {
  int max_warp_float = 0;            // longest vertical warp-up run
  int max_weft_float = 0;            // longest horizontal weft-up run
  std::map<int, int> warp_histogram;  // run length -> count
  std::map<int, int> weft_histogram;
  friend bool operator==(const FloatReport&, const FloatReport&) = default;
};

/// Maximal-run statistics over any binary matrix expression. Runs never wrap.
template <typename Derived>
FloatReport scan_floats(const Eigen::MatrixBase<Derived>& cells) {
  FloatReport report;
  const Eigen::Index rows = cells.rows();
  const Eigen::Index cols = cells.cols();
  for (Eigen::Index r = 0; r < rows; ++r) {
    int run = 0;
    for (Eigen::Index c = 0; c <= cols; ++c) {
      if (c < cols && cells(r, c) == kWeftUp) {
        ++run;
      } else if (run > 0) {
        ++report.weft_histogram[run];
        report.max_weft_float = std::max(report.max_weft_float, run);
        run = 0;
      }
    }
  }
  for (Eigen::Index c = 0; c < cols; ++c) {
    int run = 0;
    for (Eigen::Index r = 0; r <= rows; ++r) {
      if (r < rows && cells(r, c) == kWarpUp) {
        ++run;
      } else if (run > 0) {
        ++report.warp_histogram[run];
        report.max_warp_float = std::max(report.max_warp_float, run);
        run = 0;
      }
    }
  }
  return report;
}

FloatReport float_report(const Drawdown& drawdown);

struct LoomDraft {
  int shaft_count = 0;
  std::vector<int> threading;             // per end, 0-based shaft
  std::vector<std::vector<int>> liftplan;  // per pick, ascending 0-based shafts
  Drawdown drawdown;

  friend bool operator==(const LoomDraft& a, const LoomDraft& b) {
    return a.shaft_count == b.shaft_count && a.threading == b.threading &&
           a.liftplan == b.liftplan && same_cells(a.drawdown.cells(), b.drawdown.cells()) &&
           a.drawdown.warp_colors() == b.drawdown.warp_colors() &&
           a.drawdown.weft_colors() == b.drawdown.weft_colors() &&
           a.drawdown.palette() == b.drawdown.palette();
  }
};

/// Shafts are the distinct drawdown columns numbered by first occurrence.
/// Throws CapacityError when more than `capacity` shafts are needed.
LoomDraft factorize(const Drawdown& drawdown, int capacity = kDefaultLoomCapacity);

/// End e is warp-up on pick p iff threading[e] is in liftplan[p].
StateMatrix reconstruct(const std::vector<int>& threading,
                        const std::vector<std::vector<int>>& liftplan);

/// (picks * cell_px) x (ends * cell_px) RGB preview.
Image render(const Drawdown& drawdown, int cell_px = 1);

}  // namespace loomata
