#include "loomata/draft.hpp"

#include <algorithm>

#include "loomata/error.hpp"

namespace loomata {

std::vector<Rgb> default_palette(int k) {
  static const std::vector<Rgb> kBase = {
      {236, 228, 208},  // undyed weft
      {48, 42, 40},     // dark warp
      {176, 58, 46},   {40, 96, 140}, {214, 162, 52}, {70, 120, 72},
      {122, 72, 130},  {90, 160, 170},
  };
  std::vector<Rgb> palette = kBase;
  // Deterministic filler for large k.
  for (int i = static_cast<int>(palette.size()); i < k; ++i)
    palette.push_back({static_cast<std::uint8_t>((i * 97) % 256),
                       static_cast<std::uint8_t>((i * 57 + 80) % 256),
                       static_cast<std::uint8_t>((i * 151 + 30) % 256)});
  return palette;
}

Drawdown::Drawdown(PatternGrid grid, std::vector<int> warp_colors, std::vector<int> weft_colors,
                   std::vector<Rgb> palette)
    : grid_(std::move(grid)),
      warp_colors_(std::move(warp_colors)),
      weft_colors_(std::move(weft_colors)),
      palette_(std::move(palette)) {
  if (grid_.k() != 2)
    throw UnsupportedError("drawdown needs a binary grid; color-separate k=" +
                           std::to_string(grid_.k()) + " grids first");
  if (palette_.empty()) palette_ = default_palette(2);
  if (warp_colors_.empty()) warp_colors_.assign(grid_.width(), 1);
  if (weft_colors_.empty()) weft_colors_.assign(grid_.rows(), 0);
  if (static_cast<int>(warp_colors_.size()) != grid_.width())
    throw ValidationError("warp_colors", "expected " + std::to_string(grid_.width()) +
                                             " entries, got " +
                                             std::to_string(warp_colors_.size()));
  if (static_cast<int>(weft_colors_.size()) != grid_.rows())
    throw ValidationError("weft_colors", "expected " + std::to_string(grid_.rows()) +
                                             " entries, got " +
                                             std::to_string(weft_colors_.size()));
  const auto check = [&](const std::vector<int>& colors, const char* name) {
    for (std::size_t i = 0; i < colors.size(); ++i)
      if (colors[i] < 0 || colors[i] >= static_cast<int>(palette_.size()))
        throw ValidationError(std::string(name) + "[" + std::to_string(i) + "]",
                              "color index outside palette of " +
                                  std::to_string(palette_.size()));
  };
  check(warp_colors_, "warp_colors");
  check(weft_colors_, "weft_colors");
}

std::vector<StateMapping> default_mapping(int k) {
  std::vector<StateMapping> mapping(k);
  mapping[0] = {false, 0};
  for (int s = 1; s < k; ++s) mapping[s] = {true, s};
  return mapping;
}

ColorSeparation color_separate(const PatternGrid& grid, const std::vector<StateMapping>& mapping) {
  const int k = grid.k();
  const auto& map = mapping.empty() ? default_mapping(k) : mapping;
  if (static_cast<int>(map.size()) < k)
    throw ValidationError("mapping[" + std::to_string(map.size()) + "]",
                          "no mapping for state " + std::to_string(map.size()));
  for (std::size_t s = 0; s < map.size(); ++s)
    if (map[s].color < 0)
      throw ValidationError("mapping[" + std::to_string(s) + "]", "negative color index");

  StateMatrix structure(grid.rows(), grid.width());
  std::vector<int> weft_colors(grid.rows());
  std::vector<int> weft_counts(k), all_counts(k);
  for (int r = 0; r < grid.rows(); ++r) {
    std::fill(weft_counts.begin(), weft_counts.end(), 0);
    std::fill(all_counts.begin(), all_counts.end(), 0);
    for (int c = 0; c < grid.width(); ++c) {
      const State s = grid(r, c);
      structure(r, c) = map[s].warp_up ? kWarpUp : kWeftUp;
      ++all_counts[s];
      if (!map[s].warp_up) ++weft_counts[s];
    }
    const bool any_weft = std::any_of(weft_counts.begin(), weft_counts.end(),
                                      [](int n) { return n > 0; });
    const auto& counts = any_weft ? weft_counts : all_counts;
    const auto best = std::max_element(counts.begin(), counts.end()) - counts.begin();
    weft_colors[r] = map[best].color;
  }
  return {PatternGrid(std::move(structure), 2, grid.init_rows(), grid.meta()),
          std::move(weft_colors)};
}

FloatReport float_report(const Drawdown& drawdown) { return scan_floats(drawdown.cells()); }

LoomDraft factorize(const Drawdown& drawdown, int capacity) {
  const StateMatrix& cells = drawdown.cells();
  const Eigen::Index ends = cells.cols();
  std::vector<Eigen::Index> representatives;  // first end of each shaft
  std::vector<int> threading(ends);
  for (Eigen::Index e = 0; e < ends; ++e) {
    auto same = std::find_if(representatives.begin(), representatives.end(),
                             [&](Eigen::Index rep) { return cells.col(rep) == cells.col(e); });
    if (same == representatives.end()) {
      threading[e] = static_cast<int>(representatives.size());
      representatives.push_back(e);
    } else {
      threading[e] = static_cast<int>(same - representatives.begin());
    }
  }
  const int shafts = static_cast<int>(representatives.size());
  if (shafts > capacity) throw CapacityError(shafts, capacity);

  std::vector<std::vector<int>> liftplan(cells.rows());
  for (Eigen::Index p = 0; p < cells.rows(); ++p)
    for (int s = 0; s < shafts; ++s)
      if (cells(p, representatives[s]) == kWarpUp) liftplan[p].push_back(s);

  return {shafts, std::move(threading), std::move(liftplan), drawdown};
}

StateMatrix reconstruct(const std::vector<int>& threading,
                        const std::vector<std::vector<int>>& liftplan) {
  StateMatrix cells = StateMatrix::Zero(static_cast<Eigen::Index>(liftplan.size()),
                                        static_cast<Eigen::Index>(threading.size()));
  for (std::size_t p = 0; p < liftplan.size(); ++p)
    for (std::size_t e = 0; e < threading.size(); ++e)
      if (std::find(liftplan[p].begin(), liftplan[p].end(), threading[e]) != liftplan[p].end())
        cells(p, e) = kWarpUp;
  return cells;
}

Image render(const Drawdown& drawdown, int cell_px) {
  if (cell_px < 1) throw DomainError("cell_px must be >= 1");
  const int ends = drawdown.ends();
  const int picks = drawdown.picks();
  Image image(ends * cell_px, picks * cell_px, 3);
  const auto& palette = drawdown.palette();
  for (int p = 0; p < picks; ++p)
    for (int e = 0; e < ends; ++e) {
      const Rgb color = drawdown.cells()(p, e) == kWarpUp
                            ? palette[drawdown.warp_colors()[e]]
                            : palette[drawdown.weft_colors()[p]];
      for (int y = p * cell_px; y < (p + 1) * cell_px; ++y)
        for (int x = e * cell_px; x < (e + 1) * cell_px; ++x) {
          auto* px = image.pixel(x, y);
          px[0] = color.r;
          px[1] = color.g;
          px[2] = color.b;
        }
    }
  return image;
}

}  // namespace loomata
