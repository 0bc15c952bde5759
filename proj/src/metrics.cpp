#include "loomata/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <thread>

#include "loomata/error.hpp"

namespace loomata {

namespace {

struct RowRange {
  Eigen::Index first;
  Eigen::Index count;
};

RowRange scope_rows(const PatternGrid& grid, Scope scope) {
  RowRange range = scope == Scope::GeneratedRows ? RowRange{grid.init_rows(), grid.generated_rows()}
                                                 : RowRange{0, grid.rows()};
  if (range.count <= 0)
    throw DomainError(scope == Scope::GeneratedRows ? "grid has no generated rows"
                                                    : "grid has no rows");
  return range;
}

std::vector<std::size_t> state_counts(const PatternGrid& grid, Scope scope) {
  const auto range = scope_rows(grid, scope);
  std::vector<std::size_t> counts(grid.k(), 0);
  const auto block = grid.cells().middleRows(range.first, range.count);
  for (Eigen::Index r = 0; r < block.rows(); ++r)
    for (Eigen::Index c = 0; c < block.cols(); ++c) ++counts[block(r, c)];
  return counts;
}

double entropy_of(const std::vector<double>& probabilities) {
  double h = 0.0;
  for (double p : probabilities)
    if (p > 0.0) h -= p * std::log2(p);
  return h;
}

Ratio ratio_of(std::size_t count_a, std::size_t count_b) {
  if (count_b == 0) return Ratio::infinite();
  return Ratio::finite(static_cast<double>(count_a) / static_cast<double>(count_b));
}

}  // namespace

double binary_entropy(double p) {
  double h = 0.0;
  if (p > 0.0) h -= p * std::log2(p);
  if (p < 1.0) h -= (1.0 - p) * std::log2(1.0 - p);
  return h;
}

SymbolEntropy symbol_entropy(const PatternGrid& grid, Scope scope) {
  const auto counts = state_counts(grid, scope);
  std::size_t total = 0;
  for (auto n : counts) total += n;
  SymbolEntropy result;
  result.frequencies.reserve(counts.size());
  for (auto n : counts)
    result.frequencies.push_back(static_cast<double>(n) / static_cast<double>(total));
  result.entropy = entropy_of(result.frequencies);
  return result;
}

Ratio state_ratio(const PatternGrid& grid, Scope scope) {
  if (grid.k() != 2)
    throw UnsupportedError("state ratio is defined for k=2 only, got k=" +
                           std::to_string(grid.k()));
  const auto counts = state_counts(grid, scope);
  return ratio_of(counts[1], counts[0]);
}

double block_entropy(const PatternGrid& grid, int block_length, Scope scope) {
  if (block_length < 1) throw DomainError("block length must be >= 1");
  if (block_length > grid.width())
    throw DomainError("block length " + std::to_string(block_length) + " exceeds width " +
                      std::to_string(grid.width()));
  const auto range = scope_rows(grid, scope);
  const auto block = grid.cells().middleRows(range.first, range.count);
  const Eigen::Index width = block.cols();

  std::map<std::string, std::size_t> words;
  std::string word(block_length, '\0');
  for (Eigen::Index r = 0; r < block.rows(); ++r)
    for (Eigen::Index c = 0; c < width; ++c) {
      for (int j = 0; j < block_length; ++j)
        word[j] = static_cast<char>(block(r, (c + j) % width));
      ++words[word];
    }
  const double total = static_cast<double>(block.rows() * width);
  std::vector<double> probabilities;
  probabilities.reserve(words.size());
  for (const auto& [w, n] : words) probabilities.push_back(static_cast<double>(n) / total);
  return entropy_of(probabilities);
}

void validate(const WeavabilityConfig& cfg) {
  if (!(cfg.h_min > 0.0)) throw ValidationError("h_min", "must be positive");
  if (!(cfg.h_max > 0.0)) throw ValidationError("h_max", "must be positive");
  if (!(cfg.h_min <= 1.0 && 1.0 <= cfg.h_max))
    throw ValidationError("h_min", "band must satisfy h_min <= 1 <= h_max");
  if (cfg.max_float < 1) throw ValidationError("max_float", "must be >= 1");
}

const char* to_string(Violation v) {
  switch (v) {
    case Violation::Ratio: return "ratio";
    case Violation::WarpFloat: return "warp-float";
    case Violation::WeftFloat: return "weft-float";
  }
  return "?";
}

Violation parse_violation(std::string_view text) {
  if (text == "ratio") return Violation::Ratio;
  if (text == "warp-float") return Violation::WarpFloat;
  if (text == "weft-float") return Violation::WeftFloat;
  throw ValidationError("reasons", "unknown reason '" + std::string(text) + "'");
}

Weavability weaveability(const RuleMetrics& metrics, const WeavabilityConfig& cfg) {
  Weavability result;
  const Ratio& h = metrics.ratio;
  if (h.is_infinite() || h.value() < cfg.h_min || h.value() > cfg.h_max)
    result.reasons.push_back(Violation::Ratio);
  if (metrics.max_warp_float > cfg.max_float) result.reasons.push_back(Violation::WarpFloat);
  if (metrics.max_weft_float > cfg.max_float) result.reasons.push_back(Violation::WeftFloat);
  result.weaveable = result.reasons.empty();
  return result;
}

RuleMetrics compute_metrics(const PatternGrid& grid, const MetricsOptions& options) {
  validate(options.weave);
  RuleMetrics m;
  m.rule_id = grid.meta().rule_id;
  auto symbols = symbol_entropy(grid, options.scope);
  m.frequencies = std::move(symbols.frequencies);
  m.entropy = symbols.entropy;
  m.block_length = options.block_length;
  m.block_entropy = block_entropy(grid, options.block_length, options.scope);

  const PatternGrid structure = grid.k() == 2 ? grid : color_separate(grid).structure;
  m.ratio = state_ratio(structure, options.scope);
  const auto range = scope_rows(structure, options.scope);
  const auto floats = scan_floats(structure.cells().middleRows(range.first, range.count));
  m.max_warp_float = floats.max_warp_float;
  m.max_weft_float = floats.max_weft_float;

  auto gate = weaveability(m, options.weave);
  m.weaveable = gate.weaveable;
  m.reasons = std::move(gate.reasons);
  return m;
}

std::vector<RuleMetrics> sweep_elementary(const EvolutionConfig& config,
                                          const MetricsOptions& options, int threads) {
  if (config.steps < 1) throw DomainError("sweep needs steps >= 1");
  validate(options.weave);
  std::vector<RuleMetrics> results(256);
  const auto run = [&](int first, int stride) {
    for (int n = first; n < 256; n += stride)
      results[n] = compute_metrics(evolve(rule_from_wolfram_number(n), config), options);
  };
  threads = std::clamp(threads, 1, 256);
  if (threads == 1) {
    run(0, 1);
  } else {
    std::vector<std::exception_ptr> errors(threads);
    {
      std::vector<std::jthread> workers;
      for (int t = 0; t < threads; ++t)
        workers.emplace_back([&, t] {
          try {
            run(t, threads);
          } catch (...) {
            errors[t] = std::current_exception();
          }
        });
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  return results;
}

EntropyRatioTable entropy_ratio_table(const std::vector<RuleMetrics>& sweep) {
  EntropyRatioTable table;
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    const auto& m = sweep[i];
    EntropyRatioRow row{static_cast<int>(i), m.ratio, m.entropy, m.weaveable};
    if (!m.rule_id.empty()) row.rule = std::stoi(m.rule_id);
    const bool on_axis = !m.ratio.is_infinite() && m.ratio.value() > 0.0;
    (on_axis ? table.plottable : table.gutter).push_back(row);
  }
  std::stable_sort(table.plottable.begin(), table.plottable.end(),
                   [](const EntropyRatioRow& a, const EntropyRatioRow& b) {
                     if (a.ratio.value() != b.ratio.value()) return a.ratio.value() < b.ratio.value();
                     return a.rule < b.rule;
                   });
  std::stable_sort(table.gutter.begin(), table.gutter.end(),
                   [](const EntropyRatioRow& a, const EntropyRatioRow& b) {
                     if (a.ratio.is_infinite() != b.ratio.is_infinite()) return !a.ratio.is_infinite();
                     return a.rule < b.rule;
                   });
  return table;
}

}  // namespace loomata
