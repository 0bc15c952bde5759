#pragma once

// Entropy and warp/weft balance statistics of pattern grids, the
// weaveability gate, and the elementary rule-space sweep.

#include <limits>
#include <string>
#include <vector>

#include "loomata/automaton.hpp"
#include "loomata/draft.hpp"

namespace loomata {

enum class Scope { GeneratedRows, AllRows };

/// Ratio count(state 1) / count(state 0). Infinity is a tag, not a double.
class Ratio {
 public:
  static Ratio finite(double value) { return Ratio(value, false); }
  static Ratio infinite() { return Ratio(std::numeric_limits<double>::infinity(), true); }

  bool is_infinite() const noexcept { return infinite_; }
  /// Finite value; +inf as a double when infinite (for plotting only).
  double value() const noexcept { return value_; }

  friend bool operator==(const Ratio& a, const Ratio& b) {
    return a.infinite_ == b.infinite_ && (a.infinite_ || a.value_ == b.value_);
  }

 private:
  Ratio(double v, bool inf) : value_(v), infinite_(inf) {}
  double value_;
  bool infinite_;
};

/// -p log2 p - (1-p) log2 (1-p), with 0 log 0 = 0.
double binary_entropy(double p);

struct SymbolEntropy {
  std::vector<double> frequencies;  // per state
  double entropy = 0.0;             // bits
};

SymbolEntropy symbol_entropy(const PatternGrid& grid, Scope scope = Scope::GeneratedRows);
Ratio state_ratio(const PatternGrid& grid, Scope scope = Scope::GeneratedRows);
/// Entropy of horizontal length-L windows, wrapping within each row.
double block_entropy(const PatternGrid& grid, int block_length,
                     Scope scope = Scope::GeneratedRows);

struct WeavabilityConfig {
  double h_min = 0.25;
  double h_max = 4.0;
  int max_float = 5;

  /// Symmetric band [1/h_max, h_max].
  static WeavabilityConfig symmetric(double h_max, int max_float) {
    return {1.0 / h_max, h_max, max_float};
  }
  friend bool operator==(const WeavabilityConfig&, const WeavabilityConfig&) = default;
};

void validate(const WeavabilityConfig& cfg);

enum class Violation { Ratio, WarpFloat, WeftFloat };
const char* to_string(Violation v);
Violation parse_violation(std::string_view text);

struct RuleMetrics {
  std::string rule_id;
  std::vector<double> frequencies;
  double entropy = 0.0;
  Ratio ratio = Ratio::finite(0.0);
  double block_entropy = 0.0;
  int block_length = 3;
  int max_warp_float = 0;
  int max_weft_float = 0;
  bool weaveable = false;
  std::vector<Violation> reasons;

  friend bool operator==(const RuleMetrics&, const RuleMetrics&) = default;
};

struct Weavability {
  bool weaveable = false;
  std::vector<Violation> reasons;
};

/// Ratio band and float limits; every violated clause is listed.
Weavability weaveability(const RuleMetrics& metrics, const WeavabilityConfig& cfg);

struct MetricsOptions {
  Scope scope = Scope::GeneratedRows;
  int block_length = 3;
  WeavabilityConfig weave;
};

/// Full metrics of a grid. Grids with k > 2 have ratio and floats measured on
/// their default color separation.
RuleMetrics compute_metrics(const PatternGrid& grid, const MetricsOptions& options = {});

/// Metrics of all 256 elementary rules on the shared initial condition in
/// `config`, ordered by rule number. `threads` > 1 fans out rule evaluation.
std::vector<RuleMetrics> sweep_elementary(const EvolutionConfig& config,
                                          const MetricsOptions& options = {}, int threads = 1);

struct EntropyRatioRow {
  int rule = 0;
  Ratio ratio = Ratio::finite(0.0);
  double entropy = 0.0;
  bool weaveable = false;
};

/// Entropy-vs-ratio table. Rows with h in {0, inf} cannot be placed on a log
/// axis and go to `gutter` (h = 0 first, then inf; by rule within each).
struct EntropyRatioTable {
  std::vector<EntropyRatioRow> plottable;  // sorted by h, then rule
  std::vector<EntropyRatioRow> gutter;
  std::size_t size() const { return plottable.size() + gutter.size(); }
};

EntropyRatioTable entropy_ratio_table(const std::vector<RuleMetrics>& sweep);

}  // namespace loomata
