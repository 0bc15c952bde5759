#pragma once

// Generalized weaving automaton: a one-dimensional cellular automaton whose
// update consults the last `window` rows instead of only the current one.
// Rows are weft picks (time), columns are warp ends (space).

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Core>

namespace loomata {

using State = std::uint8_t;
using StateMatrix = Eigen::Matrix<State, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using StateRow = Eigen::Matrix<State, 1, Eigen::Dynamic>;

/// Cell-for-cell equality that tolerates differing shapes.
inline bool same_cells(const StateMatrix& a, const StateMatrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}

/// Largest lookup table a RuleSpec may hold.
inline constexpr std::size_t kMaxTableSize = std::size_t{1} << 24;

/// Update rule with `k` states, neighborhood radius `radius` and temporal
/// window `window`.
///
/// A neighborhood word lists, for each of the `window` history rows from the
/// oldest to the newest, the 2*radius+1 cells centered on the updated cell
/// from left to right. The word is read as a base-k number with the first
/// digit most significant; `table()[word]` is the next state. For the
/// elementary case (k=2, radius=1, window=1) the word of (l,c,r) is 4l+2c+r
/// and the table is the binary expansion of the Wolfram number.
class RuleSpec {
 public:
  int k() const noexcept { return k_; }
  int radius() const noexcept { return radius_; }
  int window() const noexcept { return window_; }
  int word_length() const noexcept { return (2 * radius_ + 1) * window_; }
  std::span<const State> table() const noexcept { return table_; }
  const std::string& id() const noexcept { return id_; }

  bool is_elementary() const noexcept { return k_ == 2 && radius_ == 1 && window_ == 1; }
  /// Wolfram number; only meaningful for elementary rules.
  std::optional<int> wolfram_number() const;

  State apply(std::size_t word) const { return table_[word]; }

  friend bool operator==(const RuleSpec&, const RuleSpec&) = default;

 private:
  friend RuleSpec rule_from_table(int, int, int, std::vector<State>);
  RuleSpec() = default;

  int k_ = 2;
  int radius_ = 1;
  int window_ = 1;
  std::vector<State> table_;
  std::string id_;
};

/// Number of table entries k^((2r+1)w). Throws DomainError when the table
/// would exceed kMaxTableSize.
std::size_t table_size(int k, int radius, int window);

RuleSpec rule_from_wolfram_number(int n);

/// Validates and canonicalizes a lookup table. Throws ValidationError naming
/// the offending index ("table[i]") or the size mismatch.
RuleSpec rule_from_table(int k, int radius, int window, std::vector<State> table);

/// Inverse of RuleSpec::id(). Elementary ids are decimal Wolfram numbers;
/// every other id is the hex encoding produced by encode_table_hex.
RuleSpec rule_from_id(int k, int radius, int window, std::string_view id);

/// Table outputs packed big-endian, ceil(log2 k) bits each, words in
/// descending order, left-padded with zero bits to whole hex digits.
std::string encode_table_hex(int k, std::span<const State> table);
std::vector<State> decode_table_hex(int k, std::size_t entries, std::string_view hex);

/// Rule acting on horizontally mirrored configurations.
RuleSpec mirror_rule(const RuleSpec& rule);
/// Rule acting on state-complemented configurations (s -> k-1-s).
RuleSpec complement_rule(const RuleSpec& rule);

struct Boundary {
  enum class Kind { Wrap, Fixed };
  Kind kind = Kind::Wrap;
  State state = 0;

  static Boundary wrap() { return {}; }
  static Boundary fixed(State s) { return {Kind::Fixed, s}; }

  friend bool operator==(const Boundary&, const Boundary&) = default;
};

/// "wrap", "fixed0", "fixed1", ...
std::string to_string(const Boundary& b);
Boundary parse_boundary(std::string_view text);

struct RandomInit {
  std::uint64_t seed = 1;
  double density = 0.5;
  friend bool operator==(const RandomInit&, const RandomInit&) = default;
};

struct CenterInit {
  State state = 1;
  friend bool operator==(const CenterInit&, const CenterInit&) = default;
};

struct ExplicitInit {
  StateMatrix rows;
  friend bool operator==(const ExplicitInit& a, const ExplicitInit& b) {
    return same_cells(a.rows, b.rows);
  }
};

using InitSpec = std::variant<RandomInit, CenterInit, ExplicitInit>;

struct EvolutionConfig {
  int width = 101;
  int steps = 50;
  Boundary boundary = Boundary::wrap();
  InitSpec init = RandomInit{};

  friend bool operator==(const EvolutionConfig&, const EvolutionConfig&) = default;
};

/// Throws DomainError/ValidationError when `config` cannot drive `rule`.
void validate(const EvolutionConfig& config, const RuleSpec& rule);

/// Builds the `rule.window()` initial rows described by config.init.
StateMatrix initial_rows(const EvolutionConfig& config, const RuleSpec& rule);

struct GridMeta {
  std::string rule_id;
  std::optional<std::uint64_t> seed;
  Boundary boundary;
  friend bool operator==(const GridMeta&, const GridMeta&) = default;
};

/// Rows x width lattice of states. The first `init_rows` rows are the initial
/// condition; the rest were generated.
class PatternGrid {
 public:
  PatternGrid(StateMatrix cells, int k, int init_rows = 0, GridMeta meta = {});

  const StateMatrix& cells() const noexcept { return cells_; }
  int k() const noexcept { return k_; }
  int width() const noexcept { return static_cast<int>(cells_.cols()); }
  int rows() const noexcept { return static_cast<int>(cells_.rows()); }
  int init_rows() const noexcept { return init_rows_; }
  int generated_rows() const noexcept { return rows() - init_rows_; }
  const GridMeta& meta() const noexcept { return meta_; }

  State operator()(int row, int col) const { return cells_(row, col); }

  friend bool operator==(const PatternGrid& a, const PatternGrid& b) {
    return a.k_ == b.k_ && a.init_rows_ == b.init_rows_ && a.meta_ == b.meta_ &&
           same_cells(a.cells_, b.cells_);
  }

 private:
  StateMatrix cells_;
  int k_;
  int init_rows_;
  GridMeta meta_;
};

/// Next row from the last `rule.window()` rows of `history` (oldest first).
/// Throws DomainError when history.rows() != rule.window().
StateRow step(const Eigen::Ref<const StateMatrix>& history, const RuleSpec& rule,
              Boundary boundary);

PatternGrid evolve(const RuleSpec& rule, const EvolutionConfig& config);

}  // namespace loomata
