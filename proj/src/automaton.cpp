#include "loomata/automaton.hpp"

#include <algorithm>
#include <charconv>
#include <random>

#include "loomata/error.hpp"

namespace loomata {

namespace {

int bits_per_state(int k) {
  int bits = 0;
  while ((1 << bits) < k) ++bits;
  return bits;
}

// Digits of `word` (most significant first) for a word of `length` digits.
std::vector<int> word_digits(std::size_t word, int k, int length) {
  std::vector<int> digits(length);
  for (int i = length - 1; i >= 0; --i) {
    digits[i] = static_cast<int>(word % k);
    word /= k;
  }
  return digits;
}

std::size_t digits_word(const std::vector<int>& digits, int k) {
  std::size_t word = 0;
  for (int d : digits) word = word * k + d;
  return word;
}

std::uint64_t hex_digit(char c, std::size_t pos) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  throw ValidationError("id[" + std::to_string(pos) + "]", "not a hex digit");
}

}  // namespace

std::optional<int> RuleSpec::wolfram_number() const {
  if (!is_elementary()) return std::nullopt;
  int n = 0;
  for (int word = 7; word >= 0; --word) n = (n << 1) | table_[word];
  return n;
}

std::size_t table_size(int k, int radius, int window) {
  if (k < 2) throw DomainError("state count k must be >= 2");
  if (k > 256) throw DomainError("state count k must be <= 256");
  if (radius < 0) throw DomainError("radius must be >= 0");
  if (window < 1) throw DomainError("window must be >= 1");
  const int length = (2 * radius + 1) * window;
  std::size_t size = 1;
  for (int i = 0; i < length; ++i) {
    size *= static_cast<std::size_t>(k);
    if (size > kMaxTableSize)
      throw DomainError("rule table k^((2r+1)w) exceeds " + std::to_string(kMaxTableSize) +
                        " entries");
  }
  return size;
}

RuleSpec rule_from_wolfram_number(int n) {
  if (n < 0 || n > 255)
    throw DomainError("Wolfram rule number must be in 0..255, got " + std::to_string(n));
  std::vector<State> table(8);
  for (int word = 0; word < 8; ++word) table[word] = static_cast<State>((n >> word) & 1);
  return rule_from_table(2, 1, 1, std::move(table));
}

RuleSpec rule_from_table(int k, int radius, int window, std::vector<State> table) {
  const std::size_t expected = table_size(k, radius, window);
  if (table.size() != expected)
    throw ValidationError("table", "expected " + std::to_string(expected) +
                                       " entries, got " + std::to_string(table.size()));
  for (std::size_t i = 0; i < table.size(); ++i)
    if (table[i] >= k)
      throw ValidationError("table[" + std::to_string(i) + "]",
                            "output " + std::to_string(table[i]) + " is not < k=" +
                                std::to_string(k));

  RuleSpec spec;
  spec.k_ = k;
  spec.radius_ = radius;
  spec.window_ = window;
  spec.table_ = std::move(table);
  if (auto n = spec.wolfram_number())
    spec.id_ = std::to_string(*n);
  else
    spec.id_ = encode_table_hex(k, spec.table_);
  return spec;
}

std::string encode_table_hex(int k, std::span<const State> table) {
  const int bits = bits_per_state(k);
  const std::size_t total_bits = table.size() * bits;
  const std::size_t digits = (total_bits + 3) / 4;
  const std::size_t pad = digits * 4 - total_bits;

  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(digits);
  int acc = 0;
  int filled = static_cast<int>(pad);
  for (std::size_t i = table.size(); i-- > 0;) {
    for (int b = bits - 1; b >= 0; --b) {
      acc = (acc << 1) | ((table[i] >> b) & 1);
      if (++filled == 4) {
        hex.push_back(kHex[acc]);
        acc = 0;
        filled = 0;
      }
    }
  }
  return hex;
}

std::vector<State> decode_table_hex(int k, std::size_t entries, std::string_view hex) {
  const int bits = bits_per_state(k);
  const std::size_t total_bits = entries * bits;
  const std::size_t digits = (total_bits + 3) / 4;
  if (hex.size() != digits)
    throw ValidationError("id", "expected " + std::to_string(digits) + " hex digits, got " +
                                    std::to_string(hex.size()));
  const std::size_t pad = digits * 4 - total_bits;

  std::vector<bool> stream;
  stream.reserve(digits * 4);
  for (std::size_t pos = 0; pos < hex.size(); ++pos) {
    const auto v = hex_digit(hex[pos], pos);
    for (int b = 3; b >= 0; --b) stream.push_back((v >> b) & 1);
  }
  for (std::size_t i = 0; i < pad; ++i)
    if (stream[i]) throw ValidationError("id[0]", "nonzero padding bits");

  std::vector<State> table(entries);
  std::size_t cursor = pad;
  for (std::size_t i = entries; i-- > 0;) {
    int v = 0;
    for (int b = 0; b < bits; ++b) v = (v << 1) | stream[cursor++];
    if (v >= k)
      throw ValidationError("table[" + std::to_string(i) + "]",
                            "output " + std::to_string(v) + " is not < k=" + std::to_string(k));
    table[i] = static_cast<State>(v);
  }
  return table;
}

RuleSpec rule_from_id(int k, int radius, int window, std::string_view id) {
  const std::size_t size = table_size(k, radius, window);
  if (k == 2 && radius == 1 && window == 1) {
    int n = -1;
    auto [ptr, ec] = std::from_chars(id.data(), id.data() + id.size(), n);
    if (ec != std::errc{} || ptr != id.data() + id.size())
      throw ValidationError("id", "elementary rule id must be a decimal number");
    return rule_from_wolfram_number(n);
  }
  return rule_from_table(k, radius, window, decode_table_hex(k, size, id));
}

RuleSpec mirror_rule(const RuleSpec& rule) {
  const int k = rule.k();
  const int span = 2 * rule.radius() + 1;
  const int length = rule.word_length();
  std::vector<State> table(rule.table().size());
  for (std::size_t word = 0; word < table.size(); ++word) {
    auto digits = word_digits(word, k, length);
    for (int row = 0; row < rule.window(); ++row)
      std::reverse(digits.begin() + row * span, digits.begin() + (row + 1) * span);
    table[word] = rule.apply(digits_word(digits, k));
  }
  return rule_from_table(k, rule.radius(), rule.window(), std::move(table));
}

RuleSpec complement_rule(const RuleSpec& rule) {
  const int k = rule.k();
  const int length = rule.word_length();
  std::vector<State> table(rule.table().size());
  for (std::size_t word = 0; word < table.size(); ++word) {
    auto digits = word_digits(word, k, length);
    for (int& d : digits) d = k - 1 - d;
    table[word] = static_cast<State>(k - 1 - rule.apply(digits_word(digits, k)));
  }
  return rule_from_table(k, rule.radius(), rule.window(), std::move(table));
}

std::string to_string(const Boundary& b) {
  if (b.kind == Boundary::Kind::Wrap) return "wrap";
  return "fixed" + std::to_string(b.state);
}

Boundary parse_boundary(std::string_view text) {
  if (text == "wrap") return Boundary::wrap();
  if (text.starts_with("fixed")) {
    auto digits = text.substr(5);
    int s = 0;
    if (digits.empty()) return Boundary::fixed(0);
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), s);
    if (ec == std::errc{} && ptr == digits.data() + digits.size() && s >= 0 && s < 256)
      return Boundary::fixed(static_cast<State>(s));
  }
  throw ValidationError("boundary", "expected 'wrap' or 'fixedN', got '" + std::string(text) +
                                        "'");
}

void validate(const EvolutionConfig& config, const RuleSpec& rule) {
  if (config.width < 1) throw DomainError("width must be >= 1");
  if (config.steps < 0) throw DomainError("steps must be >= 0");
  if (config.boundary.kind == Boundary::Kind::Fixed && config.boundary.state >= rule.k())
    throw ValidationError("boundary", "fixed state must be < k");
  std::visit(
      [&](const auto& init) {
        using T = std::decay_t<decltype(init)>;
        if constexpr (std::is_same_v<T, RandomInit>) {
          if (!(init.density >= 0.0 && init.density <= 1.0))
            throw ValidationError("init.density", "density must be in [0,1]");
        } else if constexpr (std::is_same_v<T, CenterInit>) {
          if (init.state >= rule.k()) throw ValidationError("init.state", "state must be < k");
        } else {
          if (init.rows.cols() != config.width)
            throw ValidationError("init.rows", "row width " + std::to_string(init.rows.cols()) +
                                                   " does not match width " +
                                                   std::to_string(config.width));
          if (init.rows.rows() < rule.window())
            throw ValidationError("init.rows", "need at least " +
                                                   std::to_string(rule.window()) + " rows");
          for (Eigen::Index r = 0; r < init.rows.rows(); ++r)
            for (Eigen::Index c = 0; c < init.rows.cols(); ++c)
              if (init.rows(r, c) >= rule.k())
                throw ValidationError("init.rows[" + std::to_string(r) + "][" +
                                          std::to_string(c) + "]",
                                      "state must be < k");
        }
      },
      config.init);
}

StateMatrix initial_rows(const EvolutionConfig& config, const RuleSpec& rule) {
  validate(config, rule);
  const int w = rule.window();
  const int width = config.width;
  return std::visit(
      [&](const auto& init) -> StateMatrix {
        using T = std::decay_t<decltype(init)>;
        if constexpr (std::is_same_v<T, RandomInit>) {
          std::mt19937_64 gen(init.seed);
          StateMatrix rows(w, width);
          for (int r = 0; r < w; ++r)
            for (int c = 0; c < width; ++c) {
              const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
              State s = 0;
              if (u < init.density)
                s = rule.k() == 2 ? 1 : static_cast<State>(1 + gen() % (rule.k() - 1));
              rows(r, c) = s;
            }
          return rows;
        } else if constexpr (std::is_same_v<T, CenterInit>) {
          StateMatrix rows = StateMatrix::Zero(w, width);
          rows(w - 1, width / 2) = init.state;
          return rows;
        } else {
          return init.rows;
        }
      },
      config.init);
}

PatternGrid::PatternGrid(StateMatrix cells, int k, int init_rows, GridMeta meta)
    : cells_(std::move(cells)), k_(k), init_rows_(init_rows), meta_(std::move(meta)) {
  if (k_ < 2 || k_ > 256) throw DomainError("state count k must be in 2..256");
  if (cells_.cols() < 1) throw DomainError("grid width must be >= 1");
  if (init_rows_ < 0 || init_rows_ > cells_.rows())
    throw DomainError("init_rows out of range");
  for (Eigen::Index r = 0; r < cells_.rows(); ++r)
    for (Eigen::Index c = 0; c < cells_.cols(); ++c)
      if (cells_(r, c) >= k_)
        throw ValidationError("cells[" + std::to_string(r) + "][" + std::to_string(c) + "]",
                              "state must be < k");
}

namespace {

// Writes the next row into `out` from the `window` rows ending at `newest`.
void step_into(const StateMatrix& grid, Eigen::Index newest, const RuleSpec& rule,
               Boundary boundary, StateMatrix& out, Eigen::Index out_row) {
  const int k = rule.k();
  const int radius = rule.radius();
  const int window = rule.window();
  const Eigen::Index width = grid.cols();
  const auto table = rule.table();
  const bool wrap = boundary.kind == Boundary::Kind::Wrap;

  for (Eigen::Index i = 0; i < width; ++i) {
    std::size_t word = 0;
    for (int h = 0; h < window; ++h) {
      const Eigen::Index row = newest - (window - 1) + h;
      for (int d = -radius; d <= radius; ++d) {
        Eigen::Index col = i + d;
        State s;
        if (col >= 0 && col < width) {
          s = grid(row, col);
        } else if (wrap) {
          col %= width;
          if (col < 0) col += width;
          s = grid(row, col);
        } else {
          s = boundary.state;
        }
        word = word * k + s;
      }
    }
    out(out_row, i) = table[word];
  }
}

}  // namespace

StateRow step(const Eigen::Ref<const StateMatrix>& history, const RuleSpec& rule,
              Boundary boundary) {
  if (history.rows() != rule.window())
    throw DomainError("step needs exactly " + std::to_string(rule.window()) +
                      " history rows, got " + std::to_string(history.rows()));
  if (history.cols() < 1) throw DomainError("history rows must have width >= 1");
  const StateMatrix copy = history;
  StateMatrix out(1, copy.cols());
  step_into(copy, copy.rows() - 1, rule, boundary, out, 0);
  return out;
}

PatternGrid evolve(const RuleSpec& rule, const EvolutionConfig& config) {
  const StateMatrix init = initial_rows(config, rule);
  const Eigen::Index init_count = init.rows();
  StateMatrix cells(init_count + config.steps, config.width);
  cells.topRows(init_count) = init;
  for (Eigen::Index t = init_count; t < cells.rows(); ++t)
    step_into(cells, t - 1, rule, config.boundary, cells, t);

  GridMeta meta{rule.id(), std::nullopt, config.boundary};
  if (const auto* random = std::get_if<RandomInit>(&config.init)) meta.seed = random->seed;
  return PatternGrid(std::move(cells), rule.k(), static_cast<int>(init_count), std::move(meta));
}

}  // namespace loomata
