#pragma once

// Serialization: pattern documents (JSON), WIF drafts, PBM/PNG renders and
// rule-space tables (CSV/JSON).

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "loomata/automaton.hpp"
#include "loomata/draft.hpp"
#include "loomata/metrics.hpp"
#include "loomata/raster.hpp"

namespace loomata {

using Json = nlohmann::ordered_json;

inline constexpr int kPatternFormatVersion = 1;

struct Colorway {
  std::vector<Rgb> palette;
  std::vector<int> warp_colors;
  std::vector<int> weft_colors;
  friend bool operator==(const Colorway&, const Colorway&) = default;
};

struct PatternDocument {
  int format_version = kPatternFormatVersion;
  std::optional<RuleSpec> rule;
  std::optional<EvolutionConfig> evolution;
  PatternGrid grid;
  std::optional<RuleMetrics> metrics;
  std::optional<Colorway> colorway;

  friend bool operator==(const PatternDocument&, const PatternDocument&) = default;
};

/// Document for an evolved pattern (rule + config + grid).
PatternDocument make_document(const RuleSpec& rule, const EvolutionConfig& config,
                              const PatternGrid& grid);

/// Drawdown of a document: its colorway when present, else defaults. Grids
/// with k > 2 are color-separated first.
Drawdown document_drawdown(const PatternDocument& doc);

// JSON building blocks shared with the HTTP service. Decoders throw
// ValidationError with a JSON-pointer-like path.
Json to_json(const EvolutionConfig& config);
EvolutionConfig evolution_from_json(const Json& j, const std::string& path = "/evolution");
Json to_json(const RuleSpec& rule);
RuleSpec rule_from_json(const Json& j, const std::string& path = "/rule");
Json to_json(const RuleMetrics& metrics);
RuleMetrics metrics_from_json(const Json& j, const std::string& path = "/metrics");
Json to_json(const Colorway& colorway);
Colorway colorway_from_json(const Json& j, const std::string& path = "/colorway");
Json to_json(const FloatReport& report);
Json to_json(const RasterConfig& config);
RasterConfig raster_config_from_json(const Json& j, const std::string& path = "/config");
Json ratio_to_json(const Ratio& ratio);

Json to_json(const PatternDocument& doc);
PatternDocument document_from_json(const Json& j);

/// Canonical bytes: fixed field order, two-space indentation, trailing LF.
std::string encode_pattern_json(const PatternDocument& doc);
/// Throws ParseError for malformed JSON, UnsupportedError for an unknown
/// format_version and ValidationError (with path) for schema violations.
PatternDocument decode_pattern_json(std::string_view bytes);

/// WIF 1.1 text using a liftplan (rising shed), LF line endings.
std::string export_wif(const LoomDraft& draft, int capacity = kDefaultLoomCapacity);
LoomDraft parse_wif(std::string_view text);

/// Plain PBM (P1); 1 = warp-up = black.
std::string export_pbm(const PatternGrid& grid);
StateMatrix parse_pbm(std::string_view text);

std::vector<std::uint8_t> export_png(const Image& image);

/// Rule-space table columns: rule,h,H,H_block,max_warp_float,max_weft_float,weaveable
std::string sweep_csv(const std::vector<RuleMetrics>& sweep);
Json sweep_json(const std::vector<RuleMetrics>& sweep);
/// Parses sweep_csv output back into JSON rows shaped like sweep_json.
Json parse_sweep_csv(std::string_view csv);

/// Exact decimal representation of a double (%.17g).
std::string format_real(double value);

}  // namespace loomata
