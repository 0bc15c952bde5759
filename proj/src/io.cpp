#include "loomata/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "loomata/error.hpp"
#include "loomata/png.hpp"

namespace loomata {

namespace {

// ---------------------------------------------------------------------------
// Schema helpers

void check_object(const Json& j, const std::string& path,
                  std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw ValidationError(path, "expected an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ValidationError(path + "/" + key, "unknown field");
  }
}

const Json& require(const Json& j, const std::string& path, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ValidationError(path + "/" + key, "missing required field");
  return *it;
}

long long get_int(const Json& j, const std::string& path, long long lo, long long hi) {
  if (!j.is_number_integer()) throw ValidationError(path, "expected an integer");
  long long v = 0;
  if (j.is_number_unsigned()) {
    const auto u = j.get<std::uint64_t>();
    if (u > static_cast<std::uint64_t>(hi)) throw ValidationError(path, "integer out of range");
    v = static_cast<long long>(u);
  } else {
    v = j.get<long long>();
  }
  if (v < lo || v > hi) throw ValidationError(path, "integer out of range");
  return v;
}

int get_int(const Json& j, const std::string& path, int lo = 0, int hi = 1 << 30) {
  return static_cast<int>(get_int(j, path, static_cast<long long>(lo), static_cast<long long>(hi)));
}

std::uint64_t get_u64(const Json& j, const std::string& path) {
  if (!j.is_number_unsigned()) throw ValidationError(path, "expected a non-negative integer");
  return j.get<std::uint64_t>();
}

double get_real(const Json& j, const std::string& path) {
  if (!j.is_number()) throw ValidationError(path, "expected a number");
  return j.get<double>();
}

std::string get_string(const Json& j, const std::string& path) {
  if (!j.is_string()) throw ValidationError(path, "expected a string");
  return j.get<std::string>();
}

bool get_bool(const Json& j, const std::string& path) {
  if (!j.is_boolean()) throw ValidationError(path, "expected a boolean");
  return j.get<bool>();
}

const Json& get_array(const Json& j, const std::string& path) {
  if (!j.is_array()) throw ValidationError(path, "expected an array");
  return j;
}

std::vector<int> get_int_array(const Json& j, const std::string& path, int lo, int hi) {
  get_array(j, path);
  std::vector<int> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(get_int(j[i], path + "/" + std::to_string(i), lo, hi));
  return out;
}

// Rebases ValidationError paths thrown by library validators.
template <typename F>
auto with_path(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const ValidationError& e) {
    throw ValidationError(e.path().empty() ? path : path + "/" + e.path(), e.message());
  } catch (const DomainError& e) {
    throw ValidationError(path, e.what());
  }
}

Json rows_to_json(const StateMatrix& rows) {
  Json out = Json::array();
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < rows.cols(); ++c) row.push_back(int(rows(r, c)));
    out.push_back(std::move(row));
  }
  return out;
}

StateMatrix rows_from_json(const Json& j, const std::string& path) {
  get_array(j, path);
  if (j.empty()) throw ValidationError(path, "needs at least one row");
  const std::size_t width = get_array(j[0], path + "/0").size();
  if (width == 0) throw ValidationError(path + "/0", "rows must be nonempty");
  StateMatrix rows(j.size(), width);
  for (std::size_t r = 0; r < j.size(); ++r) {
    const auto row = get_int_array(j[r], path + "/" + std::to_string(r), 0, 255);
    if (row.size() != width) throw ValidationError(path + "/" + std::to_string(r), "ragged rows");
    for (std::size_t c = 0; c < width; ++c) rows(r, c) = static_cast<State>(row[c]);
  }
  return rows;
}

Json grid_to_json(const PatternGrid& grid) {
  Json j;
  j["width"] = grid.width();
  j["rows"] = grid.rows();
  j["k"] = grid.k();
  j["init_rows"] = grid.init_rows();
  j["rule_id"] = grid.meta().rule_id;
  if (grid.meta().seed) j["seed"] = *grid.meta().seed;
  j["boundary"] = to_string(grid.meta().boundary);
  Json runs = Json::array();
  const auto& cells = grid.cells();
  for (Eigen::Index r = 0; r < cells.rows(); ++r) {
    Json row = Json::array();
    Eigen::Index c = 0;
    while (c < cells.cols()) {
      const State s = cells(r, c);
      Eigen::Index n = 1;
      while (c + n < cells.cols() && cells(r, c + n) == s) ++n;
      row.push_back(Json::array({n, int(s)}));
      c += n;
    }
    runs.push_back(std::move(row));
  }
  j["runs"] = std::move(runs);
  return j;
}

PatternGrid grid_from_json(const Json& j, const std::string& path) {
  check_object(j, path, {"width", "rows", "k", "init_rows", "rule_id", "seed", "boundary", "runs"});
  const int width = get_int(require(j, path, "width"), path + "/width", 1);
  const int rows = get_int(require(j, path, "rows"), path + "/rows", 0);
  const int k = get_int(require(j, path, "k"), path + "/k", 2, 256);
  const int init_rows = get_int(require(j, path, "init_rows"), path + "/init_rows", 0, rows);
  GridMeta meta;
  meta.rule_id = get_string(require(j, path, "rule_id"), path + "/rule_id");
  if (j.contains("seed")) meta.seed = get_u64(j["seed"], path + "/seed");
  meta.boundary = with_path(path + "/boundary", [&] {
    return parse_boundary(get_string(require(j, path, "boundary"), path + "/boundary"));
  });

  const Json& runs = get_array(require(j, path, "runs"), path + "/runs");
  if (static_cast<int>(runs.size()) != rows)
    throw ValidationError(path + "/runs", "expected " + std::to_string(rows) + " rows");
  StateMatrix cells(rows, width);
  for (int r = 0; r < rows; ++r) {
    const std::string row_path = path + "/runs/" + std::to_string(r);
    const Json& row = get_array(runs[r], row_path);
    int c = 0;
    for (std::size_t i = 0; i < row.size(); ++i) {
      const std::string run_path = row_path + "/" + std::to_string(i);
      if (!row[i].is_array() || row[i].size() != 2)
        throw ValidationError(run_path, "expected [count, state]");
      const int n = get_int(row[i][0], run_path + "/0", 1, width);
      const int s = get_int(row[i][1], run_path + "/1", 0, k - 1);
      if (c + n > width) throw ValidationError(run_path, "runs exceed grid width");
      cells.row(r).segment(c, n).setConstant(static_cast<State>(s));
      c += n;
    }
    if (c != width) throw ValidationError(row_path, "runs cover " + std::to_string(c) +
                                                        " cells, width is " +
                                                        std::to_string(width));
  }
  return PatternGrid(std::move(cells), k, init_rows, std::move(meta));
}

// ---------------------------------------------------------------------------
// Text helpers

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? s.npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string ratio_text(const Ratio& h) { return h.is_infinite() ? "inf" : format_real(h.value()); }

}  // namespace

std::string format_real(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

Json ratio_to_json(const Ratio& ratio) {
  if (ratio.is_infinite()) return "inf";
  return ratio.value();
}

// ---------------------------------------------------------------------------
// Pattern documents

Json to_json(const EvolutionConfig& config) {
  Json j;
  j["width"] = config.width;
  j["steps"] = config.steps;
  j["boundary"] = to_string(config.boundary);
  Json init;
  std::visit(
      [&](const auto& spec) {
        using T = std::decay_t<decltype(spec)>;
        if constexpr (std::is_same_v<T, RandomInit>) {
          init["kind"] = "random";
          init["seed"] = spec.seed;
          init["density"] = spec.density;
        } else if constexpr (std::is_same_v<T, CenterInit>) {
          init["kind"] = "center";
          init["state"] = int(spec.state);
        } else {
          init["kind"] = "explicit";
          init["rows"] = rows_to_json(spec.rows);
        }
      },
      config.init);
  j["init"] = std::move(init);
  return j;
}

EvolutionConfig evolution_from_json(const Json& j, const std::string& path) {
  check_object(j, path, {"width", "steps", "boundary", "init"});
  EvolutionConfig config;
  if (j.contains("width")) config.width = get_int(j["width"], path + "/width", 1, 1 << 20);
  if (j.contains("steps")) config.steps = get_int(j["steps"], path + "/steps", 0, 1 << 20);
  if (j.contains("boundary"))
    config.boundary = with_path(path + "/boundary", [&] {
      return parse_boundary(get_string(j["boundary"], path + "/boundary"));
    });
  if (j.contains("init")) {
    const std::string ipath = path + "/init";
    const Json& init = j["init"];
    if (!init.is_object()) throw ValidationError(ipath, "expected an object");
    const std::string kind = get_string(require(init, ipath, "kind"), ipath + "/kind");
    if (kind == "random") {
      check_object(init, ipath, {"kind", "seed", "density"});
      RandomInit r;
      if (init.contains("seed")) r.seed = get_u64(init["seed"], ipath + "/seed");
      if (init.contains("density")) r.density = get_real(init["density"], ipath + "/density");
      if (!(r.density >= 0.0 && r.density <= 1.0))
        throw ValidationError(ipath + "/density", "must be in [0,1]");
      config.init = r;
    } else if (kind == "center") {
      check_object(init, ipath, {"kind", "state"});
      CenterInit c;
      if (init.contains("state"))
        c.state = static_cast<State>(get_int(init["state"], ipath + "/state", 0, 255));
      config.init = c;
    } else if (kind == "explicit") {
      check_object(init, ipath, {"kind", "rows"});
      config.init = ExplicitInit{rows_from_json(require(init, ipath, "rows"), ipath + "/rows")};
    } else {
      throw ValidationError(ipath + "/kind", "expected random, center or explicit");
    }
  }
  return config;
}

Json to_json(const RuleSpec& rule) {
  Json j;
  j["id"] = rule.id();
  j["k"] = rule.k();
  j["radius"] = rule.radius();
  j["window"] = rule.window();
  if (!rule.is_elementary()) {
    Json table = Json::array();
    for (State s : rule.table()) table.push_back(int(s));
    j["table"] = std::move(table);
  }
  return j;
}

RuleSpec rule_from_json(const Json& j, const std::string& path) {
  check_object(j, path, {"id", "k", "radius", "window", "table"});
  const int k = j.contains("k") ? get_int(j["k"], path + "/k", 2, 256) : 2;
  const int radius = j.contains("radius") ? get_int(j["radius"], path + "/radius", 0, 64) : 1;
  const int window = j.contains("window") ? get_int(j["window"], path + "/window", 1, 64) : 1;
  std::optional<RuleSpec> rule;
  if (j.contains("table")) {
    const auto raw = get_int_array(j["table"], path + "/table", 0, 255);
    std::vector<State> table(raw.begin(), raw.end());
    rule = with_path(path, [&] { return rule_from_table(k, radius, window, std::move(table)); });
    if (j.contains("id") && get_string(j["id"], path + "/id") != rule->id())
      throw ValidationError(path + "/id", "id does not match table");
  } else {
    const Json& id = require(j, path, "id");
    const std::string text = id.is_number_integer() ? std::to_string(get_int(id, path + "/id"))
                                                    : get_string(id, path + "/id");
    rule = with_path(path, [&] { return rule_from_id(k, radius, window, text); });
  }
  return *rule;
}

Json to_json(const RuleMetrics& m) {
  Json j;
  j["rule_id"] = m.rule_id;
  j["frequencies"] = m.frequencies;
  j["H"] = m.entropy;
  j["h"] = ratio_to_json(m.ratio);
  j["H_block"] = m.block_entropy;
  j["block_length"] = m.block_length;
  j["max_warp_float"] = m.max_warp_float;
  j["max_weft_float"] = m.max_weft_float;
  j["weaveable"] = m.weaveable;
  Json reasons = Json::array();
  for (auto r : m.reasons) reasons.push_back(to_string(r));
  j["reasons"] = std::move(reasons);
  return j;
}

RuleMetrics metrics_from_json(const Json& j, const std::string& path) {
  check_object(j, path,
               {"rule_id", "frequencies", "H", "h", "H_block", "block_length", "max_warp_float",
                "max_weft_float", "weaveable", "reasons"});
  RuleMetrics m;
  m.rule_id = get_string(require(j, path, "rule_id"), path + "/rule_id");
  const Json& freqs = get_array(require(j, path, "frequencies"), path + "/frequencies");
  for (std::size_t i = 0; i < freqs.size(); ++i)
    m.frequencies.push_back(get_real(freqs[i], path + "/frequencies/" + std::to_string(i)));
  m.entropy = get_real(require(j, path, "H"), path + "/H");
  const Json& h = require(j, path, "h");
  if (h.is_string()) {
    if (h.get<std::string>() != "inf") throw ValidationError(path + "/h", "expected number or \"inf\"");
    m.ratio = Ratio::infinite();
  } else {
    m.ratio = Ratio::finite(get_real(h, path + "/h"));
  }
  m.block_entropy = get_real(require(j, path, "H_block"), path + "/H_block");
  m.block_length = get_int(require(j, path, "block_length"), path + "/block_length", 1);
  m.max_warp_float = get_int(require(j, path, "max_warp_float"), path + "/max_warp_float");
  m.max_weft_float = get_int(require(j, path, "max_weft_float"), path + "/max_weft_float");
  m.weaveable = get_bool(require(j, path, "weaveable"), path + "/weaveable");
  const Json& reasons = get_array(require(j, path, "reasons"), path + "/reasons");
  for (std::size_t i = 0; i < reasons.size(); ++i) {
    const std::string rpath = path + "/reasons/" + std::to_string(i);
    m.reasons.push_back(with_path(rpath, [&] { return parse_violation(get_string(reasons[i], rpath)); }));
  }
  return m;
}

Json to_json(const Colorway& colorway) {
  Json j;
  Json palette = Json::array();
  for (const auto& c : colorway.palette) palette.push_back(Json::array({c.r, c.g, c.b}));
  j["palette"] = std::move(palette);
  j["warp_colors"] = colorway.warp_colors;
  j["weft_colors"] = colorway.weft_colors;
  return j;
}

Colorway colorway_from_json(const Json& j, const std::string& path) {
  check_object(j, path, {"palette", "warp_colors", "weft_colors"});
  Colorway cw;
  if (j.contains("palette")) {
    const Json& palette = get_array(j["palette"], path + "/palette");
    for (std::size_t i = 0; i < palette.size(); ++i) {
      const std::string ppath = path + "/palette/" + std::to_string(i);
      const auto rgb = get_int_array(palette[i], ppath, 0, 255);
      if (rgb.size() != 3) throw ValidationError(ppath, "expected [r, g, b]");
      cw.palette.push_back({static_cast<std::uint8_t>(rgb[0]), static_cast<std::uint8_t>(rgb[1]),
                            static_cast<std::uint8_t>(rgb[2])});
    }
  }
  if (j.contains("warp_colors"))
    cw.warp_colors = get_int_array(j["warp_colors"], path + "/warp_colors", 0, 1 << 16);
  if (j.contains("weft_colors"))
    cw.weft_colors = get_int_array(j["weft_colors"], path + "/weft_colors", 0, 1 << 16);
  return cw;
}

Json to_json(const FloatReport& report) {
  const auto histogram = [](const std::map<int, int>& h) {
    Json out = Json::object();
    for (const auto& [len, count] : h) out[std::to_string(len)] = count;
    return out;
  };
  Json j;
  j["max_warp_float"] = report.max_warp_float;
  j["max_weft_float"] = report.max_weft_float;
  j["warp_histogram"] = histogram(report.warp_histogram);
  j["weft_histogram"] = histogram(report.weft_histogram);
  return j;
}

Json to_json(const RasterConfig& config) {
  Json j;
  j["width"] = config.target_width;
  j["height"] = config.target_height;
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, FixedThreshold>) {
          j["method"] = "threshold";
          j["threshold"] = m.threshold;
        } else if constexpr (std::is_same_v<T, OtsuThreshold>) {
          j["method"] = "otsu";
        } else if constexpr (std::is_same_v<T, OrderedDither>) {
          j["method"] = "ordered";
          j["dither_size"] = m.matrix_size;
        } else {
          j["method"] = "diffusion";
        }
      },
      config.method);
  j["polarity"] = config.polarity == Polarity::DarkIsWarpUp ? "dark-warp" : "light-warp";
  j["levels"] = config.palette_size;
  return j;
}

RasterConfig raster_config_from_json(const Json& j, const std::string& path) {
  check_object(j, path, {"width", "height", "method", "threshold", "dither_size", "polarity", "levels"});
  RasterConfig config;
  if (j.contains("width")) config.target_width = get_int(j["width"], path + "/width", 1, 4096);
  if (j.contains("height")) config.target_height = get_int(j["height"], path + "/height", 1, 4096);
  const std::string method = j.contains("method") ? get_string(j["method"], path + "/method") : "diffusion";
  if (method == "threshold") {
    FixedThreshold t;
    if (j.contains("threshold")) t.threshold = get_real(j["threshold"], path + "/threshold");
    config.method = t;
  } else if (method == "otsu") {
    config.method = OtsuThreshold{};
  } else if (method == "ordered") {
    OrderedDither d;
    if (j.contains("dither_size")) d.matrix_size = get_int(j["dither_size"], path + "/dither_size");
    config.method = d;
  } else if (method == "diffusion") {
    config.method = ErrorDiffusion{};
  } else {
    throw ValidationError(path + "/method", "expected threshold, otsu, ordered or diffusion");
  }
  if (j.contains("polarity")) {
    const std::string p = get_string(j["polarity"], path + "/polarity");
    if (p == "dark-warp")
      config.polarity = Polarity::DarkIsWarpUp;
    else if (p == "light-warp")
      config.polarity = Polarity::LightIsWarpUp;
    else
      throw ValidationError(path + "/polarity", "expected dark-warp or light-warp");
  }
  if (j.contains("levels")) config.palette_size = get_int(j["levels"], path + "/levels", 2, 256);
  with_path(path, [&] {
    validate(config);
    return 0;
  });
  return config;
}

PatternDocument make_document(const RuleSpec& rule, const EvolutionConfig& config,
                              const PatternGrid& grid) {
  return PatternDocument{kPatternFormatVersion, rule, config, grid, std::nullopt, std::nullopt};
}

Drawdown document_drawdown(const PatternDocument& doc) {
  const Colorway cw = doc.colorway.value_or(Colorway{});
  if (doc.grid.k() == 2)
    return Drawdown(doc.grid, cw.warp_colors, cw.weft_colors, cw.palette);
  auto separation = color_separate(doc.grid);
  auto palette = cw.palette.empty() ? default_palette(doc.grid.k()) : cw.palette;
  auto weft = cw.weft_colors.empty() ? separation.weft_colors : cw.weft_colors;
  return Drawdown(std::move(separation.structure), cw.warp_colors, std::move(weft),
                  std::move(palette));
}

Json to_json(const PatternDocument& doc) {
  Json j;
  j["format_version"] = doc.format_version;
  if (doc.rule) j["rule"] = to_json(*doc.rule);
  if (doc.evolution) j["evolution"] = to_json(*doc.evolution);
  j["grid"] = grid_to_json(doc.grid);
  if (doc.metrics) j["metrics"] = to_json(*doc.metrics);
  if (doc.colorway) j["colorway"] = to_json(*doc.colorway);
  return j;
}

PatternDocument document_from_json(const Json& j) {
  check_object(j, "", {"format_version", "rule", "evolution", "grid", "metrics", "colorway"});
  const int version = get_int(require(j, "", "format_version"), "/format_version");
  if (version != kPatternFormatVersion)
    throw UnsupportedError("unsupported format_version " + std::to_string(version) +
                           " (this build reads version " +
                           std::to_string(kPatternFormatVersion) + ")");
  std::optional<RuleSpec> rule;
  if (j.contains("rule")) rule = rule_from_json(j["rule"], "/rule");
  std::optional<EvolutionConfig> evolution;
  if (j.contains("evolution")) evolution = evolution_from_json(j["evolution"], "/evolution");
  PatternGrid grid = grid_from_json(require(j, "", "grid"), "/grid");
  std::optional<RuleMetrics> metrics;
  if (j.contains("metrics")) metrics = metrics_from_json(j["metrics"], "/metrics");
  std::optional<Colorway> colorway;
  if (j.contains("colorway")) colorway = colorway_from_json(j["colorway"], "/colorway");

  if (evolution && !rule) throw ValidationError("/rule", "evolution config requires a rule");
  if (rule && grid.k() != rule->k()) throw ValidationError("/grid/k", "does not match rule k");
  if (rule && evolution) {
    with_path("/evolution", [&] {
      validate(*evolution, *rule);
      return 0;
    });
    if (grid.width() != evolution->width)
      throw ValidationError("/grid/width", "does not match evolution width");
    if (grid.init_rows() != rule->window())
      throw ValidationError("/grid/init_rows", "does not match rule window");
    if (grid.generated_rows() != evolution->steps)
      throw ValidationError("/grid/rows", "does not match init rows + steps");
  }
  PatternDocument doc{version, std::move(rule), std::move(evolution), std::move(grid),
                      std::move(metrics), std::move(colorway)};
  if (doc.colorway)
    with_path("/colorway", [&] {
      document_drawdown(doc);
      return 0;
    });
  return doc;
}

std::string encode_pattern_json(const PatternDocument& doc) { return to_json(doc).dump(2) + "\n"; }

PatternDocument decode_pattern_json(std::string_view bytes) {
  Json j;
  try {
    j = Json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.byte, std::string("malformed JSON: ") + e.what());
  }
  return document_from_json(j);
}

// ---------------------------------------------------------------------------
// WIF

std::string export_wif(const LoomDraft& draft, int capacity) {
  if (draft.shaft_count > capacity) throw CapacityError(draft.shaft_count, capacity);
  const Drawdown& dd = draft.drawdown;
  std::ostringstream out;
  out << "[WIF]\nVersion=1.1\nDate=April 20, 1997\nDevelopers=wif@mhsoft.com\n"
         "Source Program=loomata\n";
  out << "[CONTENTS]\nCOLOR PALETTE=true\nCOLOR TABLE=true\nWEAVING=true\nWARP=true\n"
         "WEFT=true\nTHREADING=true\nLIFTPLAN=true\nWARP COLORS=true\nWEFT COLORS=true\n";
  out << "[COLOR PALETTE]\nEntries=" << dd.palette().size() << "\nForm=RGB\nRange=0,255\n";
  out << "[COLOR TABLE]\n";
  for (std::size_t i = 0; i < dd.palette().size(); ++i) {
    const auto& c = dd.palette()[i];
    out << i + 1 << '=' << int(c.r) << ',' << int(c.g) << ',' << int(c.b) << '\n';
  }
  out << "[WEAVING]\nShafts=" << draft.shaft_count << "\nTreadles=0\nRising Shed=true\n";
  out << "[WARP]\nThreads=" << dd.ends() << "\nColor=" << dd.warp_colors().front() + 1 << '\n';
  out << "[WEFT]\nThreads=" << dd.picks() << "\nColor=" << dd.weft_colors().front() + 1 << '\n';
  out << "[THREADING]\n";
  for (std::size_t e = 0; e < draft.threading.size(); ++e)
    out << e + 1 << '=' << draft.threading[e] + 1 << '\n';
  out << "[LIFTPLAN]\n";
  for (std::size_t p = 0; p < draft.liftplan.size(); ++p) {
    if (draft.liftplan[p].empty()) continue;
    out << p + 1 << '=';
    for (std::size_t i = 0; i < draft.liftplan[p].size(); ++i)
      out << (i ? "," : "") << draft.liftplan[p][i] + 1;
    out << '\n';
  }
  out << "[WARP COLORS]\n";
  for (std::size_t e = 0; e < dd.warp_colors().size(); ++e)
    out << e + 1 << '=' << dd.warp_colors()[e] + 1 << '\n';
  out << "[WEFT COLORS]\n";
  for (std::size_t p = 0; p < dd.weft_colors().size(); ++p)
    out << p + 1 << '=' << dd.weft_colors()[p] + 1 << '\n';
  return out.str();
}

namespace {

struct WifEntry {
  std::string key;  // upper case
  std::string value;
  std::size_t offset;
};

using WifSections = std::map<std::string, std::vector<WifEntry>>;

WifSections read_wif_sections(std::string_view text) {
  WifSections sections;
  std::string current;
  std::size_t at = 0;
  while (at <= text.size()) {
    const auto eol = text.find('\n', at);
    const auto line_end = eol == std::string_view::npos ? text.size() : eol;
    const std::string line = trim(text.substr(at, line_end - at));
    if (!line.empty() && line[0] != ';') {
      if (line.front() == '[') {
        if (line.back() != ']') throw ParseError(at, "unterminated section header");
        current = upper(trim(std::string_view(line).substr(1, line.size() - 2)));
        sections[current];
      } else {
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(at, "expected key=value");
        if (current.empty()) throw ParseError(at, "entry outside of any section");
        sections[current].push_back(
            {upper(trim(std::string_view(line).substr(0, eq))),
             trim(std::string_view(line).substr(eq + 1)), at});
      }
    }
    if (eol == std::string_view::npos) break;
    at = eol + 1;
  }
  return sections;
}

const std::vector<WifEntry>& wif_section(const WifSections& sections, const std::string& name,
                                         std::size_t end_offset) {
  auto it = sections.find(name);
  if (it == sections.end()) throw ParseError(end_offset, "missing [" + name + "] section");
  return it->second;
}

const WifEntry* wif_key(const std::vector<WifEntry>& section, const std::string& key) {
  for (const auto& e : section)
    if (e.key == key) return &e;
  return nullptr;
}

int wif_int(const WifEntry& e, const std::string& where, int lo, int hi) {
  int v = 0;
  const auto* begin = e.value.data();
  const auto* end = begin + e.value.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc{} || ptr != end) throw ParseError(e.offset, where + ": expected an integer");
  if (v < lo || v > hi)
    throw ValidationError(where, "value " + std::to_string(v) + " outside " + std::to_string(lo) +
                                     ".." + std::to_string(hi));
  return v;
}

int wif_index(const WifEntry& e, const std::string& section, int count) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(e.key.data(), e.key.data() + e.key.size(), v);
  if (ec != std::errc{} || ptr != e.key.data() + e.key.size())
    throw ParseError(e.offset, section + ": expected a numeric key");
  if (v < 1 || v > count)
    throw ValidationError(section + "/" + e.key,
                          "index outside 1.." + std::to_string(count));
  return v - 1;
}

bool wif_bool(const std::string& value) {
  const std::string v = upper(value);
  return v == "TRUE" || v == "YES" || v == "ON" || v == "1";
}

}  // namespace

LoomDraft parse_wif(std::string_view text) {
  const WifSections sections = read_wif_sections(text);
  const std::size_t end = text.size();
  const auto& weaving = wif_section(sections, "WEAVING", end);
  const auto& warp = wif_section(sections, "WARP", end);
  const auto& weft = wif_section(sections, "WEFT", end);
  const auto& threading_section = wif_section(sections, "THREADING", end);
  const auto& liftplan_section = wif_section(sections, "LIFTPLAN", end);

  const auto* shafts_entry = wif_key(weaving, "SHAFTS");
  if (!shafts_entry) throw ParseError(end, "missing Shafts in [WEAVING]");
  const int shafts = wif_int(*shafts_entry, "WEAVING/Shafts", 1, 1 << 16);
  if (const auto* shed = wif_key(weaving, "RISING SHED"); shed && !wif_bool(shed->value))
    throw UnsupportedError("only rising-shed liftplans are supported");

  const auto* ends_entry = wif_key(warp, "THREADS");
  const auto* picks_entry = wif_key(weft, "THREADS");
  if (!ends_entry) throw ParseError(end, "missing Threads in [WARP]");
  if (!picks_entry) throw ParseError(end, "missing Threads in [WEFT]");
  const int ends = wif_int(*ends_entry, "WARP/Threads", 1, 1 << 20);
  const int picks = wif_int(*picks_entry, "WEFT/Threads", 1, 1 << 20);

  std::vector<int> threading(ends, -1);
  for (const auto& e : threading_section) {
    const int end_index = wif_index(e, "THREADING", ends);
    const auto parts = split(e.value, ',');
    if (parts.size() != 1)
      throw UnsupportedError("THREADING/" + e.key + ": multiple shafts per end");
    threading[end_index] = wif_int({e.key, parts[0], e.offset}, "THREADING/" + e.key, 1, shafts) - 1;
  }
  for (int e = 0; e < ends; ++e)
    if (threading[e] < 0)
      throw ValidationError("THREADING/" + std::to_string(e + 1), "end is not threaded");

  std::vector<std::vector<int>> liftplan(picks);
  for (const auto& e : liftplan_section) {
    const int pick = wif_index(e, "LIFTPLAN", picks);
    std::set<int> lifted;
    if (!e.value.empty())
      for (const auto& part : split(e.value, ','))
        lifted.insert(wif_int({e.key, part, e.offset}, "LIFTPLAN/" + e.key, 1, shafts) - 1);
    liftplan[pick].assign(lifted.begin(), lifted.end());
  }

  std::vector<Rgb> palette;
  if (auto it = sections.find("COLOR TABLE"); it != sections.end()) {
    int lo = 0, hi = 255;
    if (auto pal = sections.find("COLOR PALETTE"); pal != sections.end())
      if (const auto* range = wif_key(pal->second, "RANGE")) {
        const auto parts = split(range->value, ',');
        if (parts.size() != 2) throw ParseError(range->offset, "Range must be lo,hi");
        lo = wif_int({range->key, parts[0], range->offset}, "COLOR PALETTE/Range", 0, 65535);
        hi = wif_int({range->key, parts[1], range->offset}, "COLOR PALETTE/Range", lo + 1, 65535);
      }
    std::map<int, Rgb> entries;
    for (const auto& e : it->second) {
      const int index = wif_index(e, "COLOR TABLE", 1 << 16);
      const auto parts = split(e.value, ',');
      if (parts.size() != 3) throw ParseError(e.offset, "COLOR TABLE entries are r,g,b");
      std::uint8_t rgb[3];
      for (int c = 0; c < 3; ++c) {
        const int v = wif_int({e.key, parts[c], e.offset}, "COLOR TABLE/" + e.key, lo, hi);
        rgb[c] = static_cast<std::uint8_t>((static_cast<long>(v - lo) * 255 + (hi - lo) / 2) / (hi - lo));
      }
      entries[index] = {rgb[0], rgb[1], rgb[2]};
    }
    for (const auto& [index, color] : entries) {
      if (index != static_cast<int>(palette.size()))
        throw ValidationError("COLOR TABLE/" + std::to_string(index + 1), "palette has gaps");
      palette.push_back(color);
    }
  }
  if (palette.empty()) palette = default_palette(2);
  const int colors = static_cast<int>(palette.size());

  const auto read_colors = [&](const char* section, const std::vector<WifEntry>& defaults_section,
                               int count, int fallback) {
    int def = fallback;
    if (const auto* c = wif_key(defaults_section, "COLOR"))
      def = wif_int(*c, std::string(section) + "/Color", 1, colors) - 1;
    std::vector<int> out(count, def);
    if (auto it = sections.find(section); it != sections.end())
      for (const auto& e : it->second)
        out[wif_index(e, section, count)] =
            wif_int(e, std::string(section) + "/" + e.key, 1, colors) - 1;
    return out;
  };
  auto warp_colors = read_colors("WARP COLORS", warp, ends, std::min(1, colors - 1));
  auto weft_colors = read_colors("WEFT COLORS", weft, picks, 0);

  PatternGrid grid(reconstruct(threading, liftplan), 2, 0, GridMeta{"wif", std::nullopt, {}});
  Drawdown drawdown(std::move(grid), std::move(warp_colors), std::move(weft_colors),
                    std::move(palette));
  return LoomDraft{shafts, std::move(threading), std::move(liftplan), std::move(drawdown)};
}

// ---------------------------------------------------------------------------
// Raster exports

std::string export_pbm(const PatternGrid& grid) {
  if (grid.k() != 2) throw UnsupportedError("PBM export needs a binary grid");
  std::string out = "P1\n" + std::to_string(grid.width()) + " " + std::to_string(grid.rows()) + "\n";
  for (int r = 0; r < grid.rows(); ++r) {
    for (int c = 0; c < grid.width(); ++c) {
      if (c) out += ' ';
      out += grid(r, c) ? '1' : '0';
    }
    out += '\n';
  }
  return out;
}

StateMatrix parse_pbm(std::string_view text) {
  std::size_t at = 0;
  const auto skip = [&] {
    while (at < text.size()) {
      if (text[at] == '#')
        while (at < text.size() && text[at] != '\n') ++at;
      else if (std::isspace(static_cast<unsigned char>(text[at])))
        ++at;
      else
        break;
    }
  };
  const auto number = [&](const char* what) {
    skip();
    const std::size_t start = at;
    long v = 0;
    while (at < text.size() && std::isdigit(static_cast<unsigned char>(text[at])) && v < (1L << 30))
      v = v * 10 + (text[at++] - '0');
    if (at == start) throw ParseError(at, std::string("expected ") + what);
    return v;
  };
  if (!text.starts_with("P1")) throw ParseError(0, "expected PBM magic P1");
  at = 2;
  const long width = number("width");
  const long height = number("height");
  if (width < 1 || height < 1) throw ParseError(at, "zero image dimension");
  StateMatrix cells(height, width);
  for (long r = 0; r < height; ++r)
    for (long c = 0; c < width; ++c) {
      skip();
      if (at >= text.size()) throw ParseError(at, "truncated PBM raster");
      if (text[at] != '0' && text[at] != '1') throw ParseError(at, "PBM pixels are 0 or 1");
      cells(r, c) = static_cast<State>(text[at++] - '0');
    }
  return cells;
}

std::vector<std::uint8_t> export_png(const Image& image) { return png::encode(image); }

// ---------------------------------------------------------------------------
// Rule-space tables

std::string sweep_csv(const std::vector<RuleMetrics>& sweep) {
  std::string out = "rule,h,H,H_block,max_warp_float,max_weft_float,weaveable\n";
  for (const auto& m : sweep) {
    out += m.rule_id + ',' + ratio_text(m.ratio) + ',' + format_real(m.entropy) + ',' +
           format_real(m.block_entropy) + ',' + std::to_string(m.max_warp_float) + ',' +
           std::to_string(m.max_weft_float) + ',' + (m.weaveable ? "true" : "false") + '\n';
  }
  return out;
}

Json sweep_json(const std::vector<RuleMetrics>& sweep) {
  Json rows = Json::array();
  for (const auto& m : sweep) {
    Json row;
    row["rule"] = std::stoi(m.rule_id);
    row["h"] = ratio_to_json(m.ratio);
    row["H"] = m.entropy;
    row["H_block"] = m.block_entropy;
    row["max_warp_float"] = m.max_warp_float;
    row["max_weft_float"] = m.max_weft_float;
    row["weaveable"] = m.weaveable;
    rows.push_back(std::move(row));
  }
  return rows;
}

Json parse_sweep_csv(std::string_view csv) {
  Json rows = Json::array();
  std::size_t at = 0;
  bool header = true;
  const auto to_double = [](const std::string& s, std::size_t offset) {
    double v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw ParseError(offset, "bad number '" + s + "'");
    return v;
  };
  while (at < csv.size()) {
    auto eol = csv.find('\n', at);
    if (eol == std::string_view::npos) eol = csv.size();
    const std::string line = trim(csv.substr(at, eol - at));
    const std::size_t line_at = at;
    at = eol + 1;
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 7) throw ParseError(line_at, "expected 7 columns");
    if (header) {
      header = false;
      if (cells[0] == "rule") continue;
    }
    Json row;
    row["rule"] = static_cast<int>(to_double(cells[0], line_at));
    if (cells[1] == "inf")
      row["h"] = "inf";
    else
      row["h"] = to_double(cells[1], line_at);
    row["H"] = to_double(cells[2], line_at);
    row["H_block"] = to_double(cells[3], line_at);
    row["max_warp_float"] = static_cast<int>(to_double(cells[4], line_at));
    row["max_weft_float"] = static_cast<int>(to_double(cells[5], line_at));
    if (cells[6] != "true" && cells[6] != "false") throw ParseError(line_at, "weaveable must be true/false");
    row["weaveable"] = cells[6] == "true";
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace loomata
