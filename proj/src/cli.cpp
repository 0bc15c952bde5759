#include "loomata/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "loomata/error.hpp"
#include "loomata/io.hpp"
#include "loomata/service.hpp"

namespace loomata {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("cannot read " + path);
  return buffer.str();
}

void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("cannot write " + path);
}

void emit(const std::string& path, std::string_view bytes, std::ostream& out) {
  if (path.empty() || path == "-")
    out << bytes;
  else
    write_file(path, bytes);
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io: return kExitIo;
    case ErrorKind::Capacity: return kExitCapacity;
    default: return kExitValidation;
  }
}

void report(std::ostream& err, bool json, const std::string& kind, const std::string& message,
            const Json& extra = Json::object()) {
  if (json) {
    Json e;
    e["kind"] = kind;
    e["message"] = message;
    for (const auto& [k, v] : extra.items()) e[k] = v;
    Json body;
    body["error"] = std::move(e);
    err << body.dump() << '\n';
  } else {
    err << "loomata: " << message << '\n';
  }
}

std::string reasons_text(const std::vector<Violation>& reasons) {
  std::string s;
  for (auto v : reasons) {
    if (!s.empty()) s += ',';
    s += to_string(v);
  }
  return s.empty() ? "-" : s;
}

struct GenerateArgs {
  std::optional<int> rule;
  std::string table;
  int k = 2, radius = 1, window = 1;
  int width = 101, steps = 50;
  std::uint64_t seed = 1;
  double density = 0.5;
  std::string boundary = "wrap";
  std::string init = "center";
  int center_state = 1;
  bool with_metrics = false;
  std::string out;
};

struct SweepArgs {
  SweepRequest request;
  std::string format;
  std::string out;
  int threads = 1;
};

struct MetricsArgs {
  std::string input;
  double h_max = 4.0;
  int max_float = 5;
  int block = 3;
  std::string scope = "generated";
  bool json = false;
};

struct RasterArgs {
  std::string input;
  std::string method = "diffusion";
  std::optional<double> threshold;
  std::optional<int> dither_size;
  int width = 64, height = 64;
  std::string polarity = "dark-warp";
  int levels = 2;
  bool repair = false;
  int max_float = 5;
  double h_max = 4.0;
  std::string out;
};

struct DraftArgs {
  std::string input;
  std::string wif, png, pbm;
  int cell_px = 4;
  int capacity = kDefaultLoomCapacity;
};

struct ServeArgs {
  ServiceOptions options;
  std::string state_dir;
};

int do_generate(const GenerateArgs& a, std::ostream& out) {
  RuleSpec rule = a.rule ? rule_from_wolfram_number(*a.rule)
                         : rule_from_id(a.k, a.radius, a.window, a.table);
  EvolutionConfig config;
  config.width = a.width;
  config.steps = a.steps;
  config.boundary = parse_boundary(a.boundary);
  if (a.init == "random")
    config.init = RandomInit{a.seed, a.density};
  else
    config.init = CenterInit{static_cast<State>(a.center_state)};
  validate(config, rule);
  PatternDocument doc = make_document(rule, config, evolve(rule, config));
  if (a.with_metrics) doc.metrics = compute_metrics(doc.grid);
  emit(a.out, encode_pattern_json(doc), out);
  return kExitOk;
}

int do_sweep(const SweepArgs& a, std::ostream& out) {
  std::string format = a.format;
  if (format.empty()) {
    const auto ext = std::filesystem::path(a.out).extension().string();
    format = ext == ".json" ? "json" : "csv";
  }
  const auto results = run_sweep(a.request, a.threads);
  emit(a.out, format == "json" ? sweep_json(results).dump(2) + "\n" : sweep_csv(results), out);
  return kExitOk;
}

int do_metrics(const MetricsArgs& a, std::ostream& out) {
  const PatternDocument doc = decode_pattern_json(read_file(a.input));
  MetricsOptions options;
  options.scope = a.scope == "all" ? Scope::AllRows : Scope::GeneratedRows;
  options.block_length = std::min(a.block, doc.grid.width());
  options.weave = WeavabilityConfig::symmetric(a.h_max, a.max_float);
  const RuleMetrics m = compute_metrics(doc.grid, options);
  if (a.json) {
    out << to_json(m).dump(2) << '\n';
    return kExitOk;
  }
  out << "rule            " << m.rule_id << '\n'
      << "H               " << format_real(m.entropy) << '\n'
      << "h               " << (m.ratio.is_infinite() ? "inf" : format_real(m.ratio.value())) << '\n'
      << "H_block (L=" << m.block_length << ")   " << format_real(m.block_entropy) << '\n'
      << "max warp float  " << m.max_warp_float << '\n'
      << "max weft float  " << m.max_weft_float << '\n'
      << "weaveable       " << (m.weaveable ? "yes" : "no") << '\n'
      << "reasons         " << reasons_text(m.reasons) << '\n';
  return kExitOk;
}

int do_rasterize(const RasterArgs& a, std::ostream& out, std::ostream& err) {
  Json cfg;
  cfg["width"] = a.width;
  cfg["height"] = a.height;
  cfg["method"] = a.method;
  if (a.threshold) cfg["threshold"] = *a.threshold;
  if (a.dither_size) cfg["dither_size"] = *a.dither_size;
  cfg["polarity"] = a.polarity;
  cfg["levels"] = a.levels;
  const RasterConfig config = raster_config_from_json(cfg, "--");
  const WeavabilityConfig weave = WeavabilityConfig::symmetric(a.h_max, a.max_float);

  const std::string bytes = read_file(a.input);
  const LumaMatrix luma = load_image(
      std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
  const WeavableRaster result = weavable_rasterize(luma, config, weave, a.repair);
  PatternDocument doc{kPatternFormatVersion, std::nullopt, std::nullopt, result.grid,
                      std::nullopt, std::nullopt};
  emit(a.out, encode_pattern_json(doc), out);
  std::ostream& log = a.out.empty() || a.out == "-" ? err : out;
  log << "floats: warp " << result.floats.max_warp_float << ", weft "
      << result.floats.max_weft_float << "; weaveable " << (result.weaveable ? "yes" : "no")
      << " (" << reasons_text(result.reasons) << ")";
  if (a.repair) log << "; repaired " << result.flipped.size() << " cells";
  log << '\n';
  return kExitOk;
}

int do_draft(const DraftArgs& a, std::ostream& out) {
  const PatternDocument doc = decode_pattern_json(read_file(a.input));
  const Drawdown drawdown = document_drawdown(doc);

  // Everything is computed before the first file is written.
  std::string wif, pbm;
  std::vector<std::uint8_t> png;
  if (!a.wif.empty()) wif = export_wif(factorize(drawdown, a.capacity), a.capacity);
  if (!a.png.empty()) png = export_png(render(drawdown, a.cell_px));
  if (!a.pbm.empty()) pbm = export_pbm(drawdown.grid());
  if (a.wif.empty() && a.png.empty() && a.pbm.empty())
    throw ValidationError("draft", "nothing to do; pass --wif, --png or --pbm");

  if (!a.wif.empty()) emit(a.wif, wif, out);
  if (!a.png.empty())
    emit(a.png, std::string_view(reinterpret_cast<const char*>(png.data()), png.size()), out);
  if (!a.pbm.empty()) emit(a.pbm, pbm, out);
  return kExitOk;
}

int do_serve(ServeArgs a, std::ostream& out) {
  if (!a.state_dir.empty()) a.options.state_dir = a.state_dir;
  DesignService service(a.options);
  out << "listening on http://" << a.options.host << ':' << a.options.port << std::endl;
  if (!service.listen()) throw IoError("cannot listen on " + a.options.host + ":" +
                                       std::to_string(a.options.port));
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Weaving automata: generate, analyse, rasterize and draft woven patterns."};
  app.name("loomata");
  app.require_subcommand(1);
  app.fallthrough();
  bool json_errors = false;
  app.add_flag("--json-errors", json_errors, "Print errors to stderr as JSON");

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Evolve a rule into a pattern document");
  auto* rule_opt = generate->add_option("--rule", gen.rule, "Elementary rule number")
                       ->check(CLI::Range(0, 255));
  auto* table_opt = generate->add_option("--table", gen.table, "Rule table as a hex id");
  rule_opt->excludes(table_opt);
  generate->add_option("--k", gen.k, "States (with --table)")->capture_default_str();
  generate->add_option("--radius", gen.radius, "Radius (with --table)")->capture_default_str();
  generate->add_option("--window", gen.window, "Temporal window (with --table)")->capture_default_str();
  generate->add_option("--width", gen.width)->capture_default_str();
  generate->add_option("--steps", gen.steps)->capture_default_str();
  generate->add_option("--seed", gen.seed, "Seed for --init random")->capture_default_str();
  generate->add_option("--density", gen.density, "Density for --init random")->capture_default_str();
  generate->add_option("--boundary", gen.boundary, "wrap or fixedN")->capture_default_str();
  generate->add_option("--init", gen.init)
      ->check(CLI::IsMember({"center", "random"}))
      ->capture_default_str();
  generate->add_option("--center-state", gen.center_state)->capture_default_str();
  generate->add_flag("--with-metrics", gen.with_metrics, "Embed metrics in the document");
  generate->add_option("--out,-o", gen.out, "Output file (default stdout)");

  SweepArgs sw;
  auto* sweep = app.add_subcommand("sweep", "Metrics table for all 256 elementary rules");
  sweep->add_option("--width", sw.request.width)->capture_default_str();
  sweep->add_option("--steps", sw.request.steps)->capture_default_str();
  sweep->add_option("--seed", sw.request.seed)->capture_default_str();
  sweep->add_option("--h-max", sw.request.h_max, "Ratio band is [1/h-max, h-max]")->capture_default_str();
  sweep->add_option("--max-float", sw.request.max_float)->capture_default_str();
  sweep->add_option("--block", sw.request.block_length, "Block length for H_block")->capture_default_str();
  sweep->add_option("--format", sw.format, "csv or json (default from --out extension, else csv)")
      ->check(CLI::IsMember({"csv", "json"}));
  sweep->add_option("--out,-o", sw.out, "Output file (default stdout)");
  sweep->add_option("--threads", sw.threads)->check(CLI::Range(1, 256))->capture_default_str();

  MetricsArgs mt;
  auto* metrics = app.add_subcommand("metrics", "Print metrics of a pattern document");
  metrics->add_option("document", mt.input)->required();
  metrics->add_option("--h-max", mt.h_max)->capture_default_str();
  metrics->add_option("--max-float", mt.max_float)->capture_default_str();
  metrics->add_option("--block", mt.block)->capture_default_str();
  metrics->add_option("--scope", mt.scope)
      ->check(CLI::IsMember({"generated", "all"}))
      ->capture_default_str();
  metrics->add_flag("--json", mt.json);

  RasterArgs ra;
  auto* rasterize = app.add_subcommand("rasterize", "Convert a PGM/PPM/PNG image to a pattern");
  rasterize->add_option("image", ra.input)->required();
  rasterize->add_option("--method", ra.method)
      ->check(CLI::IsMember({"threshold", "otsu", "ordered", "diffusion"}))
      ->capture_default_str();
  rasterize->add_option("--threshold", ra.threshold);
  rasterize->add_option("--dither-size", ra.dither_size);
  rasterize->add_option("--width", ra.width)->capture_default_str();
  rasterize->add_option("--height", ra.height)->capture_default_str();
  rasterize->add_option("--polarity", ra.polarity)
      ->check(CLI::IsMember({"dark-warp", "light-warp"}))
      ->capture_default_str();
  rasterize->add_option("--levels", ra.levels)->capture_default_str();
  rasterize->add_flag("--repair", ra.repair, "Break floats longer than --max-float");
  rasterize->add_option("--max-float", ra.max_float)->capture_default_str();
  rasterize->add_option("--h-max", ra.h_max)->capture_default_str();
  rasterize->add_option("--out,-o", ra.out, "Output file (default stdout)");

  DraftArgs dr;
  auto* draft = app.add_subcommand("draft", "Export a document as WIF, PNG or PBM");
  draft->add_option("document", dr.input)->required();
  draft->add_option("--wif", dr.wif);
  draft->add_option("--png", dr.png);
  draft->add_option("--pbm", dr.pbm);
  draft->add_option("--cell-px", dr.cell_px)->check(CLI::Range(1, 64))->capture_default_str();
  draft->add_option("--capacity", dr.capacity, "Loom shafts")->check(CLI::Range(1, 65536))->capture_default_str();

  ServeArgs sv;
  auto* serve = app.add_subcommand("serve", "Run the HTTP design service");
  serve->add_option("--port", sv.options.port)->check(CLI::Range(0, 65535))->capture_default_str();
  serve->add_option("--host", sv.options.host)->capture_default_str();
  serve->add_option("--state-dir", sv.state_dir, "Directory for session snapshots");
  serve->add_option("--cors-origin", sv.options.cors_origin)->capture_default_str();
  serve->add_option("--threads", sv.options.sweep_threads, "Sweep worker threads")
      ->check(CLI::Range(1, 256))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    if (json_errors) {
      report(err, true, "usage", e.what());
      return kExitValidation;
    }
    app.exit(e, out, err);
    return kExitValidation;
  }

  try {
    if (*generate) {
      if (!gen.rule && gen.table.empty())
        throw ValidationError("--rule", "one of --rule or --table is required");
      return do_generate(gen, out);
    }
    if (*sweep) return do_sweep(sw, out);
    if (*metrics) return do_metrics(mt, out);
    if (*rasterize) return do_rasterize(ra, out, err);
    if (*draft) return do_draft(dr, out);
    if (*serve) return do_serve(sv, out);
  } catch (const CapacityError& e) {
    Json extra;
    extra["required_shafts"] = e.required();
    extra["capacity"] = e.capacity();
    report(err, json_errors, to_string(e.kind()), e.what(), extra);
    return kExitCapacity;
  } catch (const ValidationError& e) {
    Json extra;
    extra["path"] = e.path();
    report(err, json_errors, to_string(e.kind()), e.what(), extra);
    return kExitValidation;
  } catch (const Error& e) {
    report(err, json_errors, to_string(e.kind()), e.what());
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    report(err, json_errors, "internal", e.what());
    return kExitValidation;
  }
  return kExitValidation;
}

}  // namespace loomata
