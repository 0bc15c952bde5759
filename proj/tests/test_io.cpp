#include <doctest.h>

#include <random>

#include <zlib.h>

#include "loomata/error.hpp"
#include "loomata/io.hpp"
#include "loomata/png.hpp"
#include "support.hpp"

using namespace loomata;
using loomata::test::cells_from;

namespace {

PatternDocument rule90_document() {
  EvolutionConfig cfg;
  cfg.width = 31;
  cfg.steps = 15;
  cfg.boundary = Boundary::fixed(0);
  cfg.init = CenterInit{};
  const RuleSpec rule = rule_from_wolfram_number(90);
  return make_document(rule, cfg, evolve(rule, cfg));
}

Drawdown drawdown_of(const StateMatrix& cells) { return Drawdown(PatternGrid(cells, 2)); }

template <typename Fn>
std::string validation_path(Fn&& fn) {
  try {
    fn();
  } catch (const ValidationError& e) {
    return e.path();
  }
  return "<no error>";
}

}  // namespace

TEST_CASE("pattern documents round-trip bit-identically") {
  const PatternDocument doc = rule90_document();
  const std::string bytes = encode_pattern_json(doc);
  CHECK(bytes.back() == '\n');
  const PatternDocument back = decode_pattern_json(bytes);
  CHECK(back == doc);
  CHECK(encode_pattern_json(back) == bytes);

  SUBCASE("random init, metrics with an infinite ratio, colorway") {
    EvolutionConfig cfg;
    cfg.width = 17;
    cfg.steps = 9;
    cfg.init = RandomInit{123456789012345ull, 0.3};
    const RuleSpec rule = rule_from_wolfram_number(255);
    PatternDocument d = make_document(rule, cfg, evolve(rule, cfg));
    d.metrics = compute_metrics(d.grid);
    REQUIRE(d.metrics->ratio.is_infinite());
    d.colorway = Colorway{default_palette(2), std::vector<int>(17, 1), std::vector<int>(10, 0)};
    const std::string text = encode_pattern_json(d);
    CHECK(text.find("\"h\": \"inf\"") != std::string::npos);
    const PatternDocument again = decode_pattern_json(text);
    CHECK(again == d);
    CHECK(again.metrics->ratio.is_infinite());
  }
  SUBCASE("generalized rule with explicit init") {
    std::mt19937 gen(2);
    std::vector<State> table(table_size(3, 1, 1));
    for (auto& s : table) s = static_cast<State>(gen() % 3);
    const RuleSpec rule = rule_from_table(3, 1, 1, table);
    EvolutionConfig cfg;
    cfg.width = 12;
    cfg.steps = 6;
    cfg.boundary = Boundary::fixed(2);
    cfg.init = ExplicitInit{loomata::test::random_cells(gen, 1, 12, 3)};
    PatternDocument d = make_document(rule, cfg, evolve(rule, cfg));
    MetricsOptions opts;
    d.metrics = compute_metrics(d.grid, opts);
    CHECK(decode_pattern_json(encode_pattern_json(d)) == d);
  }
  SUBCASE("raster documents carry only a grid") {
    PatternDocument d{kPatternFormatVersion, std::nullopt, std::nullopt,
                      PatternGrid(cells_from({"0110", "1001"}), 2, 0, GridMeta{"raster", std::nullopt, {}}),
                      std::nullopt, std::nullopt};
    CHECK(decode_pattern_json(encode_pattern_json(d)) == d);
  }
}

TEST_CASE("reals survive the JSON round trip exactly") {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    EvolutionConfig cfg;
    cfg.width = 5;
    cfg.steps = 1;
    cfg.init = RandomInit{1, u(gen)};
    const RuleSpec rule = rule_from_wolfram_number(30);
    PatternDocument d = make_document(rule, cfg, evolve(rule, cfg));
    const auto back = decode_pattern_json(encode_pattern_json(d));
    REQUIRE(std::get<RandomInit>(back.evolution->init).density ==
            std::get<RandomInit>(cfg.init).density);
  }
  CHECK(format_real(0.1) == "0.10000000000000001");
  CHECK(format_real(1.0) == "1");
}

TEST_CASE("pattern document errors") {
  const Json base = to_json(rule90_document());

  Json extra = base;
  extra["grid"]["foo"] = 1;
  CHECK(validation_path([&] { document_from_json(extra); }) == "/grid/foo");

  Json top = base;
  top["colour"] = "red";
  CHECK(validation_path([&] { document_from_json(top); }) == "/colour");

  Json version = base;
  version["format_version"] = 2;
  CHECK_THROWS_AS(document_from_json(version), UnsupportedError);

  Json width = base;
  width["evolution"]["width"] = 30;
  CHECK_THROWS_AS(document_from_json(width), ValidationError);

  Json bad_state = base;
  bad_state["grid"]["runs"][0][0][1] = 5;
  CHECK_THROWS_AS(document_from_json(bad_state), ValidationError);

  Json short_row = base;
  short_row["grid"]["runs"][0][0][0] = 1;
  CHECK_THROWS_AS(document_from_json(short_row), ValidationError);

  Json density = base;
  density["evolution"]["init"] = Json{{"kind", "random"}, {"seed", 1}, {"density", 2.0}};
  CHECK(validation_path([&] { document_from_json(density); }).rfind("/evolution", 0) == 0);

  try {
    decode_pattern_json("{\"format_version\": 1,");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.offset() > 0);
  }
}

TEST_CASE("JSON building blocks") {
  RasterConfig rc;
  rc.method = OrderedDither{8};
  rc.polarity = Polarity::LightIsWarpUp;
  rc.palette_size = 3;
  CHECK(raster_config_from_json(to_json(rc)) == rc);
  CHECK(validation_path([] { raster_config_from_json(Json{{"method", "magic"}}); }) ==
        "/config/method");

  const Colorway cw{{{1, 2, 3}, {4, 5, 6}}, {0, 1}, {1}};
  CHECK(colorway_from_json(to_json(cw)) == cw);

  const RuleSpec parity = rule_from_id(2, 1, 2, "6996966996696996");
  CHECK(rule_from_json(to_json(parity)) == parity);
  CHECK(rule_from_json(Json{{"id", 110}}) == rule_from_wolfram_number(110));

  CHECK(ratio_to_json(Ratio::infinite()) == "inf");
  CHECK(ratio_to_json(Ratio::finite(0.5)) == 0.5);
}

TEST_CASE("WIF export") {
  const LoomDraft plain = factorize(drawdown_of(cells_from({"1010", "0101", "1010", "0101"})));
  const std::string wif = export_wif(plain);
  CHECK(wif.find("[THREADING]\n1=1\n2=2\n3=1\n4=2\n") != std::string::npos);
  CHECK(wif.find("[LIFTPLAN]\n1=1\n2=2\n3=1\n4=2\n") != std::string::npos);
  CHECK(wif.find("Shafts=2\n") != std::string::npos);
  CHECK(wif.find("Rising Shed=true") != std::string::npos);
  CHECK(wif.find('\r') == std::string::npos);
  for (const char* section : {"[WIF]", "[CONTENTS]", "[WEAVING]", "[WARP]", "[WEFT]",
                              "[THREADING]", "[LIFTPLAN]", "[COLOR PALETTE]", "[WARP COLORS]",
                              "[WEFT COLORS]"})
    CHECK(wif.find(section) != std::string::npos);

  StateMatrix wide(6, 33);
  for (int c = 0; c < 33; ++c)
    for (int r = 0; r < 6; ++r) wide(r, c) = static_cast<State>((c >> r) & 1);
  const LoomDraft big = factorize(drawdown_of(wide), 64);
  CHECK_THROWS_AS(export_wif(big, 32), CapacityError);
  CHECK_NOTHROW(export_wif(big, 33));
}

TEST_CASE("WIF round trips") {
  std::vector<StateMatrix> cases{loomata::test::checkerboard(4, 4),
                                 cells_from({"1100", "0110", "0011", "1001"})};
  for (int i = 0; i < 20; ++i) {
    EvolutionConfig cfg;
    cfg.width = 24;
    cfg.steps = 20;
    cfg.init = RandomInit{static_cast<std::uint64_t>(i + 1), 0.5};
    cases.push_back(evolve(rule_from_wolfram_number((37 * i + 11) % 256), cfg).cells());
  }
  int compared = 0;
  for (const auto& cells : cases) {
    const Drawdown dd = drawdown_of(cells);
    const LoomDraft draft = factorize(dd);
    const LoomDraft parsed = parse_wif(export_wif(draft));
    CHECK(parsed == draft);
    CHECK(same_cells(reconstruct(parsed.threading, parsed.liftplan), cells));
    ++compared;
  }
  CHECK(compared == static_cast<int>(cases.size()));
}

TEST_CASE("WIF parsing tolerance and errors") {
  const LoomDraft plain = factorize(drawdown_of(cells_from({"1010", "0101"})));
  const std::string wif = export_wif(plain);

  std::string noisy = "; written by hand\r\n[NOTES]\r\n1=hello\r\n";
  for (char ch : wif) {
    if (ch == '\n') noisy += "\r\n";
    else noisy += ch;
  }
  noisy.replace(noisy.find("Shafts="), 7, "shafts=");
  noisy.replace(noisy.find("[THREADING]"), 11, "[threading]");
  CHECK(parse_wif(noisy) == plain);

  std::string no_lift = wif;
  no_lift.erase(no_lift.find("[LIFTPLAN]"), std::string("[LIFTPLAN]\n1=1\n2=2\n").size());
  try {
    parse_wif(no_lift);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("LIFTPLAN") != std::string::npos);
  }

  std::string bad_shaft = wif;
  bad_shaft.replace(bad_shaft.find("[LIFTPLAN]\n1=1"), 14, "[LIFTPLAN]\n1=3");
  CHECK_THROWS_AS(parse_wif(bad_shaft), ValidationError);
}

TEST_CASE("PBM") {
  const PatternGrid board(cells_from({"10", "01"}), 2);
  CHECK(export_pbm(board) == "P1\n2 2\n1 0\n0 1\n");
  CHECK(same_cells(parse_pbm(export_pbm(board)), board.cells()));
  CHECK(same_cells(parse_pbm("P1\n# c\n3 1\n011"), cells_from({"011"})));
  std::mt19937 gen(5);
  const PatternGrid random(loomata::test::random_cells(gen, 9, 13), 2);
  CHECK(same_cells(parse_pbm(export_pbm(random)), random.cells()));
  CHECK_THROWS_AS(export_pbm(PatternGrid(cells_from({"012"}), 3)), UnsupportedError);
  CHECK_THROWS_AS(parse_pbm("P1\n2 2\n1 0\n0"), ParseError);
}

TEST_CASE("PNG export is deterministic") {
  const Image one = render(drawdown_of(cells_from({"1"})), 1);
  const auto bytes = export_png(one);
  CHECK(png::decode(bytes) == one);
  CHECK(export_png(one) == bytes);
  // Recorded from the first verified encoding of this 1x1 render.
  CHECK(bytes.size() == 69);
  CHECK(crc32(0, bytes.data(), static_cast<uInt>(bytes.size())) == 0x1e315b9u);

  const Image board = render(drawdown_of(loomata::test::checkerboard(5, 7)), 3);
  CHECK(png::decode(export_png(board)) == board);
}

TEST_CASE("sweep tables") {
  EvolutionConfig cfg;
  cfg.width = 31;
  cfg.steps = 12;
  cfg.init = RandomInit{4, 0.5};
  const auto sweep = sweep_elementary(cfg);
  const std::string csv = sweep_csv(sweep);
  CHECK(csv.rfind("rule,h,H,H_block,max_warp_float,max_weft_float,weaveable\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 257);
  CHECK(csv.find("\n255,inf,0,0,") != std::string::npos);
  CHECK(parse_sweep_csv(csv) == sweep_json(sweep));
  CHECK(sweep_json(sweep)[255]["h"] == "inf");
  CHECK_THROWS_AS(parse_sweep_csv("rule,h\n1,2\n"), ParseError);
}
