#include <doctest.h>

#include <random>
#include <set>
#include <string>

#include "loomata/error.hpp"
#include "loomata/png.hpp"
#include "loomata/raster.hpp"
#include "support.hpp"

using namespace loomata;

namespace {

std::span<const std::uint8_t> as_bytes(const std::string& s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

LumaMatrix horizontal_gradient(int rows, int cols) {
  LumaMatrix m(rows, cols);
  for (int c = 0; c < cols; ++c) m.col(c).setConstant((c + 0.5) / cols);
  return m;
}

RasterConfig config_for(RasterMethod method, int w, int h) {
  RasterConfig c;
  c.method = method;
  c.target_width = w;
  c.target_height = h;
  return c;
}

int longest_run(const StateMatrix& m, State state, bool vertical) {
  int best = 0;
  const Eigen::Index outer = vertical ? m.cols() : m.rows();
  const Eigen::Index inner = vertical ? m.rows() : m.cols();
  for (Eigen::Index i = 0; i < outer; ++i) {
    int run = 0;
    for (Eigen::Index j = 0; j < inner; ++j) {
      run = (vertical ? m(j, i) : m(i, j)) == state ? run + 1 : 0;
      best = std::max(best, run);
    }
  }
  return best;
}

}  // namespace

TEST_CASE("netpbm decoding") {
  const LumaMatrix gray = load_image(as_bytes("P2\n2 2\n255\n0 255\n255 0\n"));
  CHECK(gray.rows() == 2);
  CHECK(gray(0, 0) == 0.0);
  CHECK(gray(0, 1) == 1.0);
  CHECK(gray(1, 0) == 1.0);
  CHECK(gray(1, 1) == 0.0);

  const LumaMatrix red = load_image(as_bytes("P3\n1 1\n255\n255 0 0\n"));
  CHECK(red(0, 0) == doctest::Approx(0.2126).epsilon(1e-12));

  const std::string p5 = std::string("P5\n# comment\n3 1\n255\n") + char(0) + char(51) + char(255);
  const LumaMatrix raw = load_image(as_bytes(p5));
  CHECK(raw(0, 1) == doctest::Approx(0.2).epsilon(1e-12));

  const std::string p6 = std::string("P6 1 1 255\n") + char(0) + char(255) + char(0);
  CHECK(load_image(as_bytes(p6))(0, 0) == doctest::Approx(0.7152).epsilon(1e-12));

  const std::string wide = std::string("P5 1 1 65535\n") + char(0x80) + char(0x00);
  CHECK(load_image(as_bytes(wide))(0, 0) == doctest::Approx(32768.0 / 65535.0).epsilon(1e-12));

  SUBCASE("truncated") {
    try {
      load_image(as_bytes("P2\n2 2\n255\n0 255\n255"));
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.offset() > 0);
    }
    CHECK_THROWS_AS(load_image(as_bytes(std::string("P5 2 2 255\n") + char(1))), ParseError);
  }
  CHECK_THROWS_AS(load_image(as_bytes("P2\n0 2\n255\n")), ParseError);
  CHECK_THROWS_AS(load_image(as_bytes("P2\n1 1\n255\n300\n")), ParseError);
  CHECK_THROWS_AS(load_image(as_bytes("P4\n1 1\n")), ParseError);
  CHECK_THROWS_AS(load_image(as_bytes("hello")), ParseError);
  CHECK_THROWS_AS(load_image(as_bytes("P3\n1 1\n255\n1 2 3\n"), ImageFormat::Pgm), ParseError);
}

TEST_CASE("png decoding through load_image") {
  Image img(3, 2, 1);
  for (int i = 0; i < 6; ++i) img.data[i] = static_cast<std::uint8_t>(i * 51);
  const auto bytes = png::encode(img);
  CHECK(png::has_signature(bytes));
  CHECK(png::decode(bytes) == img);
  const LumaMatrix m = load_image(bytes);
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 3);
  CHECK(m(1, 2) == 1.0);
  CHECK(m(0, 1) == doctest::Approx(0.2).epsilon(1e-12));

  Image rgb(1, 1, 3);
  rgb.data = {255, 0, 0};
  CHECK(load_image(png::encode(rgb))(0, 0) == doctest::Approx(0.2126).epsilon(1e-12));

  auto corrupt = bytes;
  corrupt[20] ^= 0xff;  // inside IHDR: CRC mismatch
  CHECK_THROWS_AS(png::decode(corrupt), ParseError);
  CHECK_THROWS_AS(png::decode(std::span(bytes).first(30)), ParseError);
  CHECK_THROWS_AS(png::encode(Image(0, 0, 3)), DomainError);
}

TEST_CASE("box resampling") {
  const LumaMatrix flat = LumaMatrix::Constant(7, 5, 0.5);
  const LumaMatrix up = resample(flat, 13, 11);
  CHECK((up.array() - 0.5).abs().maxCoeff() < 1e-15);
  const LumaMatrix down = resample(flat, 2, 3);
  CHECK((down.array() - 0.5).abs().maxCoeff() < 1e-15);

  LumaMatrix pair(1, 2);
  pair << 0.0, 1.0;
  CHECK(resample(pair, 1, 1)(0, 0) == 0.5);

  std::mt19937 gen(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  LumaMatrix m(4, 4);
  for (int i = 0; i < 16; ++i) m.data()[i] = u(gen);
  const LumaMatrix half = resample(m, 2, 2);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) {
      const double mean = (m(2 * r, 2 * c) + m(2 * r + 1, 2 * c) + m(2 * r, 2 * c + 1) +
                           m(2 * r + 1, 2 * c + 1)) / 4.0;
      CHECK(std::abs(half(r, c) - mean) < 1e-15);
    }

  // Upsampling by an integer factor replicates cells.
  const LumaMatrix twice = resample(m, 8, 8);
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c) CHECK(std::abs(twice(r, c) - m(r / 2, c / 2)) < 1e-15);

  // Mean is preserved whatever the target size.
  const LumaMatrix odd = resample(m, 3, 5);
  CHECK(std::abs(odd.mean() - m.mean()) < 1e-12);
}

TEST_CASE("otsu threshold lies between two modes") {
  LumaMatrix two(4, 4);
  two.leftCols(2).setConstant(0.2);
  two.rightCols(2).setConstant(0.8);
  CHECK(otsu_threshold(two) == 0.5);
  two.rightCols(2).setConstant(0.4);
  const double t = otsu_threshold(two);
  CHECK(t > 0.2);
  CHECK(t < 0.4);
}

TEST_CASE("bayer matrices") {
  Eigen::MatrixXi b2(2, 2);
  b2 << 0, 2, 3, 1;
  CHECK(bayer_matrix(2) == b2);
  const Eigen::MatrixXi b8 = bayer_matrix(8);
  std::set<int> values(b8.data(), b8.data() + b8.size());
  CHECK(values.size() == 64);
  CHECK(*values.rbegin() == 63);
}

TEST_CASE("rasterization basics") {
  const LumaMatrix black = LumaMatrix::Zero(10, 10);
  for (RasterMethod method : {RasterMethod{FixedThreshold{}}, RasterMethod{OtsuThreshold{}},
                              RasterMethod{OrderedDither{}}, RasterMethod{ErrorDiffusion{}}}) {
    const PatternGrid g = rasterize(black, config_for(method, 6, 4));
    CHECK(g.rows() == 4);
    CHECK(g.width() == 6);
    CHECK(g.init_rows() == 0);
    CHECK(g.cells().cast<int>().sum() == 24);
  }

  LumaMatrix pair(1, 2);
  pair << 0.1, 0.9;
  const PatternGrid g = rasterize(pair, config_for(FixedThreshold{0.5}, 2, 1));
  CHECK(g(0, 0) == kWarpUp);
  CHECK(g(0, 1) == kWeftUp);
  auto light = config_for(FixedThreshold{0.5}, 2, 1);
  light.polarity = Polarity::LightIsWarpUp;
  const PatternGrid inv = rasterize(pair, light);
  CHECK(inv(0, 0) == kWeftUp);
  CHECK(inv(0, 1) == kWarpUp);

  CHECK_THROWS_AS(rasterize(LumaMatrix(0, 0), config_for(ErrorDiffusion{}, 2, 2)), DomainError);
  CHECK_THROWS_AS(validate(config_for(ErrorDiffusion{}, 0, 2)), ValidationError);
  CHECK_THROWS_AS(validate(config_for(OrderedDither{3}, 2, 2)), ValidationError);
  CHECK_THROWS_AS(validate(config_for(FixedThreshold{1.5}, 2, 2)), ValidationError);
}

TEST_CASE("density tracks luminance") {
  const LumaMatrix grad = horizontal_gradient(64, 64);
  for (RasterMethod method : {RasterMethod{ErrorDiffusion{}}, RasterMethod{OrderedDither{4}},
                              RasterMethod{OrderedDither{8}}}) {
    const PatternGrid g = rasterize(grad, config_for(method, 64, 64));
    const double density = g.cells().cast<double>().mean();
    CHECK(std::abs(density - 0.5) <= 0.02);
  }
  // Error diffusion follows local brightness too: a quarter-gray field.
  const PatternGrid q = rasterize(LumaMatrix::Constant(32, 32, 0.75),
                                  config_for(ErrorDiffusion{}, 32, 32));
  CHECK(std::abs(q.cells().cast<double>().mean() - 0.25) <= 0.02);
}

TEST_CASE("raising the threshold never removes warp-up cells") {
  std::mt19937 gen(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  LumaMatrix img(20, 30);
  for (Eigen::Index i = 0; i < img.size(); ++i) img.data()[i] = u(gen);
  StateMatrix previous = rasterize(img, config_for(FixedThreshold{0.0}, 30, 20)).cells();
  for (int step = 1; step <= 20; ++step) {
    const StateMatrix next =
        rasterize(img, config_for(FixedThreshold{step / 20.0}, 30, 20)).cells();
    CHECK(((previous.array() == kWarpUp) && (next.array() == kWeftUp)).count() == 0);
    previous = next;
  }
}

TEST_CASE("multi-level rasterization") {
  auto cfg = config_for(ErrorDiffusion{}, 64, 8);
  cfg.palette_size = 4;
  const PatternGrid g = rasterize(horizontal_gradient(8, 64), cfg);
  CHECK(g.k() == 4);
  std::set<int> states(g.cells().data(), g.cells().data() + g.cells().size());
  CHECK(states == std::set<int>{0, 1, 2, 3});
  // Dark polarity: the dark (left) edge carries the highest state.
  CHECK(g(0, 0) == 3);
  CHECK(g(0, 63) == 0);
}

TEST_CASE("float repair") {
  SUBCASE("a single white row") {
    StateMatrix row = StateMatrix::Zero(1, 12);
    const auto flipped = repair_floats(row, 5);
    CHECK(flipped == std::vector<Cell>{{0, 5}, {0, 11}});
    CHECK(row == loomata::test::cells_from({"000001000001"}));
  }
  SUBCASE("random grids end within the limit") {
    std::mt19937 gen(77);
    for (int trial = 0; trial < 2000; ++trial) {
      const int max_float = 2 + trial % 5;
      const StateMatrix original = loomata::test::random_cells(gen, 3 + trial % 29, 3 + trial % 31);
      StateMatrix cells = original;
      const auto flipped = repair_floats(cells, max_float);
      REQUIRE(longest_run(cells, kWeftUp, false) <= max_float);
      REQUIRE(longest_run(cells, kWarpUp, true) <= max_float);
      StateMatrix replay = original;
      for (const Cell& c : flipped) replay(c.row, c.col) ^= 1;
      REQUIRE(same_cells(replay, cells));
      StateMatrix again = cells;
      REQUIRE(repair_floats(again, max_float).empty());
    }
  }
  SUBCASE("clean grids are untouched") {
    StateMatrix board = loomata::test::checkerboard(9, 9);
    CHECK(repair_floats(board, 1).empty());
    // A closing 2x3 block of warp-up is within max_float 2 and must survive.
    StateMatrix block = loomata::test::cells_from({"1110", "1110"});
    const StateMatrix before = block;
    CHECK(repair_floats(block, 2).empty());
    CHECK(same_cells(block, before));
  }
  SUBCASE("vertical floats are cut") {
    StateMatrix column = StateMatrix::Ones(7, 1);
    const auto flipped = repair_floats(column, 3);
    CHECK(flipped == std::vector<Cell>{{3, 0}});
  }
  StateMatrix any = StateMatrix::Zero(2, 2);
  CHECK_THROWS_AS(repair_floats(any, 0), DomainError);
}

TEST_CASE("weavable rasterization") {
  const LumaMatrix white = LumaMatrix::Ones(64, 64);
  const WeavabilityConfig weave{0.25, 4.0, 5};
  auto cfg = config_for(ErrorDiffusion{}, 64, 64);

  const WeavableRaster raw = weavable_rasterize(white, cfg, weave, false);
  CHECK_FALSE(raw.weaveable);
  CHECK(std::find(raw.reasons.begin(), raw.reasons.end(), Violation::WeftFloat) != raw.reasons.end());
  CHECK(raw.floats.max_weft_float == 64);
  CHECK(raw.flipped.empty());

  const WeavableRaster fixed = weavable_rasterize(white, cfg, weave, true);
  CHECK(fixed.floats.max_weft_float <= 5);
  CHECK(fixed.floats.max_warp_float <= 5);
  CHECK(longest_run(fixed.grid.cells(), kWeftUp, false) <= 5);
  CHECK(longest_run(fixed.grid.cells(), kWarpUp, true) <= 5);
  CHECK_FALSE(fixed.flipped.empty());
  CHECK(std::find(fixed.reasons.begin(), fixed.reasons.end(), Violation::WeftFloat) ==
        fixed.reasons.end());

  const LumaMatrix gray = LumaMatrix::Constant(32, 32, 0.5);
  const WeavableRaster dithered =
      weavable_rasterize(gray, config_for(OrderedDither{2}, 32, 32), weave, true);
  CHECK(dithered.flipped.empty());
  CHECK(dithered.weaveable);
  CHECK(dithered.floats.max_weft_float == 1);

  const LumaMatrix grad = horizontal_gradient(64, 64);

  auto multi = cfg;
  multi.palette_size = 3;
  CHECK_THROWS_AS(weavable_rasterize(grad, multi, weave, true), UnsupportedError);
}
