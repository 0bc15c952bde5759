#include "loomata/raster.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <limits>
#include <string>

#include "loomata/error.hpp"
#include "loomata/png.hpp"

namespace loomata {

namespace {

constexpr unsigned long kMaxDimension = 16384;

// Netpbm header/ASCII tokenizer: whitespace separated, '#' comments.
class NetpbmReader {
 public:
  NetpbmReader(std::span<const std::uint8_t> bytes, std::size_t start)
      : bytes_(bytes), at_(start) {}

  void skip_space() {
    while (at_ < bytes_.size()) {
      if (bytes_[at_] == '#') {
        while (at_ < bytes_.size() && bytes_[at_] != '\n') ++at_;
      } else if (std::isspace(bytes_[at_])) {
        ++at_;
      } else {
        break;
      }
    }
  }

  unsigned long number(const char* what) {
    skip_space();
    const std::size_t start = at_;
    unsigned long value = 0;
    while (at_ < bytes_.size() && std::isdigit(bytes_[at_])) {
      value = value * 10 + (bytes_[at_] - '0');
      if (value > 1'000'000'000UL) throw ParseError(start, std::string(what) + " too large");
      ++at_;
    }
    if (at_ == start) {
      if (at_ >= bytes_.size()) throw ParseError(at_, std::string("truncated: missing ") + what);
      throw ParseError(at_, std::string("expected ") + what);
    }
    return value;
  }

  void single_space() {
    if (at_ >= bytes_.size() || !std::isspace(bytes_[at_]))
      throw ParseError(at_, "expected single whitespace before raster");
    ++at_;
  }

  unsigned binary_sample(int width) {
    if (bytes_.size() - at_ < std::size_t(width)) throw ParseError(at_, "truncated pixel data");
    unsigned v = bytes_[at_++];
    if (width == 2) v = (v << 8) | bytes_[at_++];
    return v;
  }

  std::size_t offset() const { return at_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t at_;
};

LumaMatrix load_netpbm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P') throw ParseError(0, "missing netpbm magic");
  const char kind = static_cast<char>(bytes[1]);
  if (kind != '2' && kind != '3' && kind != '5' && kind != '6')
    throw ParseError(1, std::string("unsupported netpbm type P") + kind);
  const bool color = kind == '3' || kind == '6';
  const bool binary = kind == '5' || kind == '6';

  NetpbmReader in(bytes, 2);
  const std::size_t dims_at = in.offset();
  const auto width = in.number("width");
  const auto height = in.number("height");
  if (width == 0 || height == 0) throw ParseError(dims_at, "zero image dimension");
  if (width > kMaxDimension || height > kMaxDimension)
    throw ParseError(dims_at, "image dimensions too large");
  const std::size_t maxval_at = in.offset();
  const auto maxval = in.number("maxval");
  if (maxval == 0 || maxval > 65535) throw ParseError(maxval_at, "maxval must be in 1..65535");
  if (binary) in.single_space();

  const int sample_bytes = maxval > 255 ? 2 : 1;
  const double scale = 1.0 / static_cast<double>(maxval);
  auto next = [&]() -> double {
    const std::size_t at = in.offset();
    const unsigned long v = binary ? in.binary_sample(sample_bytes) : in.number("sample");
    if (v > maxval) throw ParseError(at, "sample exceeds maxval");
    return static_cast<double>(v) * scale;
  };

  LumaMatrix luma(height, width);
  for (Eigen::Index r = 0; r < luma.rows(); ++r)
    for (Eigen::Index c = 0; c < luma.cols(); ++c) {
      if (color) {
        const double red = next();
        const double green = next();
        const double blue = next();
        luma(r, c) = kLumaRed * red + kLumaGreen * green + kLumaBlue * blue;
      } else {
        luma(r, c) = next();
      }
    }
  return luma;
}

LumaMatrix load_png(std::span<const std::uint8_t> bytes) {
  const Image image = png::decode(bytes);
  LumaMatrix luma(image.height, image.width);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x) {
      const auto* px = image.pixel(x, y);
      luma(y, x) = image.channels == 1
                       ? px[0] / 255.0
                       : kLumaRed * (px[0] / 255.0) + kLumaGreen * (px[1] / 255.0) +
                             kLumaBlue * (px[2] / 255.0);
    }
  return luma;
}

// Maps a light level (0 = darkest of k) to a state under the polarity.
State level_to_state(int level, int k, Polarity polarity) {
  return static_cast<State>(polarity == Polarity::DarkIsWarpUp ? k - 1 - level : level);
}

int uniform_band(double luma, int k) {
  return std::clamp(static_cast<int>(std::floor(luma * k)), 0, k - 1);
}

}  // namespace

LumaMatrix load_image(std::span<const std::uint8_t> bytes, ImageFormat format) {
  if (format == ImageFormat::Auto) {
    if (png::has_signature(bytes))
      format = ImageFormat::Png;
    else if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '3' || bytes[1] == '6'))
      format = ImageFormat::Ppm;
    else
      format = ImageFormat::Pgm;
  }
  switch (format) {
    case ImageFormat::Png: return load_png(bytes);
    case ImageFormat::Ppm:
      if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] != '3' && bytes[1] != '6')
        throw ParseError(1, "expected PPM (P3/P6)");
      return load_netpbm(bytes);
    default:
      if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] != '2' && bytes[1] != '5')
        throw ParseError(1, "expected PGM (P2/P5)");
      return load_netpbm(bytes);
  }
}

void validate(const RasterConfig& config) {
  if (config.target_width < 1) throw ValidationError("target_width", "must be >= 1");
  if (config.target_height < 1) throw ValidationError("target_height", "must be >= 1");
  if (config.palette_size < 2 || config.palette_size > 256)
    throw ValidationError("palette_size", "must be in 2..256");
  if (const auto* fixed = std::get_if<FixedThreshold>(&config.method))
    if (!(fixed->threshold >= 0.0 && fixed->threshold <= 1.0))
      throw ValidationError("method.threshold", "must be in [0,1]");
  if (const auto* ordered = std::get_if<OrderedDither>(&config.method)) {
    const int n = ordered->matrix_size;
    if (n < 2 || n > 16 || (n & (n - 1)) != 0)
      throw ValidationError("method.matrix_size", "must be a power of two in 2..16");
  }
}

double otsu_threshold(const LumaMatrix& luma) {
  constexpr int kBins = 256;
  std::array<double, kBins> hist{};
  for (Eigen::Index i = 0; i < luma.size(); ++i) {
    const double v = luma.data()[i];
    hist[std::clamp(static_cast<int>(v * kBins), 0, kBins - 1)] += 1.0;
  }
  const double total = static_cast<double>(luma.size());
  double sum_all = 0.0;
  for (int b = 0; b < kBins; ++b) sum_all += (b + 0.5) * hist[b];

  std::array<double, kBins - 1> variance{};
  double weight0 = 0.0, sum0 = 0.0;
  for (int b = 0; b < kBins - 1; ++b) {
    weight0 += hist[b];
    sum0 += (b + 0.5) * hist[b];
    const double weight1 = total - weight0;
    if (weight0 == 0.0 || weight1 == 0.0) continue;
    const double mean0 = sum0 / weight0;
    const double mean1 = (sum_all - sum0) / weight1;
    variance[b] = weight0 * weight1 * (mean0 - mean1) * (mean0 - mean1);
  }
  const double best = *std::max_element(variance.begin(), variance.end());
  int lo = 0, hi = kBins - 2;
  if (best > 0.0) {
    const double tol = best * 1e-12;
    lo = static_cast<int>(std::find_if(variance.begin(), variance.end(),
                                       [&](double v) { return v >= best - tol; }) -
                          variance.begin());
    hi = lo;
    while (hi + 1 < kBins - 1 && variance[hi + 1] >= best - tol) ++hi;
  }
  // Split after bin b means threshold (b+1)/kBins.
  return ((lo + 1) + (hi + 1)) / (2.0 * kBins);
}

Eigen::MatrixXi bayer_matrix(int size) {
  Eigen::MatrixXi m = Eigen::MatrixXi::Zero(1, 1);
  while (m.rows() < size) {
    const Eigen::Index n = m.rows();
    Eigen::MatrixXi next(2 * n, 2 * n);
    next.topLeftCorner(n, n) = 4 * m;
    next.topRightCorner(n, n) = (4 * m).array() + 2;
    next.bottomLeftCorner(n, n) = (4 * m).array() + 3;
    next.bottomRightCorner(n, n) = (4 * m).array() + 1;
    m = std::move(next);
  }
  return m;
}

PatternGrid rasterize(const LumaMatrix& luma, const RasterConfig& config) {
  validate(config);
  if (luma.size() == 0) throw DomainError("empty image");
  const int k = config.palette_size;
  const LumaMatrix src = resample(luma, config.target_height, config.target_width)
                             .cwiseMax(0.0)
                             .cwiseMin(1.0);
  StateMatrix cells(src.rows(), src.cols());

  std::visit(
      [&](const auto& method) {
        using T = std::decay_t<decltype(method)>;
        if constexpr (std::is_same_v<T, FixedThreshold> || std::is_same_v<T, OtsuThreshold>) {
          double t = 0.5;
          if constexpr (std::is_same_v<T, FixedThreshold>)
            t = method.threshold;
          else
            t = otsu_threshold(src);
          for (Eigen::Index r = 0; r < src.rows(); ++r)
            for (Eigen::Index c = 0; c < src.cols(); ++c) {
              const int level = k == 2 ? (src(r, c) < t ? 0 : 1) : uniform_band(src(r, c), k);
              cells(r, c) = level_to_state(level, k, config.polarity);
            }
        } else if constexpr (std::is_same_v<T, OrderedDither>) {
          const Eigen::MatrixXi bayer = bayer_matrix(method.matrix_size);
          const double cells_in_matrix = static_cast<double>(bayer.size());
          for (Eigen::Index r = 0; r < src.rows(); ++r)
            for (Eigen::Index c = 0; c < src.cols(); ++c) {
              const double offset =
                  (bayer(r % bayer.rows(), c % bayer.cols()) + 0.5) / cells_in_matrix;
              const int level = std::clamp(
                  static_cast<int>(std::floor(src(r, c) * (k - 1) + offset)), 0, k - 1);
              cells(r, c) = level_to_state(level, k, config.polarity);
            }
        } else {
          LumaMatrix work = src;
          const double top = k - 1;
          for (Eigen::Index r = 0; r < work.rows(); ++r)
            for (Eigen::Index c = 0; c < work.cols(); ++c) {
              const double v = work(r, c);
              const int level = std::clamp(static_cast<int>(std::lround(v * top)), 0, k - 1);
              const double err = v - level / top;
              cells(r, c) = level_to_state(level, k, config.polarity);
              if (c + 1 < work.cols()) work(r, c + 1) += err * 7.0 / 16.0;
              if (r + 1 < work.rows()) {
                if (c > 0) work(r + 1, c - 1) += err * 3.0 / 16.0;
                work(r + 1, c) += err * 5.0 / 16.0;
                if (c + 1 < work.cols()) work(r + 1, c + 1) += err * 1.0 / 16.0;
              }
            }
        }
      },
      config.method);

  return PatternGrid(std::move(cells), k, 0, GridMeta{"raster", std::nullopt, Boundary::wrap()});
}

namespace {

constexpr long kInfeasible = std::numeric_limits<long>::max() / 4;

// Minimum-flip assignment of one row. `forced` columns must be weft-up (their
// warp run above is already max_float long). When `saturation` is set, no
// more than max_float adjacent columns may end this row with a warp run of
// exactly max_float, which keeps the next row solvable. Among optimal rows the
// original value is kept as long as possible, so flips land late.
// Returns false when no assignment exists.
bool repair_row(const StateMatrix& original, Eigen::Index r, const std::vector<int>& above,
                int max_float, bool saturation, StateRow& out) {
  const Eigen::Index width = original.cols();
  const int cap = static_cast<int>(std::min<Eigen::Index>(max_float, width));
  // State 0: no open run; 1..cap: trailing weft run z; cap+1..2cap: trailing
  // saturated run s.
  const int states = 2 * cap + 1;
  const auto next_state = [&](int state, Eigen::Index c, State v) -> int {
    if (v == kWarpUp) {
      if (above[c] >= max_float) return -1;
      if (!saturation || above[c] != max_float - 1) return 0;
      const int s = state > cap ? state - cap : 0;
      return s + 1 > cap ? -1 : cap + s + 1;
    }
    const int z = state >= 1 && state <= cap ? state : 0;
    return z + 1 > max_float ? -1 : z + 1;
  };

  std::vector<long> cost((width + 1) * states, kInfeasible);
  const auto at = [&](Eigen::Index c, int state) -> long& { return cost[c * states + state]; };
  for (int st = 0; st < states; ++st) at(width, st) = 0;
  for (Eigen::Index c = width - 1; c >= 0; --c)
    for (int st = 0; st < states; ++st)
      for (State v : {kWeftUp, kWarpUp}) {
        const int nx = next_state(st, c, v);
        if (nx < 0 || at(c + 1, nx) >= kInfeasible) continue;
        at(c, st) = std::min(at(c, st), at(c + 1, nx) + (v != original(r, c)));
      }
  if (at(0, 0) >= kInfeasible) return false;

  out.resize(width);
  int st = 0;
  for (Eigen::Index c = 0; c < width; ++c) {
    const State keep = original(r, c);
    const State flip = keep == kWarpUp ? kWeftUp : kWarpUp;
    const int nk = next_state(st, c, keep);
    const bool keep_ok = nk >= 0 && at(c + 1, nk) < kInfeasible && at(c + 1, nk) == at(c, st);
    out(c) = keep_ok ? keep : flip;
    st = keep_ok ? nk : next_state(st, c, flip);
  }
  return true;
}

}  // namespace

std::vector<Cell> repair_floats(StateMatrix& cells, int max_float) {
  if (max_float < 1) throw DomainError("max_float must be >= 1");
  const StateMatrix original = cells;
  const Eigen::Index width = cells.cols();
  std::vector<int> above(width, 0);  // warp run ending on the previous row
  std::vector<Cell> flipped;
  StateRow row;

  for (Eigen::Index r = 0; r < cells.rows(); ++r) {
    if (!repair_row(original, r, above, max_float, false, row))
      throw DomainError("no float repair exists for row " + std::to_string(r) +
                        " with max_float " + std::to_string(max_float));
    // Does this row leave a run of max_float + 1 columns the next row cannot use?
    bool blocked = false;
    int saturated = 0;
    for (Eigen::Index c = 0; c < width && r + 1 < cells.rows(); ++c) {
      saturated = row(c) == kWarpUp && above[c] + 1 >= max_float ? saturated + 1 : 0;
      blocked |= saturated > max_float;
    }
    if (blocked && !repair_row(original, r, above, max_float, true, row))
      throw DomainError("no float repair exists for row " + std::to_string(r) +
                        " with max_float " + std::to_string(max_float));

    for (Eigen::Index c = 0; c < width; ++c) {
      if (row(c) != cells(r, c))
        flipped.push_back({static_cast<int>(r), static_cast<int>(c)});
      cells(r, c) = row(c);
      above[c] = row(c) == kWarpUp ? above[c] + 1 : 0;
    }
  }
  return flipped;
}

WeavableRaster weavable_rasterize(const LumaMatrix& luma, const RasterConfig& config,
                                  const WeavabilityConfig& weave, bool repair) {
  validate(weave);
  PatternGrid grid = rasterize(luma, config);
  std::vector<Cell> flipped;
  if (repair) {
    if (grid.k() != 2) throw UnsupportedError("float repair needs a binary raster");
    StateMatrix cells = grid.cells();
    const auto floats = scan_floats(cells);
    if (floats.max_warp_float > weave.max_float || floats.max_weft_float > weave.max_float) {
      flipped = repair_floats(cells, weave.max_float);
      grid = PatternGrid(std::move(cells), 2, 0, grid.meta());
    }
  }
  MetricsOptions options;
  options.scope = Scope::AllRows;
  options.block_length = std::min(3, grid.width());
  options.weave = weave;
  RuleMetrics metrics = compute_metrics(grid, options);
  const PatternGrid structure = grid.k() == 2 ? grid : color_separate(grid).structure;
  FloatReport floats = scan_floats(structure.cells());
  WeavableRaster result{std::move(grid), std::move(floats), metrics, metrics.weaveable,
                        metrics.reasons, std::move(flipped)};
  return result;
}

}  // namespace loomata
