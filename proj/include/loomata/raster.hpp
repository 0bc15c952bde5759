#pragma once

// Natural image -> weavable k-state grid.

#include <algorithm>
#include <cstdint>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "loomata/automaton.hpp"
#include "loomata/draft.hpp"
#include "loomata/metrics.hpp"

namespace loomata {

/// Luminance in [0,1]; rows are image rows.
using LumaMatrix = Eigen::MatrixXd;

inline constexpr double kLumaRed = 0.2126;
inline constexpr double kLumaGreen = 0.7152;
inline constexpr double kLumaBlue = 0.0722;

enum class ImageFormat { Auto, Pgm, Ppm, Png };

/// PGM (P2/P5), PPM (P3/P6) or 8-bit gray/RGB PNG. Throws ParseError with a
/// byte offset on malformed input.
LumaMatrix load_image(std::span<const std::uint8_t> bytes, ImageFormat format = ImageFormat::Auto);

/// Box-filter (area-average) resampling to rows x cols, for any real scalar.
/// Each output pixel averages the source area it covers, so constant images
/// stay constant and integer downscales are block means.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> resample(
    const Eigen::MatrixBase<Derived>& src, Eigen::Index rows, Eigen::Index cols) {
  using Scalar = typename Derived::Scalar;
  using Dense = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  // weights(i, j): share of source cell j in target cell i along one axis.
  const auto weights = [](Eigen::Index target, Eigen::Index source) {
    Dense w = Dense::Zero(target, source);
    const Scalar scale = Scalar(source) / Scalar(target);
    for (Eigen::Index i = 0; i < target; ++i) {
      const Scalar lo = Scalar(i) * scale;
      const Scalar hi = Scalar(i + 1) * scale;
      for (auto j = static_cast<Eigen::Index>(lo); j < source && Scalar(j) < hi; ++j) {
        const Scalar overlap = std::min(hi, Scalar(j + 1)) - std::max(lo, Scalar(j));
        if (overlap > Scalar(0)) w(i, j) = overlap;
      }
      w.row(i) /= w.row(i).sum();
    }
    return w;
  };
  const Dense vertical = weights(rows, src.rows());
  const Dense horizontal = weights(cols, src.cols());
  return vertical * src * horizontal.transpose();
}

struct FixedThreshold {
  double threshold = 0.5;
  friend bool operator==(const FixedThreshold&, const FixedThreshold&) = default;
};
struct OtsuThreshold {
  friend bool operator==(const OtsuThreshold&, const OtsuThreshold&) = default;
};
struct OrderedDither {
  int matrix_size = 4;  // Bayer matrix, power of two in 2..16
  friend bool operator==(const OrderedDither&, const OrderedDither&) = default;
};
/// Floyd-Steinberg, left-to-right, top-to-bottom.
struct ErrorDiffusion {
  friend bool operator==(const ErrorDiffusion&, const ErrorDiffusion&) = default;
};

using RasterMethod = std::variant<FixedThreshold, OtsuThreshold, OrderedDither, ErrorDiffusion>;

enum class Polarity { DarkIsWarpUp, LightIsWarpUp };

struct RasterConfig {
  int target_width = 64;
  int target_height = 64;
  RasterMethod method = ErrorDiffusion{};
  Polarity polarity = Polarity::DarkIsWarpUp;
  int palette_size = 2;

  friend bool operator==(const RasterConfig&, const RasterConfig&) = default;
};

void validate(const RasterConfig& config);

/// Threshold maximizing between-class variance over a 256-bin histogram,
/// placed mid-plateau when several splits tie.
double otsu_threshold(const LumaMatrix& luma);

/// Square Bayer index matrix of the given power-of-two size.
Eigen::MatrixXi bayer_matrix(int size);

PatternGrid rasterize(const LumaMatrix& luma, const RasterConfig& config);

struct Cell {
  int row = 0;
  int col = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

/// Breaks floats longer than `max_float`: weft runs along rows and warp runs
/// down columns. Rows are settled top to bottom, each with the fewest flips
/// that respect the limits given the rows above, flips placed as late as
/// possible. Grids already within the limits are unchanged. Returns the
/// flipped cells in row-major order. Throws DomainError when no row
/// assignment exists, which can only happen for max_float 1.
std::vector<Cell> repair_floats(StateMatrix& cells, int max_float);

struct WeavableRaster {
  PatternGrid grid;
  FloatReport floats;
  RuleMetrics metrics;
  bool weaveable = false;
  std::vector<Violation> reasons;
  std::vector<Cell> flipped;
};

WeavableRaster weavable_rasterize(const LumaMatrix& luma, const RasterConfig& config,
                                  const WeavabilityConfig& weave, bool repair = false);

}  // namespace loomata
