#pragma once

// Minimal PNG codec: 8-bit grayscale or RGB, no interlacing.

#include <cstdint>
#include <span>
#include <vector>

#include "loomata/image.hpp"

namespace loomata::png {

bool has_signature(std::span<const std::uint8_t> bytes);

/// Throws ParseError (with byte offset) for malformed or unsupported files.
Image decode(std::span<const std::uint8_t> bytes);

/// Deterministic encoding (filter 0 on every row, zlib level 9).
std::vector<std::uint8_t> encode(const Image& image);

}  // namespace loomata::png
