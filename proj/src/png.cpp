#include "loomata/png.hpp"

#include <array>
#include <cstdlib>
#include <string>

#include <zlib.h>

#include "loomata/error.hpp"

namespace loomata::png {

namespace {

constexpr std::array<std::uint8_t, 8> kSignature = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

std::uint32_t read_be32(std::span<const std::uint8_t> b, std::size_t at) {
  return (std::uint32_t(b[at]) << 24) | (std::uint32_t(b[at + 1]) << 16) |
         (std::uint32_t(b[at + 2]) << 8) | std::uint32_t(b[at + 3]);
}

void write_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void write_chunk(std::vector<std::uint8_t>& out, const char (&type)[5],
                 std::span<const std::uint8_t> data) {
  write_be32(out, static_cast<std::uint32_t>(data.size()));
  const std::size_t type_at = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  const uLong crc = crc32(0L, out.data() + type_at, static_cast<uInt>(4 + data.size()));
  write_be32(out, static_cast<std::uint32_t>(crc));
}

int paeth(int a, int b, int c) {
  const int p = a + b - c;
  const int pa = std::abs(p - a);
  const int pb = std::abs(p - b);
  const int pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

}  // namespace

bool has_signature(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= kSignature.size() &&
         std::equal(kSignature.begin(), kSignature.end(), bytes.begin());
}

Image decode(std::span<const std::uint8_t> bytes) {
  if (!has_signature(bytes)) throw ParseError(0, "missing PNG signature");

  std::size_t at = kSignature.size();
  bool have_header = false;
  bool have_end = false;
  std::uint32_t width = 0, height = 0;
  int channels = 0;
  std::vector<std::uint8_t> compressed;

  while (at < bytes.size() && !have_end) {
    if (bytes.size() - at < 12) throw ParseError(at, "truncated PNG chunk header");
    const std::uint32_t length = read_be32(bytes, at);
    if (length > bytes.size() - at - 12) throw ParseError(at, "truncated PNG chunk");
    const std::string type(reinterpret_cast<const char*>(bytes.data() + at + 4), 4);
    const auto data = bytes.subspan(at + 8, length);
    const std::uint32_t stored_crc = read_be32(bytes, at + 8 + length);
    if (crc32(0L, bytes.data() + at + 4, length + 4) != stored_crc)
      throw ParseError(at, "CRC mismatch in " + type + " chunk");

    if (type == "IHDR") {
      if (length != 13) throw ParseError(at, "IHDR must be 13 bytes");
      width = read_be32(data, 0);
      height = read_be32(data, 4);
      const int depth = data[8];
      const int color_type = data[9];
      if (width == 0 || height == 0) throw ParseError(at + 8, "zero image dimension");
      if (width > 16384 || height > 16384) throw ParseError(at + 8, "image dimensions too large");
      if (depth != 8) throw ParseError(at + 16, "only 8-bit PNG is supported");
      if (color_type == 0)
        channels = 1;
      else if (color_type == 2)
        channels = 3;
      else
        throw ParseError(at + 17, "only grayscale and RGB PNG are supported");
      if (data[10] != 0 || data[11] != 0) throw ParseError(at + 18, "unknown PNG method");
      if (data[12] != 0) throw ParseError(at + 20, "interlaced PNG is not supported");
      have_header = true;
    } else if (type == "IDAT") {
      if (!have_header) throw ParseError(at, "IDAT before IHDR");
      compressed.insert(compressed.end(), data.begin(), data.end());
    } else if (type == "IEND") {
      have_end = true;
    } else if (type == "PLTE") {
      throw ParseError(at, "palette PNG is not supported");
    } else if (!(type[0] & 0x20)) {
      throw ParseError(at, "unknown critical chunk " + type);
    }
    at += 12 + length;
  }
  if (!have_header) throw ParseError(at, "missing IHDR");
  if (compressed.empty()) throw ParseError(at, "missing IDAT");
  if (!have_end) throw ParseError(at, "missing IEND");

  const std::size_t stride = std::size_t(width) * channels;
  std::vector<std::uint8_t> raw((stride + 1) * height);
  uLongf raw_size = raw.size();
  if (uncompress(raw.data(), &raw_size, compressed.data(), compressed.size()) != Z_OK ||
      raw_size != raw.size())
    throw ParseError(at, "corrupt or truncated image data");

  Image image(static_cast<int>(width), static_cast<int>(height), channels);
  std::vector<std::uint8_t> prev(stride, 0);
  for (std::uint32_t y = 0; y < height; ++y) {
    const std::uint8_t filter = raw[y * (stride + 1)];
    const std::uint8_t* line = raw.data() + y * (stride + 1) + 1;
    std::uint8_t* out = image.data.data() + y * stride;
    for (std::size_t i = 0; i < stride; ++i) {
      const int a = i >= std::size_t(channels) ? out[i - channels] : 0;
      const int b = prev[i];
      const int c = i >= std::size_t(channels) ? prev[i - channels] : 0;
      int predictor = 0;
      switch (filter) {
        case 0: predictor = 0; break;
        case 1: predictor = a; break;
        case 2: predictor = b; break;
        case 3: predictor = (a + b) / 2; break;
        case 4: predictor = paeth(a, b, c); break;
        default: throw ParseError(at, "invalid PNG filter type " + std::to_string(filter));
      }
      out[i] = static_cast<std::uint8_t>(line[i] + predictor);
    }
    std::copy(out, out + stride, prev.begin());
  }
  return image;
}

std::vector<std::uint8_t> encode(const Image& image) {
  if (image.width < 1 || image.height < 1) throw DomainError("cannot encode an empty image");
  if (image.channels != 1 && image.channels != 3)
    throw DomainError("PNG export needs 1 or 3 channels");

  std::vector<std::uint8_t> out(kSignature.begin(), kSignature.end());

  std::vector<std::uint8_t> header;
  write_be32(header, static_cast<std::uint32_t>(image.width));
  write_be32(header, static_cast<std::uint32_t>(image.height));
  header.push_back(8);
  header.push_back(image.channels == 1 ? 0 : 2);
  header.push_back(0);
  header.push_back(0);
  header.push_back(0);
  write_chunk(out, "IHDR", header);

  const std::size_t stride = std::size_t(image.width) * image.channels;
  std::vector<std::uint8_t> raw;
  raw.reserve((stride + 1) * image.height);
  for (int y = 0; y < image.height; ++y) {
    raw.push_back(0);
    const auto* row = image.data.data() + y * stride;
    raw.insert(raw.end(), row, row + stride);
  }
  uLongf packed_size = compressBound(raw.size());
  std::vector<std::uint8_t> packed(packed_size);
  if (compress2(packed.data(), &packed_size, raw.data(), raw.size(), 9) != Z_OK)
    throw Error(ErrorKind::Io, "zlib compression failed");
  packed.resize(packed_size);
  write_chunk(out, "IDAT", packed);
  write_chunk(out, "IEND", {});
  return out;
}

}  // namespace loomata::png
