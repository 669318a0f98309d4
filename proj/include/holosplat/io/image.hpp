#pragma once

#include <bit>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "holosplat/core/field.hpp"
#include "holosplat/core/error.hpp"

namespace holosplat::io {

inline std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw io_error("short write to '" + path + "'");
}

namespace image_detail {

// Netpbm-style header: whitespace separated tokens, '#' comments.
struct HeaderCursor {
  const std::string& bytes;
  std::size_t pos = 0;

  std::string token() {
    for (;;) {
      while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
      if (pos < bytes.size() && bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        continue;
      }
      break;
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (start == pos) throw Error(ErrorCategory::parse, "image header ended early");
    return bytes.substr(start, pos - start);
  }

  std::size_t size_token() {
    const std::string t = token();
    std::size_t used = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(t, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != t.size() || v == 0) throw Error(ErrorCategory::parse, "bad image dimension '" + t + "'");
    return v;
  }
};

}  // namespace image_detail

// Grayscale PFM ("Pf"); rows are stored bottom-up on disk.
inline RealGrid decode_pfm(const std::string& bytes) {
  image_detail::HeaderCursor h{bytes};
  const std::string magic = h.token();
  if (magic != "Pf") throw Error(ErrorCategory::parse, "expected a grayscale PFM (Pf), got '" + magic + "'");
  const std::size_t w = h.size_token();
  const std::size_t ht = h.size_token();
  const double scale = std::stod(h.token());
  ++h.pos;  // single whitespace before data
  const bool little = scale < 0.0;
  if (bytes.size() < h.pos + w * ht * 4) throw Error(ErrorCategory::parse, "PFM payload truncated");
  RealGrid g(ht, w);
  for (std::size_t r = 0; r < ht; ++r)
    for (std::size_t c = 0; c < w; ++c) {
      std::uint32_t bits = 0;
      std::memcpy(&bits, bytes.data() + h.pos + 4 * (r * w + c), 4);
      if (little != (std::endian::native == std::endian::little)) bits = __builtin_bswap32(bits);
      g(ht - 1 - r, c) = static_cast<double>(std::bit_cast<float>(bits));
    }
  return g;
}

// 1 channel ("Pf") or 3 channels ("PF"), little-endian.
inline std::string encode_pfm(const std::vector<const RealGrid*>& channels) {
  if (channels.size() != 1 && channels.size() != 3) throw invalid_argument("encode_pfm: need 1 or 3 channels");
  const Shape s = channels[0]->shape();
  for (const RealGrid* c : channels) require_same_shape(*channels[0], *c, "encode_pfm");
  std::string out = (channels.size() == 1 ? "Pf\n" : "PF\n") + std::to_string(s.nx) + " " + std::to_string(s.ny) +
                    "\n-1.0\n";
  for (std::size_t r = s.ny; r-- > 0;)
    for (std::size_t c = 0; c < s.nx; ++c)
      for (const RealGrid* ch : channels) {
        std::uint32_t bits = std::bit_cast<std::uint32_t>(static_cast<float>((*ch)(r, c)));
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
        char b[4];
        std::memcpy(b, &bits, 4);
        out.append(b, 4);
      }
  return out;
}

inline std::string encode_pfm(const RealGrid& g) { return encode_pfm(std::vector<const RealGrid*>{&g}); }

// Binary PGM (P5), 8 or 16 bit; values scaled to [0, 1].
inline RealGrid decode_pgm(const std::string& bytes) {
  image_detail::HeaderCursor h{bytes};
  if (h.token() != "P5") throw Error(ErrorCategory::parse, "expected a binary PGM (P5)");
  const std::size_t w = h.size_token();
  const std::size_t ht = h.size_token();
  const std::size_t maxval = h.size_token();
  if (maxval > 65535) throw Error(ErrorCategory::parse, "PGM maxval out of range");
  ++h.pos;
  const std::size_t bpp = maxval < 256 ? 1 : 2;
  if (bytes.size() < h.pos + w * ht * bpp) throw Error(ErrorCategory::parse, "PGM payload truncated");
  RealGrid g(ht, w);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + h.pos);
  for (std::size_t i = 0; i < w * ht; ++i) {
    const unsigned v = bpp == 1 ? p[i] : (static_cast<unsigned>(p[2 * i]) << 8) | p[2 * i + 1];
    g[i] = static_cast<double>(v) / static_cast<double>(maxval);
  }
  return g;
}

}  // namespace holosplat::io
