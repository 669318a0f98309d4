#pragma once

#include <png.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "holosplat/core/error.hpp"
#include "holosplat/core/field.hpp"

namespace holosplat::tool {

// 8-bit grayscale PNG held in memory. No time chunk, so identical pixels give
// identical bytes.
inline std::string encode_png_gray(const std::vector<unsigned char>& pixels, std::size_t rows, std::size_t cols) {
  if (pixels.size() != rows * cols) throw invalid_argument("png: pixel count does not match dimensions");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw io_error("png: cannot create writer");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw io_error("png: cannot create info struct");
  }
  std::string out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw io_error("png: encoder failed");
  }
  png_set_write_fn(
      png, &out,
      [](png_structp p, png_bytep data, png_size_t n) {
        static_cast<std::string*>(png_get_io_ptr(p))->append(reinterpret_cast<const char*>(data), n);
      },
      nullptr);
  png_set_IHDR(png, info, static_cast<png_uint_32>(cols), static_cast<png_uint_32>(rows), 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::size_t y = 0; y < rows; ++y) png_write_row(png, pixels.data() + y * cols);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

// Intensity for display: v / peak, then gamma 1/2.2 encoded.
inline std::string intensity_png(const RealGrid& g, double peak) {
  std::vector<unsigned char> px(g.size());
  const double inv = peak > 0.0 ? 1.0 / peak : 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double v = std::clamp(g[i] * inv, 0.0, 1.0);
    px[i] = static_cast<unsigned char>(std::lround(255.0 * std::pow(v, 1.0 / 2.2)));
  }
  return encode_png_gray(px, g.rows(), g.cols());
}

// [-pi, pi) onto 0..255.
inline std::string phase_png(const RealGrid& phase) {
  std::vector<unsigned char> px(phase.size());
  for (std::size_t i = 0; i < phase.size(); ++i) {
    const double u = (phase[i] + pi) / (2.0 * pi);
    px[i] = static_cast<unsigned char>(std::clamp(std::floor(256.0 * u), 0.0, 255.0));
  }
  return encode_png_gray(px, phase.rows(), phase.cols());
}

inline double max_of(const RealGrid& g) {
  double m = 0.0;
  for (double v : g) m = std::max(m, v);
  return m;
}

}  // namespace holosplat::tool
