#pragma once

#include <algorithm>
#include <cmath>

#include "holosplat/core/field.hpp"

namespace holosplat {

inline constexpr double psnr_cap_db = 120.0;

inline double mse(const RealGrid& a, const RealGrid& b) {
  require_same_shape(a, b, "mse");
  if (a.size() == 0) throw invalid_argument("mse: empty images");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s / static_cast<double>(a.size());
}

inline double psnr(const RealGrid& a, const RealGrid& b, double peak = 1.0) {
  if (!(peak > 0.0)) throw invalid_argument("psnr: peak must be positive");
  const double e = mse(a, b);
  if (e == 0.0) return psnr_cap_db;
  return std::min(psnr_cap_db, 10.0 * std::log10(peak * peak / e));
}

// Mean SSIM with an 11x11 Gaussian window (sigma 1.5), K1 = 0.01, K2 = 0.03,
// evaluated over window positions fully inside the image.
inline double ssim(const RealGrid& a, const RealGrid& b, double data_range = 1.0) {
  require_same_shape(a, b, "ssim");
  constexpr std::size_t win = 11;
  if (a.rows() < win || a.cols() < win) throw invalid_argument("ssim: images must be at least 11x11");
  if (!(data_range > 0.0)) throw invalid_argument("ssim: data range must be positive");
  double g[win];
  double gs = 0.0;
  for (std::size_t i = 0; i < win; ++i) {
    const double d = static_cast<double>(i) - 5.0;
    g[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
    gs += g[i];
  }
  for (double& v : g) v /= gs;
  const double c1 = std::pow(0.01 * data_range, 2), c2 = std::pow(0.03 * data_range, 2);
  const std::size_t ny = a.rows() - win + 1, nx = a.cols() - win + 1;
  double total = 0.0;
  for (std::size_t y = 0; y < ny; ++y)
    for (std::size_t x = 0; x < nx; ++x) {
      double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
      for (std::size_t i = 0; i < win; ++i)
        for (std::size_t j = 0; j < win; ++j) {
          const double w = g[i] * g[j];
          const double va = a(y + i, x + j), vb = b(y + i, x + j);
          ma += w * va;
          mb += w * vb;
          saa += w * va * va;
          sbb += w * vb * vb;
          sab += w * va * vb;
        }
      const double var_a = saa - ma * ma, var_b = sbb - mb * mb, cov = sab - ma * mb;
      total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
    }
  return total / static_cast<double>(ny * nx);
}

}  // namespace holosplat
