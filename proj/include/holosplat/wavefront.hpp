#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "holosplat/core/field.hpp"
#include "holosplat/scene.hpp"

namespace holosplat {

inline constexpr double footprint_flush = 1e-6;
inline constexpr double covariance_floor_pixels = 0.3;

// Amplitude a_i(x) of one primitive on its plane. Samples are stored for the
// bounding box [y0, y0+rows) x [x0, x0+cols) and are zero elsewhere.
struct PrimitiveFootprint {
  Shape grid{};
  std::size_t y0 = 0;
  std::size_t x0 = 0;
  RealGrid amplitude;  // bounding-box crop
  double plane_z = 0.0;
  std::uint32_t primitive_id = 0;
  Mat2 cov2d{};
  bool empty = true;

  double at(std::size_t y, std::size_t x) const noexcept {
    if (y < y0 || x < x0 || y >= y0 + amplitude.rows() || x >= x0 + amplitude.cols()) return 0.0;
    return amplitude(y - y0, x - x0);
  }

  RealGrid dense() const {
    RealGrid out(grid);
    for (std::size_t y = 0; y < amplitude.rows(); ++y)
      for (std::size_t x = 0; x < amplitude.cols(); ++x) out(y + y0, x + x0) = amplitude(y, x);
    return out;
  }
};

// Lateral (x-y) covariance of R diag(s0^2, s1^2, 0) R^T with eigenvalues
// floored at (0.3 pitch)^2.
inline Mat2 project_covariance(const GaussianPrimitive& p, double pitch) {
  const double s0 = p.scales[0] * p.scales[0];
  const double s1 = p.scales[1] * p.scales[1];
  Mat2 c{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) c[i][j] = p.rot[i][0] * p.rot[j][0] * s0 + p.rot[i][1] * p.rot[j][1] * s1;
  c[1][0] = c[0][1];

  const double floor = std::pow(covariance_floor_pixels * pitch, 2);
  const double tr = c[0][0] + c[1][1];
  const double det = c[0][0] * c[1][1] - c[0][1] * c[0][1];
  const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
  const double lo = tr / 2.0 - disc;
  if (lo >= floor) return c;

  // Rebuild from the clamped eigen-decomposition.
  const double hi = tr / 2.0 + disc;
  double vx = 1.0;
  double vy = 0.0;
  if (std::abs(c[0][1]) > 0.0) {
    vx = hi - c[1][1];
    vy = c[0][1];
  } else if (c[1][1] > c[0][0]) {
    vx = 0.0;
    vy = 1.0;
  }
  const double n = std::hypot(vx, vy);
  vx /= n;
  vy /= n;
  const double l1 = std::max(hi, floor);
  const double l2 = std::max(lo, floor);
  Mat2 r{};
  r[0][0] = l1 * vx * vx + l2 * vy * vy;
  r[1][1] = l1 * vy * vy + l2 * vx * vx;
  r[0][1] = r[1][0] = (l1 - l2) * vx * vy;
  return r;
}

// Samples exp(-1/2 d^T C^{-1} d) at grid centers; values below 1e-6 are flushed.
inline PrimitiveFootprint rasterize_gaussian(const GaussianPrimitive& p, const OpticsConfig& cfg) {
  const double pitch = cfg.pixel_pitch;
  PrimitiveFootprint fp;
  fp.grid = cfg.shape();
  fp.plane_z = p.mean[2];
  fp.primitive_id = p.id;
  fp.cov2d = project_covariance(p, pitch);

  const auto& c = fp.cov2d;
  const double det = c[0][0] * c[1][1] - c[0][1] * c[1][0];
  const double ixx = c[1][1] / det;
  const double iyy = c[0][0] / det;
  const double ixy = -c[0][1] / det;

  // Beyond this Mahalanobis radius the Gaussian is below the flush level.
  const double q_max = -2.0 * std::log(footprint_flush);
  const double rx = std::sqrt(q_max * c[0][0]);
  const double ry = std::sqrt(q_max * c[1][1]);
  const double cx = p.mean[0] / pitch + static_cast<double>(fp.grid.nx / 2);
  const double cy = p.mean[1] / pitch + static_cast<double>(fp.grid.ny / 2);
  const double xlo = std::max(0.0, std::ceil(cx - rx / pitch));
  const double xhi = std::min(static_cast<double>(fp.grid.nx) - 1.0, std::floor(cx + rx / pitch));
  const double ylo = std::max(0.0, std::ceil(cy - ry / pitch));
  const double yhi = std::min(static_cast<double>(fp.grid.ny) - 1.0, std::floor(cy + ry / pitch));
  if (!(xlo <= xhi && ylo <= yhi)) return fp;

  fp.x0 = static_cast<std::size_t>(xlo);
  fp.y0 = static_cast<std::size_t>(ylo);
  fp.amplitude = RealGrid(static_cast<std::size_t>(yhi - ylo) + 1, static_cast<std::size_t>(xhi - xlo) + 1);
  for (std::size_t y = 0; y < fp.amplitude.rows(); ++y) {
    const double dy = axis_coordinate(y + fp.y0, fp.grid.ny, pitch) - p.mean[1];
    for (std::size_t x = 0; x < fp.amplitude.cols(); ++x) {
      const double dx = axis_coordinate(x + fp.x0, fp.grid.nx, pitch) - p.mean[0];
      const double q = ixx * dx * dx + iyy * dy * dy + 2.0 * ixy * (dx * dy);
      const double a = std::exp(-0.5 * q);
      if (a >= footprint_flush) {
        fp.amplitude(y, x) = a;
        fp.empty = false;
      }
    }
  }
  return fp;
}

// u_i(x) = a_i(x) e^{i k z_i} as a full-grid field.
inline WaveField primitive_wavefront(const PrimitiveFootprint& fp, const OpticsConfig& cfg, int channel) {
  WaveField f = make_field(cfg, channel, fp.plane_z);
  const complex phase = std::polar(1.0, cfg.wavenumber(channel) * fp.plane_z);
  for (std::size_t y = 0; y < fp.amplitude.rows(); ++y)
    for (std::size_t x = 0; x < fp.amplitude.cols(); ++x) f.samples(y + fp.y0, x + fp.x0) = fp.amplitude(y, x) * phase;
  return f;
}

}  // namespace holosplat
