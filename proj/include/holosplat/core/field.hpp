#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "holosplat/core/grid.hpp"

namespace holosplat {

using complex = std::complex<double>;
using ComplexGrid = Grid<complex>;
using RealGrid = Grid<double>;

inline constexpr double pi = std::numbers::pi;
inline constexpr int channel_count = 3;

struct OpticsConfig {
  double pixel_pitch = 8e-6;
  std::array<double, 3> wavelengths{638e-9, 520e-9, 450e-9};
  std::size_t grid_ny = 256;
  std::size_t grid_nx = 256;
  double slm_z = 0.0;

  Shape shape() const noexcept { return {grid_ny, grid_nx}; }

  double wavelength(int channel) const {
    check_channel(channel);
    return wavelengths[static_cast<std::size_t>(channel)];
  }

  double wavenumber(int channel) const { return 2.0 * pi / wavelength(channel); }

  static void check_channel(int channel) {
    if (channel < 0 || channel >= channel_count) {
      throw invalid_argument("channel index " + std::to_string(channel) + " outside {0,1,2}");
    }
  }

  void validate() const {
    if (!(pixel_pitch > 0.0) || !std::isfinite(pixel_pitch)) {
      throw config_error("optics: pixel_pitch must be positive");
    }
    for (double w : wavelengths) {
      if (!(w > 0.0) || !std::isfinite(w)) throw config_error("optics: wavelengths must be positive");
    }
    if (grid_ny < 2 || grid_nx < 2) throw config_error("optics: grid dimensions must be >= 2");
  }
};

// Sampled complex field on a plane parallel to the SLM.
struct WaveField {
  ComplexGrid samples;
  double pitch = 0.0;
  double wavelength = 0.0;
  double plane_z = 0.0;

  Shape shape() const noexcept { return samples.shape(); }
  double wavenumber() const noexcept { return 2.0 * pi / wavelength; }
};

// DC-centered unitary spectrum of a WaveField.
struct SpectrumField {
  ComplexGrid samples;
  double pitch = 0.0;  // spatial pitch of the originating field
  double wavelength = 0.0;
  double plane_z = 0.0;

  Shape shape() const noexcept { return samples.shape(); }
  // cycles per meter per bin
  double freq_step_x() const noexcept { return 1.0 / (static_cast<double>(shape().nx) * pitch); }
  double freq_step_y() const noexcept { return 1.0 / (static_cast<double>(shape().ny) * pitch); }
};

inline WaveField make_field(const OpticsConfig& cfg, int channel, double plane_z = 0.0) {
  cfg.validate();
  return WaveField{ComplexGrid(cfg.shape()), cfg.pixel_pitch, cfg.wavelength(channel), plane_z};
}

inline WaveField make_field(Shape shape, double pitch, double wavelength, double plane_z = 0.0) {
  if (!(pitch > 0.0) || !(wavelength > 0.0)) throw invalid_argument("make_field: pitch and wavelength must be positive");
  return WaveField{ComplexGrid(shape), pitch, wavelength, plane_z};
}

// Sample coordinate along one axis; index n/2 sits at the optical axis.
inline double axis_coordinate(std::size_t index, std::size_t n, double pitch) noexcept {
  return (static_cast<double>(index) - static_cast<double>(n / 2)) * pitch;
}

// Angular frequency (rad/m) of a centered spectral bin.
inline double axis_frequency(std::size_t index, std::size_t n, double pitch) noexcept {
  return (static_cast<double>(index) - static_cast<double>(n / 2)) * 2.0 * pi /
         (static_cast<double>(n) * pitch);
}

struct FrequencyGrid {
  RealGrid kx;
  RealGrid ky;
};

inline FrequencyGrid frequency_grid(Shape shape, double pitch) {
  if (!(pitch > 0.0)) throw invalid_argument("frequency_grid: pitch must be positive");
  FrequencyGrid g{RealGrid(shape), RealGrid(shape)};
  for (std::size_t y = 0; y < shape.ny; ++y) {
    const double ky = axis_frequency(y, shape.ny, pitch);
    for (std::size_t x = 0; x < shape.nx; ++x) {
      g.kx(y, x) = axis_frequency(x, shape.nx, pitch);
      g.ky(y, x) = ky;
    }
  }
  return g;
}

// Largest |k| present on a centered grid (the band corner).
inline double band_corner_radius(Shape shape, double pitch) noexcept {
  const double kx = 2.0 * pi / (static_cast<double>(shape.nx) * pitch) * static_cast<double>(shape.nx / 2);
  const double ky = 2.0 * pi / (static_cast<double>(shape.ny) * pitch) * static_cast<double>(shape.ny / 2);
  return std::hypot(kx, ky);
}

inline RealGrid intensity(const ComplexGrid& g) {
  RealGrid out(g.shape());
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = std::norm(g[i]);
  return out;
}

inline RealGrid intensity(const WaveField& f) { return intensity(f.samples); }

inline double sum_norm(const ComplexGrid& g) {
  double s = 0.0;
  for (const auto& v : g) s += std::norm(v);
  return s;
}

// Physical energy: sum |u|^2 * pitch^2.
inline double energy(const WaveField& f) { return sum_norm(f.samples) * f.pitch * f.pitch; }

inline bool all_finite(const ComplexGrid& g) {
  for (const auto& v : g) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  }
  return true;
}

// ||a - b|| / ||b||; returns ||a|| when b is zero.
inline double rel_l2(const ComplexGrid& a, const ComplexGrid& b) {
  require_same_shape(a, b, "rel_l2");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::norm(a[i] - b[i]);
    den += std::norm(b[i]);
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

inline double rel_l2(const RealGrid& a, const RealGrid& b) {
  require_same_shape(a, b, "rel_l2");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

}  // namespace holosplat
