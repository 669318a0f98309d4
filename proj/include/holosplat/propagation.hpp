#pragma once

#include <cmath>
#include <cstdint>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>

#include "holosplat/core/fft.hpp"
#include "holosplat/core/field.hpp"

namespace holosplat {

enum class BandLimit { off, on, automatic };

struct PropagationOptions {
  BandLimit band_limit = BandLimit::automatic;
  bool pad = false;  // propagate on a 2x zero-padded grid, then crop
};

// Angular spectrum transfer function H(k; z) on the centered frequency grid.
struct AsmKernel {
  ComplexGrid transfer;
  double z = 0.0;
  double wavelength = 0.0;
  bool band_limited = false;
};

// Distance beyond which the unmasked transfer function aliases on this grid.
inline double band_limit_threshold(Shape shape, double pitch, double wavelength) {
  const auto n = static_cast<double>(std::min(shape.ny, shape.nx));
  return n * pitch * pitch / wavelength;
}

inline bool resolve_band_limit(BandLimit mode, Shape shape, double pitch, double wavelength, double z) {
  switch (mode) {
    case BandLimit::off: return false;
    case BandLimit::on: return true;
    case BandLimit::automatic: return std::abs(z) > band_limit_threshold(shape, pitch, wavelength);
  }
  return false;
}

inline AsmKernel asm_kernel(Shape shape, double pitch, double wavelength, double z, bool band_limited) {
  if (!(pitch > 0.0) || !(wavelength > 0.0)) {
    throw invalid_argument("asm_kernel: pitch and wavelength must be positive");
  }
  AsmKernel kernel{ComplexGrid(shape), z, wavelength, band_limited};
  const double k = 2.0 * pi / wavelength;
  const double k2 = k * k;
  // Band-limited ASM frequency bound per axis, in cycles/m.
  const double dfx = 1.0 / (static_cast<double>(shape.nx) * pitch);
  const double dfy = 1.0 / (static_cast<double>(shape.ny) * pitch);
  const double fx_limit = 1.0 / (wavelength * std::sqrt(std::pow(2.0 * dfx * z, 2) + 1.0));
  const double fy_limit = 1.0 / (wavelength * std::sqrt(std::pow(2.0 * dfy * z, 2) + 1.0));
  for (std::size_t y = 0; y < shape.ny; ++y) {
    const double ky = axis_frequency(y, shape.ny, pitch);
    for (std::size_t x = 0; x < shape.nx; ++x) {
      const double kx = axis_frequency(x, shape.nx, pitch);
      const double kt2 = kx * kx + ky * ky;
      if (kt2 >= k2) continue;  // evanescent
      if (band_limited && (std::abs(kx) / (2.0 * pi) > fx_limit || std::abs(ky) / (2.0 * pi) > fy_limit)) {
        continue;
      }
      kernel.transfer(y, x) = std::polar(1.0, z * std::sqrt(k2 - kt2));
    }
  }
  return kernel;
}

namespace detail {

// Small synchronized cache; compositing reuses a handful of plane spacings.
class AsmKernelCache {
 public:
  static AsmKernelCache& instance() {
    static AsmKernelCache cache;
    return cache;
  }

  std::shared_ptr<const AsmKernel> get(Shape shape, double pitch, double wavelength, double z, bool bl) {
    const Key key{shape.ny, shape.nx, pitch, wavelength, z, bl};
    {
      std::lock_guard lock(mutex_);
      if (auto it = entries_.find(key); it != entries_.end()) return it->second;
    }
    auto kernel = std::make_shared<const AsmKernel>(asm_kernel(shape, pitch, wavelength, z, bl));
    std::lock_guard lock(mutex_);
    if (entries_.size() >= kCapacity) {
      entries_.erase(order_.front());
      order_.pop_front();
    }
    if (entries_.emplace(key, kernel).second) order_.push_back(key);
    return kernel;
  }

 private:
  using Key = std::tuple<std::size_t, std::size_t, double, double, double, bool>;
  static constexpr std::size_t kCapacity = 64;
  std::mutex mutex_;
  std::map<Key, std::shared_ptr<const AsmKernel>> entries_;
  std::list<Key> order_;
};

inline ComplexGrid embed_centered(const ComplexGrid& g, Shape target) {
  ComplexGrid out(target);
  const std::size_t oy = target.ny / 2 - g.rows() / 2;
  const std::size_t ox = target.nx / 2 - g.cols() / 2;
  for (std::size_t y = 0; y < g.rows(); ++y) {
    for (std::size_t x = 0; x < g.cols(); ++x) out(y + oy, x + ox) = g(y, x);
  }
  return out;
}

inline ComplexGrid crop_centered(const ComplexGrid& g, Shape target) {
  ComplexGrid out(target);
  const std::size_t oy = g.rows() / 2 - target.ny / 2;
  const std::size_t ox = g.cols() / 2 - target.nx / 2;
  for (std::size_t y = 0; y < target.ny; ++y) {
    for (std::size_t x = 0; x < target.nx; ++x) out(y, x) = g(y + oy, x + ox);
  }
  return out;
}

inline ComplexGrid apply_transfer(const ComplexGrid& samples, double pitch, double wavelength, double z,
                                  const PropagationOptions& opts) {
  const Shape shape = samples.shape();
  const bool bl = resolve_band_limit(opts.band_limit, shape, pitch, wavelength, z);
  auto kernel = AsmKernelCache::instance().get(shape, pitch, wavelength, z, bl);
  ComplexGrid spec = centered_fft(samples);
  for (std::size_t i = 0; i < spec.size(); ++i) spec[i] *= kernel->transfer[i];
  return centered_ifft(spec);
}

}  // namespace detail

// Free-space propagation by signed distance z (angular spectrum method).
inline WaveField propagate(const WaveField& f, double z, const PropagationOptions& opts = {}) {
  WaveField out{ComplexGrid(), f.pitch, f.wavelength, f.plane_z + z};
  if (z == 0.0) {
    out.samples = f.samples;
  } else if (opts.pad) {
    const Shape padded{2 * f.shape().ny, 2 * f.shape().nx};
    const auto big = detail::apply_transfer(detail::embed_centered(f.samples, padded), f.pitch, f.wavelength, z, opts);
    out.samples = detail::crop_centered(big, f.shape());
  } else {
    out.samples = detail::apply_transfer(f.samples, f.pitch, f.wavelength, z, opts);
  }
  return out;
}

// Projection of f onto the spectral support that survives propagation by z.
inline WaveField band_project(const WaveField& f, double z, const PropagationOptions& opts = {}) {
  if (z == 0.0) return f;
  const bool bl = resolve_band_limit(opts.band_limit, f.shape(), f.pitch, f.wavelength, z);
  const AsmKernel kernel = asm_kernel(f.shape(), f.pitch, f.wavelength, z, bl);
  ComplexGrid spec = centered_fft(f.samples);
  for (std::size_t i = 0; i < spec.size(); ++i) {
    if (kernel.transfer[i] == complex{}) spec[i] = 0.0;
  }
  return WaveField{centered_ifft(spec), f.pitch, f.wavelength, f.plane_z};
}

struct RoundTripResult {
  double residual = 0.0;                  // relL2(back-and-forth, band_project(f))
  double out_of_band_energy_fraction = 0.0;  // energy removed by the round trip
};

inline RoundTripResult round_trip_check(const WaveField& f, double z, const PropagationOptions& opts = {}) {
  PropagationOptions unpadded = opts;
  unpadded.pad = false;
  const WaveField back = propagate(propagate(f, z, unpadded), -z, unpadded);
  const WaveField projected = band_project(f, z, unpadded);
  RoundTripResult r;
  r.residual = rel_l2(back.samples, projected.samples);
  const double e0 = sum_norm(f.samples);
  r.out_of_band_energy_fraction = e0 > 0.0 ? std::max(0.0, 1.0 - sum_norm(back.samples) / e0) : 0.0;
  return r;
}

// Power spectral density |spectrum(f)|^2 per centered bin.
inline RealGrid psd(const WaveField& f) { return intensity(centered_fft(f.samples)); }

// Monte-Carlo mean of psd over draws of `sampler(draw_index) -> WaveField`.
template <typename Sampler>
RealGrid expected_psd(Sampler&& sampler, std::size_t n_draws) {
  if (n_draws < 1) throw invalid_argument("expected_psd: n_draws must be >= 1");
  RealGrid mean;
  for (std::size_t d = 0; d < n_draws; ++d) {
    const RealGrid p = psd(sampler(d));
    if (d == 0) {
      mean = RealGrid(p.shape());
    }
    require_same_shape(mean, p, "expected_psd");
    for (std::size_t i = 0; i < p.size(); ++i) mean[i] += p[i];
  }
  const double inv = 1.0 / static_cast<double>(n_draws);
  for (auto& v : mean) v *= inv;
  return mean;
}

}  // namespace holosplat
