#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <variant>

#include "holosplat/core/fft.hpp"
#include "holosplat/core/field.hpp"
#include "holosplat/core/rng.hpp"
#include "holosplat/io/image.hpp"

namespace holosplat {

enum class KernelKind { uniform, pupil, spherical_harmonic, custom };

// Angular emission amplitude Q(k) on the centered frequency grid, scaled so
// that sum(q^2) / N = 1, i.e. E|m(x)|^2 = 1 for the modulation it generates.
struct SpectralKernel {
  RealGrid q;
  KernelKind kind = KernelKind::uniform;
  double pupil_radius = 0.0;  // rad/m, pupil only
  int l = 0;
  int m = 0;
  double normalization = 1.0;  // factor applied to the raw profile
};

inline SpectralKernel normalize_kernel(RealGrid q, KernelKind kind) {
  if (q.size() == 0) throw invalid_argument("kernel: empty grid");
  double s2 = 0.0;
  for (double v : q) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw invalid_argument("kernel: values must be finite and >= 0");
    s2 += v * v;
  }
  if (!(s2 > 0.0)) throw invalid_argument("kernel: profile is identically zero");
  const double scale = std::sqrt(static_cast<double>(q.size()) / s2);
  for (double& v : q) v *= scale;
  SpectralKernel k;
  k.q = std::move(q);
  k.kind = kind;
  k.normalization = scale;
  return k;
}

inline SpectralKernel kernel_uniform(Shape shape) { return normalize_kernel(RealGrid(shape.ny, shape.nx, 1.0), KernelKind::uniform); }

// Binary disc |k| <= r.
inline SpectralKernel kernel_pupil(Shape shape, double pitch, double r) {
  if (!(r > 0.0)) throw invalid_argument("kernel_pupil: radius must be positive");
  const double dkx = 2.0 * pi / (static_cast<double>(shape.nx) * pitch);
  const double dky = 2.0 * pi / (static_cast<double>(shape.ny) * pitch);
  if (r < std::min(dkx, dky)) {
    throw invalid_argument("kernel_pupil: radius " + std::to_string(r) + " rad/m is below one frequency bin");
  }
  const auto f = frequency_grid(shape, pitch);
  RealGrid q(shape);
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = std::hypot(f.kx[i], f.ky[i]) <= r ? 1.0 : 0.0;
  auto k = normalize_kernel(std::move(q), KernelKind::pupil);
  k.pupil_radius = r;
  return k;
}

// Real spherical harmonics, no Condon-Shortley phase, of a unit direction.
inline double real_sh(int l, int m, double x, double y, double z) {
  constexpr double c0 = 0.28209479177387814;  // 1 / (2 sqrt(pi))
  constexpr double c1 = 0.4886025119029199;   // sqrt(3 / (4 pi))
  constexpr double c2 = 1.0925484305920792;   // sqrt(15 / pi) / 2
  constexpr double c20 = 0.31539156525252005;  // sqrt(5 / pi) / 4
  constexpr double c22 = 0.5462742152960396;   // sqrt(15 / pi) / 4
  switch (l * 10 + m) {
    case 0: return c0;
    case 9: return c1 * y;
    case 10: return c1 * z;
    case 11: return c1 * x;
    case 18: return c2 * x * y;
    case 19: return c2 * y * z;
    case 20: return c20 * (3.0 * z * z - 1.0);
    case 21: return c2 * x * z;
    case 22: return c22 * (x * x - y * y);
    default: break;
  }
  throw invalid_argument("real_sh: unsupported (l, m) = (" + std::to_string(l) + ", " + std::to_string(m) + ")");
}

inline void check_sh_degree(int l, int m) {
  if (l < 0 || l > 2 || m < -l || m > l) {
    throw invalid_argument("kernel_sh: unsupported (l, m) = (" + std::to_string(l) + ", " + std::to_string(m) +
                           "); need 0 <= l <= 2 and |m| <= l");
  }
}

// Raw |Y_l^m(k_hat)| over the propagating band, before normalization.
inline RealGrid sh_profile(Shape shape, double pitch, double wavelength, int l, int m) {
  check_sh_degree(l, m);
  if (!(wavelength > 0.0)) throw invalid_argument("kernel_sh: wavelength must be positive");
  const double k = 2.0 * pi / wavelength;
  const auto f = frequency_grid(shape, pitch);
  RealGrid q(shape);
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double kt2 = f.kx[i] * f.kx[i] + f.ky[i] * f.ky[i];
    if (kt2 >= k * k) continue;
    // |(kx, ky, kz)| = k on the propagating shell.
    q[i] = std::abs(real_sh(l, m, f.kx[i] / k, f.ky[i] / k, std::sqrt(k * k - kt2) / k));
  }
  return q;
}

inline SpectralKernel kernel_sh(Shape shape, double pitch, double wavelength, int l, int m) {
  auto k = normalize_kernel(sh_profile(shape, pitch, wavelength, l, m), KernelKind::spherical_harmonic);
  k.l = l;
  k.m = m;
  return k;
}

inline SpectralKernel kernel_custom(RealGrid q) { return normalize_kernel(std::move(q), KernelKind::custom); }

// Custom profile from a grayscale PFM/PGM image or a flat little-endian
// float64 grid. The grid must match the frequency grid shape.
inline SpectralKernel load_kernel(const std::string& path, Shape shape) {
  const std::string bytes = io::read_bytes(path);
  RealGrid q;
  if (bytes.rfind("Pf", 0) == 0) {
    q = io::decode_pfm(bytes);
  } else if (bytes.rfind("P5", 0) == 0) {
    q = io::decode_pgm(bytes);
  } else {
    if (bytes.size() != shape.size() * 8) {
      throw invalid_argument("kernel '" + path + "': raw grid has " + std::to_string(bytes.size()) + " bytes, expected " +
                             std::to_string(shape.size() * 8));
    }
    q = RealGrid(shape);
    for (std::size_t i = 0; i < q.size(); ++i) {
      std::uint64_t bits = 0;
      std::memcpy(&bits, bytes.data() + 8 * i, 8);
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
      q[i] = std::bit_cast<double>(bits);
    }
  }
  if (!(q.shape() == shape)) {
    throw invalid_argument("kernel '" + path + "': shape " + std::to_string(q.rows()) + "x" + std::to_string(q.cols()) +
                           " does not match grid " + std::to_string(shape.ny) + "x" + std::to_string(shape.nx));
  }
  return kernel_custom(std::move(q));
}

enum class PhaseMode { structured, spatial };

struct PhaseDraw {
  ComplexGrid modulation;
  StreamKey key;
  PhaseMode mode = PhaseMode::structured;
};

// phi ~ U(-pi, pi) for element i of a keyed stream.
inline double phase_at(const StreamKey& key, std::uint32_t i) noexcept { return 2.0 * pi * uniform_at(key, i) - pi; }

// m = F^-1{ q e^{i phi} } for explicit per-bin phases.
inline ComplexGrid structured_modulation(const SpectralKernel& kernel, const RealGrid& phase) {
  require_same_shape(kernel.q, phase, "structured_modulation");
  ComplexGrid s(kernel.q.shape());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::polar(kernel.q[i], phase[i]);
  return centered_ifft(s);
}

inline RealGrid draw_phases(Shape shape, const StreamKey& key) {
  if (shape.size() > 0xFFFFFFFFull) throw invalid_argument("draw_phases: grid too large for the counter");
  RealGrid phi(shape);
  for (std::size_t i = 0; i < phi.size(); ++i) phi[i] = phase_at(key, static_cast<std::uint32_t>(i));
  return phi;
}

inline PhaseDraw sample_structured(const SpectralKernel& kernel, std::uint64_t seed, std::uint32_t t,
                                   std::uint32_t scope = scene_scope, std::uint32_t stream = 0) {
  const StreamKey key{seed, scope, t, stream};
  return {structured_modulation(kernel, draw_phases(kernel.q.shape(), key)), key, PhaseMode::structured};
}

inline ComplexGrid spatial_modulation(const RealGrid& phase) {
  ComplexGrid m(phase.shape());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = std::polar(1.0, phase[i]);
  return m;
}

inline PhaseDraw sample_spatial(Shape shape, std::uint64_t seed, std::uint32_t t, std::uint32_t scope = scene_scope,
                                std::uint32_t stream = 0) {
  const StreamKey key{seed, scope, t, stream};
  return {spatial_modulation(draw_phases(shape, key)), key, PhaseMode::spatial};
}

inline WaveField modulate(const WaveField& u, const ComplexGrid& m) {
  require_same_shape(u.samples, m, "modulate");
  WaveField out = u;
  for (std::size_t i = 0; i < m.size(); ++i) out.samples[i] *= m[i];
  return out;
}

inline WaveField modulate(const WaveField& u, const PhaseDraw& d) { return modulate(u, d.modulation); }

}  // namespace holosplat
