#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "holosplat/compositor.hpp"
#include "holosplat/core/fft.hpp"
#include "holosplat/core/parallel.hpp"
#include "holosplat/propagation.hpp"

namespace holosplat {

struct FocalStack {
  std::vector<double> depths;
  std::vector<int> channels;
  std::vector<std::vector<RealGrid>> slices;  // [channel slot][depth]
  std::size_t frames_used = 0;
};

inline void check_depths(const std::vector<double>& depths) {
  if (depths.empty()) throw invalid_argument("focal_stack: depth list is empty");
  for (std::size_t i = 0; i < depths.size(); ++i) {
    if (!std::isfinite(depths[i])) throw invalid_argument("focal_stack: depth is not finite");
    if (i > 0 && !(depths[i] > depths[i - 1])) throw invalid_argument("focal_stack: depths must be strictly increasing");
  }
}

// Mean over frames of |P(u_t; z - plane_z)|^2 for one depth z.
inline RealGrid refocused_intensity(const std::vector<WaveField>& frames, double z, const PropagationOptions& opts = {}) {
  if (frames.empty()) throw invalid_argument("refocused_intensity: no frames");
  RealGrid acc(frames.front().shape());
  for (const WaveField& f : frames) {
    require_same_shape(acc, f.samples, "refocused_intensity");
    const WaveField r = propagate(f, z - f.plane_z, opts);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += std::norm(r.samples[i]);
  }
  const double inv = 1.0 / static_cast<double>(frames.size());
  for (double& v : acc) v *= inv;
  return acc;
}

inline FocalStack focal_stack(const TimeMultiplexedHologram& h, const std::vector<double>& depths,
                              const PropagationOptions& opts = {}, unsigned threads = 1) {
  check_depths(depths);
  if (h.frames.empty() || h.frame_count() == 0) throw invalid_argument("focal_stack: hologram has no frames");
  FocalStack s;
  s.depths = depths;
  s.channels = h.channels;
  s.frames_used = h.frame_count();
  s.slices.assign(h.frames.size(), std::vector<RealGrid>(depths.size()));
  parallel_for(h.frames.size() * depths.size(), threads, [&](std::size_t u) {
    const std::size_t c = u / depths.size(), d = u % depths.size();
    s.slices[c][d] = refocused_intensity(h.frames[c], depths[d], opts);
  });
  return s;
}

// Symmetric Hann taper w[j] = sin^2(pi (j + 1/2) / W).
inline std::vector<double> hann_window(std::size_t w) {
  std::vector<double> out(w);
  for (std::size_t j = 0; j < w; ++j) {
    const double s = std::sin(pi * (static_cast<double>(j) + 0.5) / static_cast<double>(w));
    out[j] = s * s;
  }
  return out;
}

struct LightFieldOptions {
  std::size_t window = 64;
  std::size_t stride = 32;
  std::size_t views_y = 10;
  std::size_t views_x = 10;
  double refocus = 0.0;  // propagate frames by this distance before analysis
  PropagationOptions propagation;
  unsigned threads = 1;
};

// views[vy * views_x + vx] is an image over window positions.
struct LightField {
  std::size_t views_y = 0;
  std::size_t views_x = 0;
  std::size_t window = 0;
  std::size_t stride = 0;
  std::size_t positions_y = 0;
  std::size_t positions_x = 0;
  std::vector<RealGrid> views;
  std::vector<double> view_ky;  // rad/m, cell centers
  std::vector<double> view_kx;

  const RealGrid& view(std::size_t vy, std::size_t vx) const { return views.at(vy * views_x + vx); }

  double view_energy(std::size_t vy, std::size_t vx) const {
    double e = 0.0;
    for (double v : view(vy, vx)) e += v;
    return e;
  }
};

inline std::size_t window_positions(std::size_t n, std::size_t window, std::size_t stride) {
  return (n - window) / stride + 1;
}

inline void check_lf_options(Shape shape, const LightFieldOptions& o) {
  if (o.window < 1 || o.window > shape.ny || o.window > shape.nx) {
    throw invalid_argument("light_field: window " + std::to_string(o.window) + " does not fit the grid");
  }
  if (o.stride < 1) throw invalid_argument("light_field: stride must be >= 1");
  if (o.views_y < 1 || o.views_x < 1 || o.views_y > o.window || o.views_x > o.window) {
    throw invalid_argument("light_field: view grid must be between 1 and the window size");
  }
}

// View index of STFT bin b: V equal frequency cells with the DC cell at V/2.
// Cells are taken modulo V, so for even V the outermost cell straddles +-Nyquist.
inline std::size_t view_of_bin(std::size_t b, std::size_t w, std::size_t v) {
  const auto o = static_cast<long long>(b) - static_cast<long long>(w / 2);
  const auto num = 2 * o * static_cast<long long>(v) + static_cast<long long>(w);
  const auto den = 2 * static_cast<long long>(w);
  long long cell = num / den;
  if (num % den != 0 && num < 0) --cell;
  cell += static_cast<long long>(v / 2);
  const auto vv = static_cast<long long>(v);
  return static_cast<std::size_t>(((cell % vv) + vv) % vv);
}

// Hann-windowed STFT power with the W x W bins pooled into a views_y x views_x
// grid of frequency cells. Averaged over frames.
inline LightField light_field_stft(const std::vector<WaveField>& frames, const LightFieldOptions& o) {
  if (frames.empty()) throw invalid_argument("light_field: no frames");
  const Shape shape = frames.front().shape();
  check_lf_options(shape, o);
  const double pitch = frames.front().pitch;
  const std::size_t w = o.window;
  LightField lf;
  lf.views_y = o.views_y;
  lf.views_x = o.views_x;
  lf.window = w;
  lf.stride = o.stride;
  lf.positions_y = window_positions(shape.ny, w, o.stride);
  lf.positions_x = window_positions(shape.nx, w, o.stride);
  lf.views.assign(o.views_y * o.views_x, RealGrid(lf.positions_y, lf.positions_x));

  std::vector<std::size_t> bin_vy(w), bin_vx(w);
  for (std::size_t b = 0; b < w; ++b) {
    bin_vy[b] = view_of_bin(b, w, o.views_y);
    bin_vx[b] = view_of_bin(b, w, o.views_x);
  }
  const double dk = 2.0 * pi / (static_cast<double>(w) * pitch);
  for (std::size_t v = 0; v < o.views_y; ++v)
    lf.view_ky.push_back((static_cast<double>(v) - static_cast<double>(o.views_y / 2)) * static_cast<double>(w) /
                         static_cast<double>(o.views_y) * dk);
  for (std::size_t v = 0; v < o.views_x; ++v)
    lf.view_kx.push_back((static_cast<double>(v) - static_cast<double>(o.views_x / 2)) * static_cast<double>(w) /
                         static_cast<double>(o.views_x) * dk);

  const auto hann = hann_window(w);
  const double inv_t = 1.0 / static_cast<double>(frames.size());
  std::vector<WaveField> fields;
  fields.reserve(frames.size());
  for (const auto& f : frames) {
    require_same_shape(frames.front().samples, f.samples, "light_field");
    fields.push_back(o.refocus == 0.0 ? f : propagate(f, o.refocus, o.propagation));
  }

  const std::size_t n_pos = lf.positions_y * lf.positions_x;
  parallel_for(n_pos, o.threads, [&](std::size_t pos) {
    const std::size_t py = pos / lf.positions_x, px = pos % lf.positions_x;
    const std::size_t y0 = py * o.stride, x0 = px * o.stride;
    std::vector<double> pooled(o.views_y * o.views_x, 0.0);
    ComplexGrid patch(w, w);
    for (const WaveField& f : fields) {
      for (std::size_t y = 0; y < w; ++y)
        for (std::size_t x = 0; x < w; ++x) patch(y, x) = f.samples(y0 + y, x0 + x) * (hann[y] * hann[x]);
      const ComplexGrid spec = centered_fft(patch);
      for (std::size_t y = 0; y < w; ++y)
        for (std::size_t x = 0; x < w; ++x) pooled[bin_vy[y] * o.views_x + bin_vx[x]] += std::norm(spec(y, x));
    }
    for (std::size_t v = 0; v < pooled.size(); ++v) lf.views[v](py, px) = pooled[v] * inv_t;
  });
  return lf;
}

inline LightField light_field_stft(const TimeMultiplexedHologram& h, std::size_t channel_slot,
                                   const LightFieldOptions& o) {
  return light_field_stft(h.frames.at(channel_slot), o);
}

// Sum over window positions of sum_x |u|^2 w(x - x0)^2; equals the total STFT energy.
inline double window_weighted_energy(const std::vector<WaveField>& frames, const LightFieldOptions& o) {
  const Shape shape = frames.front().shape();
  check_lf_options(shape, o);
  const auto hann = hann_window(o.window);
  RealGrid weight(shape);
  const std::size_t py = window_positions(shape.ny, o.window, o.stride);
  const std::size_t px = window_positions(shape.nx, o.window, o.stride);
  for (std::size_t a = 0; a < py; ++a)
    for (std::size_t b = 0; b < px; ++b)
      for (std::size_t y = 0; y < o.window; ++y)
        for (std::size_t x = 0; x < o.window; ++x) {
          const double h = hann[y] * hann[x];
          weight(a * o.stride + y, b * o.stride + x) += h * h;
        }
  double e = 0.0;
  for (const auto& f : frames) {
    const WaveField g = o.refocus == 0.0 ? f : propagate(f, o.refocus, o.propagation);
    for (std::size_t i = 0; i < weight.size(); ++i) e += std::norm(g.samples[i]) * weight[i];
  }
  return e / static_cast<double>(frames.size());
}

// One view at an explicit spatial frequency k0 (rad/m): |sum_x u w e^{-i k0 x}|^2
// per window position, averaged over frames. Scaled like the unitary FFT.
inline RealGrid stft_view(const std::vector<WaveField>& frames, std::size_t window, std::size_t stride, double k0y,
                          double k0x) {
  if (frames.empty()) throw invalid_argument("stft_view: no frames");
  const Shape shape = frames.front().shape();
  LightFieldOptions o;
  o.window = window;
  o.stride = stride;
  o.views_y = o.views_x = 1;
  check_lf_options(shape, o);
  const double nyq = pi / frames.front().pitch;
  if (std::abs(k0x) > nyq || std::abs(k0y) > nyq) {
    throw invalid_argument("stft_view: view frequency beyond Nyquist (" + std::to_string(nyq) + " rad/m)");
  }
  const double pitch = frames.front().pitch;
  const auto hann = hann_window(window);
  const std::size_t ny = window_positions(shape.ny, window, stride), nx = window_positions(shape.nx, window, stride);
  RealGrid out(ny, nx);
  const double scale = 1.0 / (static_cast<double>(window) * static_cast<double>(window) * static_cast<double>(frames.size()));
  for (const auto& f : frames)
    for (std::size_t py = 0; py < ny; ++py)
      for (std::size_t px = 0; px < nx; ++px) {
        complex acc{};
        for (std::size_t y = 0; y < window; ++y) {
          const std::size_t yy = py * stride + y;
          for (std::size_t x = 0; x < window; ++x) {
            const std::size_t xx = px * stride + x;
            const double ph = -(k0x * axis_coordinate(xx, shape.nx, pitch) + k0y * axis_coordinate(yy, shape.ny, pitch));
            acc += f.samples(yy, xx) * (hann[y] * hann[x]) * std::polar(1.0, ph);
          }
        }
        out(py, px) += std::norm(acc) * scale;
      }
  return out;
}

// Epipolar image along window row `row`: rows are horizontal window positions,
// columns are horizontal views taken at the central vertical view.
inline RealGrid epipolar(const LightField& lf, std::size_t row) {
  if (row >= lf.positions_y) {
    throw invalid_argument("epipolar: row " + std::to_string(row) + " outside [0, " + std::to_string(lf.positions_y) + ")");
  }
  const std::size_t vy = lf.views_y / 2;
  RealGrid out(lf.positions_x, lf.views_x);
  for (std::size_t vx = 0; vx < lf.views_x; ++vx)
    for (std::size_t x = 0; x < lf.positions_x; ++x) out(x, vx) = lf.view(vy, vx)(row, x);
  return out;
}

struct Region {
  std::size_t y0 = 0;
  std::size_t x0 = 0;
  std::size_t height = 0;
  std::size_t width = 0;
};

// sigma / mean of the intensity over a rectangle.
inline double speckle_contrast(const RealGrid& img, const Region& r) {
  if (r.height == 0 || r.width == 0) throw invalid_argument("speckle_contrast: empty region");
  if (r.y0 + r.height > img.rows() || r.x0 + r.width > img.cols()) {
    throw invalid_argument("speckle_contrast: region outside the image");
  }
  double s = 0.0, s2 = 0.0;
  for (std::size_t y = r.y0; y < r.y0 + r.height; ++y)
    for (std::size_t x = r.x0; x < r.x0 + r.width; ++x) {
      s += img(y, x);
      s2 += img(y, x) * img(y, x);
    }
  const double n = static_cast<double>(r.height * r.width);
  const double mean = s / n;
  if (mean == 0.0) throw numeric_error("speckle_contrast: region has zero mean");
  return std::sqrt(std::max(0.0, s2 / n - mean * mean)) / mean;
}

}  // namespace holosplat
