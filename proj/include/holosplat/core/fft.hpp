#pragma once

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <tuple>

#include "holosplat/core/field.hpp"

namespace holosplat {

namespace detail {

// FFTW planning is not thread-safe; execution with the new-array interface is.
// Plans are created once per (shape, direction) and live for the process.
class FftPlanCache {
 public:
  static FftPlanCache& instance() {
    static FftPlanCache cache;
    return cache;
  }

  fftw_plan plan(Shape shape, int sign) {
    std::lock_guard lock(mutex_);
    const auto key = std::make_tuple(shape.ny, shape.nx, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    auto* scratch = fftw_alloc_complex(shape.size());
    fftw_plan p = fftw_plan_dft_2d(static_cast<int>(shape.ny), static_cast<int>(shape.nx), scratch,
                                   scratch, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(scratch);
    if (p == nullptr) throw numeric_error("fftw: plan creation failed");
    plans_.emplace(key, p);
    return p;
  }

 private:
  FftPlanCache() = default;
  std::mutex mutex_;
  std::map<std::tuple<std::size_t, std::size_t, int>, fftw_plan> plans_;
};

inline void execute_in_place(ComplexGrid& g, int sign) {
  fftw_plan p = FftPlanCache::instance().plan(g.shape(), sign);
  auto* data = reinterpret_cast<fftw_complex*>(g.data());
  fftw_execute_dft(p, data, data);
}

// out[j] = in[(j + offset) mod n] along both axes.
inline ComplexGrid cyclic_shift(const ComplexGrid& in, std::size_t offset_y, std::size_t offset_x) {
  const Shape s = in.shape();
  ComplexGrid out(s);
  for (std::size_t y = 0; y < s.ny; ++y) {
    const std::size_t sy = (y + offset_y) % s.ny;
    for (std::size_t x = 0; x < s.nx; ++x) out(y, x) = in(sy, (x + offset_x) % s.nx);
  }
  return out;
}

}  // namespace detail

inline ComplexGrid fftshift(const ComplexGrid& g) {
  const Shape s = g.shape();
  return detail::cyclic_shift(g, s.ny - s.ny / 2, s.nx - s.nx / 2);
}

inline ComplexGrid ifftshift(const ComplexGrid& g) {
  const Shape s = g.shape();
  return detail::cyclic_shift(g, s.ny / 2, s.nx / 2);
}

// Unitary, centered forward DFT: sum_x u(x) e^{-i k.x} / sqrt(N).
inline ComplexGrid centered_fft(const ComplexGrid& g) {
  ComplexGrid work = ifftshift(g);
  detail::execute_in_place(work, FFTW_FORWARD);
  const double scale = 1.0 / std::sqrt(static_cast<double>(g.size()));
  for (auto& v : work) v *= scale;
  return fftshift(work);
}

inline ComplexGrid centered_ifft(const ComplexGrid& g) {
  ComplexGrid work = ifftshift(g);
  detail::execute_in_place(work, FFTW_BACKWARD);
  const double scale = 1.0 / std::sqrt(static_cast<double>(g.size()));
  for (auto& v : work) v *= scale;
  return fftshift(work);
}

inline SpectrumField spectrum(const WaveField& f) {
  return SpectrumField{centered_fft(f.samples), f.pitch, f.wavelength, f.plane_z};
}

inline WaveField inverse_spectrum(const SpectrumField& s) {
  return WaveField{centered_ifft(s.samples), s.pitch, s.wavelength, s.plane_z};
}

}  // namespace holosplat
