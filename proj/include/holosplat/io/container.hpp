#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "holosplat/compositor.hpp"
#include "holosplat/io/image.hpp"

namespace holosplat::io {

// Hologram container, all little-endian:
//   "HSPLHOLO" u32 version, u32 ny, u32 nx, u32 channels, u32 frames, u32 mode,
//   u64 seed, u64 scene digest, f64 pitch, f64 plane_z,
//   per channel: i32 index, f64 wavelength
// then float32 (re, im) pairs, row-major, for each channel and each frame.
inline constexpr char container_magic[8] = {'H', 'S', 'P', 'L', 'H', 'O', 'L', 'O'};
inline constexpr std::uint32_t container_version = 1;

namespace container_detail {

template <class T>
void put(std::string& out, T v) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  U bits = std::bit_cast<U>(v);
  if constexpr (std::endian::native == std::endian::big) bits = sizeof(U) == 8 ? __builtin_bswap64(bits) : __builtin_bswap32(bits);
  char b[sizeof(U)];
  std::memcpy(b, &bits, sizeof(U));
  out.append(b, sizeof(U));
}

struct Reader {
  const std::string& bytes;
  std::size_t pos = 0;

  template <class T>
  T get(const char* what) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    if (bytes.size() - pos < sizeof(U)) {
      throw Error(ErrorCategory::parse, std::string("container: truncated at ") + what + " (byte " + std::to_string(pos) + ")");
    }
    U bits;
    std::memcpy(&bits, bytes.data() + pos, sizeof(U));
    if constexpr (std::endian::native == std::endian::big) bits = sizeof(U) == 8 ? __builtin_bswap64(bits) : __builtin_bswap32(bits);
    pos += sizeof(U);
    return std::bit_cast<T>(bits);
  }
};

}  // namespace container_detail

inline std::string encode_hologram(const TimeMultiplexedHologram& h) {
  using container_detail::put;
  if (h.frames.empty() || h.frames.size() != h.channels.size()) throw invalid_argument("container: channel list does not match frames");
  const std::size_t t = h.frame_count();
  if (t == 0) throw invalid_argument("container: hologram has no frames");
  const WaveField& first = h.frames[0][0];
  const Shape s = first.shape();
  for (std::size_t c = 0; c < h.frames.size(); ++c) {
    if (h.frames[c].size() != t) throw invalid_argument("container: channels carry different frame counts");
    for (const auto& f : h.frames[c]) {
      if (!(f.shape() == s) || f.pitch != first.pitch || f.plane_z != first.plane_z ||
          f.wavelength != h.frames[c][0].wavelength) {
        throw invalid_argument("container: frames disagree on shape, pitch, plane or wavelength");
      }
    }
  }
  std::string out(container_magic, 8);
  put(out, container_version);
  put(out, static_cast<std::uint32_t>(s.ny));
  put(out, static_cast<std::uint32_t>(s.nx));
  put(out, static_cast<std::uint32_t>(h.channels.size()));
  put(out, static_cast<std::uint32_t>(t));
  put(out, static_cast<std::uint32_t>(h.mode));
  put(out, h.seed);
  put(out, h.scene_digest);
  put(out, first.pitch);
  put(out, first.plane_z);
  for (std::size_t c = 0; c < h.channels.size(); ++c) {
    put(out, static_cast<std::int32_t>(h.channels[c]));
    put(out, h.frames[c][0].wavelength);
  }
  out.reserve(out.size() + h.channels.size() * t * s.size() * 8);
  for (const auto& channel : h.frames)
    for (const auto& f : channel)
      for (const complex& v : f.samples) {
        put(out, static_cast<float>(v.real()));
        put(out, static_cast<float>(v.imag()));
      }
  return out;
}

inline TimeMultiplexedHologram decode_hologram(const std::string& bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), container_magic, 8) != 0) {
    throw Error(ErrorCategory::parse, "container: bad magic, not a hologram container");
  }
  container_detail::Reader r{bytes, 8};
  const auto version = r.get<std::uint32_t>("version");
  if (version != container_version) {
    throw Error(ErrorCategory::parse, "container: unsupported version " + std::to_string(version));
  }
  const std::size_t ny = r.get<std::uint32_t>("ny");
  const std::size_t nx = r.get<std::uint32_t>("nx");
  const std::size_t nc = r.get<std::uint32_t>("channel count");
  const std::size_t nt = r.get<std::uint32_t>("frame count");
  const auto mode = r.get<std::uint32_t>("mode");
  if (ny == 0 || nx == 0 || nc == 0 || nt == 0) throw Error(ErrorCategory::parse, "container: zero dimension in header");
  if (mode > static_cast<std::uint32_t>(CompositeMode::sp_smooth)) {
    throw Error(ErrorCategory::parse, "container: unknown mode " + std::to_string(mode));
  }
  TimeMultiplexedHologram h;
  h.mode = static_cast<CompositeMode>(mode);
  h.seed = r.get<std::uint64_t>("seed");
  h.scene_digest = r.get<std::uint64_t>("scene digest");
  const double pitch = r.get<double>("pitch");
  const double plane_z = r.get<double>("plane_z");
  std::vector<double> wavelengths(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    h.channels.push_back(r.get<std::int32_t>("channel index"));
    wavelengths[c] = r.get<double>("wavelength");
  }
  // Checked in 64-bit before allocating anything.
  const std::uint64_t payload = static_cast<std::uint64_t>(nc) * nt * ny * nx * 8;
  if (bytes.size() - r.pos != payload) {
    throw Error(ErrorCategory::parse, "container: payload is " + std::to_string(bytes.size() - r.pos) + " bytes, header implies " +
                                          std::to_string(payload));
  }
  h.frames.assign(nc, std::vector<WaveField>(nt));
  for (std::size_t c = 0; c < nc; ++c)
    for (std::size_t t = 0; t < nt; ++t) {
      WaveField f{ComplexGrid(ny, nx), pitch, wavelengths[c], plane_z};
      for (complex& v : f.samples) {
        const float re = r.get<float>("sample");
        const float im = r.get<float>("sample");
        v = complex(re, im);
      }
      h.frames[c][t] = std::move(f);
    }
  return h;
}

inline void write_hologram(const std::string& path, const TimeMultiplexedHologram& h) { write_bytes(path, encode_hologram(h)); }

inline TimeMultiplexedHologram read_hologram(const std::string& path) { return decode_hologram(read_bytes(path)); }

// Container against the optics the caller expects to be working with.
inline void check_hologram_matches(const TimeMultiplexedHologram& h, const OpticsConfig& optics, const std::string& where) {
  const Shape s = h.shape();
  if (!(s == optics.shape())) {
    throw config_error(where + ": container grid " + std::to_string(s.ny) + "x" + std::to_string(s.nx) + " but config grid " +
                       std::to_string(optics.grid_ny) + "x" + std::to_string(optics.grid_nx));
  }
  const WaveField& f = h.frames[0][0];
  if (std::abs(f.pitch - optics.pixel_pitch) > 1e-9 * optics.pixel_pitch) {
    throw config_error(where + ": container pitch " + std::to_string(f.pitch) + " m differs from config");
  }
  for (std::size_t c = 0; c < h.channels.size(); ++c) {
    const double want = optics.wavelength(h.channels[c]);
    if (std::abs(h.frames[c][0].wavelength - want) > 1e-9 * want) {
      throw config_error(where + ": container wavelength for channel " + std::to_string(h.channels[c]) + " differs from config");
    }
  }
}

}  // namespace holosplat::io
