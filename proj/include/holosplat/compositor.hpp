#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "holosplat/core/parallel.hpp"
#include "holosplat/ingest.hpp"
#include "holosplat/propagation.hpp"
#include "holosplat/scene.hpp"
#include "holosplat/spectral_kernels.hpp"
#include "holosplat/wavefront.hpp"

namespace holosplat {

enum class CompositeMode { rp_structured, rp_spatial, sp_smooth };

inline const char* mode_name(CompositeMode m) {
  switch (m) {
    case CompositeMode::rp_structured: return "rp_structured";
    case CompositeMode::rp_spatial: return "rp_spatial";
    case CompositeMode::sp_smooth: return "sp_smooth";
  }
  return "?";
}

// Declarative kernel choice; materialized per channel since Y_l^m depends on wavelength.
struct KernelSpec {
  KernelKind kind = KernelKind::uniform;
  double pupil_radius = 0.0;  // rad/m
  int l = 0;
  int m = 0;
  std::optional<RealGrid> custom;  // raw profile, normalized on use
};

inline SpectralKernel build_kernel(const KernelSpec& spec, Shape shape, double pitch, double wavelength) {
  switch (spec.kind) {
    case KernelKind::uniform: return kernel_uniform(shape);
    case KernelKind::pupil: return kernel_pupil(shape, pitch, spec.pupil_radius);
    case KernelKind::spherical_harmonic: return kernel_sh(shape, pitch, wavelength, spec.l, spec.m);
    case KernelKind::custom:
      if (!spec.custom) throw config_error("kernel: custom kind without a profile");
      if (!(spec.custom->shape() == shape)) throw config_error("kernel: custom profile shape does not match the grid");
      return kernel_custom(*spec.custom);
  }
  throw config_error("kernel: unknown kind");
}

struct CompositeRequest {
  HologramScene scene;  // sorted (and optionally binned) by sort_and_bin
  CompositeMode mode = CompositeMode::rp_structured;
  KernelSpec kernel;
  std::map<std::uint32_t, KernelSpec> kernel_overrides;  // by primitive id
  std::uint32_t frames = 1;
  std::uint64_t seed = 0;
  std::vector<int> channels{0, 1, 2};
  PropagationOptions propagation;
  unsigned threads = 1;
  bool zero_phase = false;  // force phi = 0 in every draw (diagnostics)
};

inline void validate_request(const CompositeRequest& req) {
  if (req.scene.primitives.empty()) throw invalid_argument("composite: scene is empty");
  if (req.frames < 1) throw config_error("composite: frames must be >= 1");
  if (req.channels.empty()) throw config_error("composite: no channels requested");
  for (int c : req.channels) OpticsConfig::check_channel(c);
  req.scene.optics.validate();
  const bool rp = req.mode != CompositeMode::sp_smooth;
  if (!rp && req.frames != 1) {
    throw config_error("composite: sp_smooth is deterministic and requires frames = 1 (got " +
                       std::to_string(req.frames) + ")");
  }
  const DepthOrder need = rp ? DepthOrder::back_to_front : DepthOrder::front_to_back;
  if (req.scene.order != need) {
    throw invalid_argument(std::string("composite: ") + mode_name(req.mode) + " needs a " +
                           (rp ? "back_to_front" : "front_to_back") + " sorted scene");
  }
  if (rp) {
    std::set<std::uint32_t> ids;
    for (const auto& p : req.scene.primitives)
      if (!ids.insert(p.id).second) {
        throw invalid_argument("composite: duplicate primitive id " + std::to_string(p.id) + " would share phase draws");
      }
  }
  for (const auto& p : req.scene.primitives) validate_primitive(p);
}

// M(x) = sqrt(max(0, 1 - o a(x))).
inline RealGrid transmittance_mask(const PrimitiveFootprint& fp, double opacity) {
  if (!(opacity >= 0.0 && opacity <= 1.0)) throw invalid_argument("transmittance_mask: opacity outside [0,1]");
  RealGrid m(fp.grid.ny, fp.grid.nx, 1.0);
  for (std::size_t y = 0; y < fp.amplitude.rows(); ++y)
    for (std::size_t x = 0; x < fp.amplitude.cols(); ++x)
      m(y + fp.y0, x + fp.x0) = std::sqrt(std::max(0.0, 1.0 - opacity * fp.amplitude(y, x)));
  return m;
}

// Amplitude weight of a stored color value.
inline double color_weight(double c, ColorDomain domain) { return domain == ColorDomain::intensity ? std::sqrt(c) : c; }

namespace detail {

struct PlaneGroup {
  double z = 0.0;
  std::vector<std::size_t> members;
};

inline std::vector<PlaneGroup> plane_groups(const HologramScene& scene) {
  std::vector<PlaneGroup> groups;
  if (scene.layers) {
    for (const Layer& l : *scene.layers) groups.push_back({l.z, l.members});
  } else {
    for (std::size_t i = 0; i < scene.primitives.size(); ++i) groups.push_back({scene.primitives[i].mean[2], {i}});
  }
  return groups;
}

// Channel-independent state shared by all frames.
struct Prepared {
  std::vector<PrimitiveFootprint> footprints;
  std::vector<PlaneGroup> groups;
};

inline Prepared prepare(const CompositeRequest& req) {
  validate_request(req);
  Prepared p;
  p.footprints.reserve(req.scene.primitives.size());
  for (const auto& prim : req.scene.primitives) p.footprints.push_back(rasterize_gaussian(prim, req.scene.optics));
  p.groups = plane_groups(req.scene);
  return p;
}

// Kernels for one channel: index 0 is the scene-wide kernel.
struct ChannelKernels {
  std::vector<SpectralKernel> kernels;
  std::vector<std::size_t> index;  // per primitive
};

inline ChannelKernels channel_kernels(const CompositeRequest& req, int channel) {
  ChannelKernels ck;
  const auto& o = req.scene.optics;
  ck.index.assign(req.scene.primitives.size(), 0);
  if (req.mode != CompositeMode::rp_structured) return ck;
  ck.kernels.push_back(build_kernel(req.kernel, o.shape(), o.pixel_pitch, o.wavelength(channel)));
  std::map<std::uint32_t, std::size_t> built;
  for (std::size_t i = 0; i < req.scene.primitives.size(); ++i) {
    const auto it = req.kernel_overrides.find(req.scene.primitives[i].id);
    if (it == req.kernel_overrides.end()) continue;
    auto [pos, fresh] = built.try_emplace(it->first, ck.kernels.size());
    if (fresh) ck.kernels.push_back(build_kernel(it->second, o.shape(), o.pixel_pitch, o.wavelength(channel)));
    ck.index[i] = pos->second;
  }
  return ck;
}

inline WaveField rp_frame(const CompositeRequest& req, const Prepared& prep, const ChannelKernels& ck, std::uint32_t t,
                          int channel) {
  const auto& optics = req.scene.optics;
  const Shape shape = optics.shape();
  const double k = optics.wavenumber(channel);
  WaveField g = make_field(optics, channel, prep.groups.front().z);
  for (std::size_t gi = 0; gi < prep.groups.size(); ++gi) {
    const PlaneGroup& group = prep.groups[gi];
    for (std::size_t i : group.members) {
      const GaussianPrimitive& p = req.scene.primitives[i];
      const PrimitiveFootprint& fp = prep.footprints[i];
      if (fp.empty) continue;
      const double w = color_weight(p.color[static_cast<std::size_t>(channel)], req.scene.color_domain);
      const complex carrier = std::polar(1.0, k * p.mean[2]);
      const StreamKey key{req.seed, p.id, t, static_cast<std::uint32_t>(channel)};

      if (req.mode == CompositeMode::rp_structured) {
        // The whole emitted wavefront is multiplied by F^-1{Q e^{i phi}}.
        const SpectralKernel& q = ck.kernels[ck.index[i]];
        const ComplexGrid m = structured_modulation(q, req.zero_phase ? RealGrid(shape) : draw_phases(shape, key));
        for (std::size_t y = 0; y < fp.amplitude.rows(); ++y)
          for (std::size_t x = 0; x < fp.amplitude.cols(); ++x) {
            const std::size_t yy = y + fp.y0, xx = x + fp.x0;
            const double a = fp.amplitude(y, x);
            g.samples(yy, xx) = std::sqrt(std::max(0.0, 1.0 - p.opacity * a)) * g.samples(yy, xx) +
                                w * std::sqrt(p.opacity * a) * carrier * m(yy, xx);
          }
      } else {
        for (std::size_t y = 0; y < fp.amplitude.rows(); ++y)
          for (std::size_t x = 0; x < fp.amplitude.cols(); ++x) {
            const std::size_t yy = y + fp.y0, xx = x + fp.x0;
            const double a = fp.amplitude(y, x);
            const double phi =
                req.zero_phase ? 0.0 : phase_at(key, static_cast<std::uint32_t>(yy * shape.nx + xx));
            g.samples(yy, xx) = std::sqrt(std::max(0.0, 1.0 - p.opacity * a)) * g.samples(yy, xx) +
                                w * std::sqrt(p.opacity * a) * carrier * std::polar(1.0, phi);
          }
      }
    }
    const double next_z = gi + 1 < prep.groups.size() ? prep.groups[gi + 1].z : optics.slm_z;
    const double dz = next_z - group.z;
    if (dz != 0.0) {
      g = propagate(g, dz, req.propagation);
    }
    g.plane_z = next_z;
  }
  return g;
}

// SP emission amplitudes w o a T on each footprint's bounding box, with the
// on-axis transmittance T accumulated in front-to-back order.
inline std::vector<RealGrid> sp_weights(const CompositeRequest& req, const Prepared& prep, int channel) {
  const Shape shape = req.scene.optics.shape();
  RealGrid trans(shape.ny, shape.nx, 1.0);
  std::vector<RealGrid> out;
  out.reserve(req.scene.primitives.size());
  for (std::size_t i = 0; i < req.scene.primitives.size(); ++i) {
    const GaussianPrimitive& p = req.scene.primitives[i];
    const PrimitiveFootprint& fp = prep.footprints[i];
    const double w = color_weight(p.color[static_cast<std::size_t>(channel)], req.scene.color_domain);
    RealGrid e(fp.amplitude.shape());
    for (std::size_t y = 0; y < fp.amplitude.rows(); ++y)
      for (std::size_t x = 0; x < fp.amplitude.cols(); ++x) {
        const std::size_t yy = y + fp.y0, xx = x + fp.x0;
        const double oa = p.opacity * fp.amplitude(y, x);
        e(y, x) = w * oa * trans(yy, xx);
        trans(yy, xx) *= 1.0 - oa;
      }
    out.push_back(std::move(e));
  }
  return out;
}

inline void add_sp_emission(ComplexGrid& plane, const RealGrid& weight, const PrimitiveFootprint& fp, complex carrier) {
  for (std::size_t y = 0; y < weight.rows(); ++y)
    for (std::size_t x = 0; x < weight.cols(); ++x)
      if (weight(y, x) != 0.0) plane(y + fp.y0, x + fp.x0) += weight(y, x) * carrier;
}

}  // namespace detail

inline WaveField composite_rp_frame(const CompositeRequest& req, std::uint32_t t, int channel) {
  if (req.mode == CompositeMode::sp_smooth) throw invalid_argument("composite_rp_frame: request is sp_smooth");
  const auto prep = detail::prepare(req);
  return detail::rp_frame(req, prep, detail::channel_kernels(req, channel), t, channel);
}

// Alpha wave blending as a direct sum: u = sum_i P(w_i o_i a_i T_i e^{ikz_i}; slm - z_i).
// With layers, members of a layer are summed on the layer plane first.
inline WaveField composite_sp(const CompositeRequest& req, int channel) {
  if (req.mode != CompositeMode::sp_smooth) throw invalid_argument("composite_sp: request is not sp_smooth");
  const auto prep = detail::prepare(req);
  const auto& optics = req.scene.optics;
  const double k = optics.wavenumber(channel);
  const auto weights = detail::sp_weights(req, prep, channel);
  WaveField out = make_field(optics, channel, optics.slm_z);
  for (const auto& group : prep.groups) {
    WaveField plane = make_field(optics, channel, group.z);
    for (std::size_t i : group.members) {
      detail::add_sp_emission(plane.samples, weights[i], prep.footprints[i],
                              std::polar(1.0, k * req.scene.primitives[i].mean[2]));
    }
    const WaveField at_slm = propagate(plane, optics.slm_z - group.z, req.propagation);
    for (std::size_t j = 0; j < out.samples.size(); ++j) out.samples[j] += at_slm.samples[j];
  }
  return out;
}

// Same field as composite_sp evaluated back-to-front as g <- P(g + e_i; dz).
inline WaveField composite_sp_recurrence(const CompositeRequest& req, int channel) {
  if (req.mode != CompositeMode::sp_smooth) throw invalid_argument("composite_sp: request is not sp_smooth");
  const auto prep = detail::prepare(req);
  const auto& optics = req.scene.optics;
  const double k = optics.wavenumber(channel);
  const auto weights = detail::sp_weights(req, prep, channel);
  const auto& groups = prep.groups;
  WaveField g = make_field(optics, channel, groups.back().z);
  for (std::size_t gi = groups.size(); gi-- > 0;) {
    for (std::size_t i : groups[gi].members) {
      detail::add_sp_emission(g.samples, weights[i], prep.footprints[i],
                              std::polar(1.0, k * req.scene.primitives[i].mean[2]));
    }
    const double next_z = gi > 0 ? groups[gi - 1].z : optics.slm_z;
    if (next_z != groups[gi].z) g = propagate(g, next_z - groups[gi].z, req.propagation);
    g.plane_z = next_z;
  }
  return g;
}

struct TimeMultiplexedHologram {
  std::vector<int> channels;
  std::vector<std::vector<WaveField>> frames;  // [channel slot][t]
  CompositeMode mode = CompositeMode::rp_structured;
  std::uint64_t seed = 0;
  std::uint64_t scene_digest = 0;

  std::size_t frame_count() const { return frames.empty() ? 0 : frames.front().size(); }
  Shape shape() const { return frames.at(0).at(0).shape(); }
};

// FNV-1a over the geometry, colors and optics that enter the hologram.
inline std::uint64_t scene_digest(const HologramScene& s) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) h = (h ^ b[i]) * 1099511628211ull;
  };
  auto mix_d = [&mix](double v) { mix(&v, sizeof v); };
  for (const auto& p : s.primitives) {
    for (double v : p.mean) mix_d(v);
    for (const auto& row : p.rot)
      for (double v : row) mix_d(v);
    for (double v : p.scales) mix_d(v);
    mix_d(p.opacity);
    for (double v : p.color) mix_d(v);
    mix(&p.id, sizeof p.id);
  }
  if (s.layers) {
    for (const auto& l : *s.layers) {
      mix_d(l.z);
      for (std::size_t m : l.members) mix(&m, sizeof m);
    }
  }
  mix_d(s.optics.pixel_pitch);
  for (double w : s.optics.wavelengths) mix_d(w);
  mix(&s.optics.grid_ny, sizeof s.optics.grid_ny);
  mix(&s.optics.grid_nx, sizeof s.optics.grid_nx);
  mix_d(s.optics.slm_z);
  const int domain = static_cast<int>(s.color_domain);
  mix(&domain, sizeof domain);
  return h;
}

// Frames t = 1..T per channel. Each (channel, t) is an independent work unit.
inline TimeMultiplexedHologram time_multiplex(const CompositeRequest& req) {
  const auto prep = detail::prepare(req);
  TimeMultiplexedHologram h;
  h.channels = req.channels;
  h.mode = req.mode;
  h.seed = req.seed;
  h.scene_digest = scene_digest(req.scene);
  h.frames.assign(req.channels.size(), std::vector<WaveField>(req.frames));

  if (req.mode == CompositeMode::sp_smooth) {
    parallel_for(req.channels.size(), req.threads,
                 [&](std::size_t c) { h.frames[c][0] = composite_sp(req, req.channels[c]); });
    return h;
  }
  std::vector<detail::ChannelKernels> kernels;
  for (int c : req.channels) kernels.push_back(detail::channel_kernels(req, c));
  const std::size_t units = req.channels.size() * req.frames;
  parallel_for(units, req.threads, [&](std::size_t u) {
    const std::size_t c = u / req.frames;
    const auto t = static_cast<std::uint32_t>(u % req.frames);
    h.frames[c][t] = detail::rp_frame(req, prep, kernels[c], t + 1, req.channels[c]);
  });
  return h;
}

// Convenience: sort (and bin) a scene for the given mode.
inline HologramScene order_for(const HologramScene& scene, CompositeMode mode,
                               std::optional<std::size_t> n_layers = std::nullopt) {
  return sort_and_bin(scene, mode == CompositeMode::sp_smooth ? DepthOrder::front_to_back : DepthOrder::back_to_front,
                      n_layers);
}

}  // namespace holosplat
