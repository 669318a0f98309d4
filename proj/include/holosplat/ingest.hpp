#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include "holosplat/ply.hpp"
#include "holosplat/scene.hpp"
#include "holosplat/wavefront.hpp"

namespace holosplat {

inline constexpr double sh_c0 = 0.28209479177387814;  // Y_0^0

// Storage activations: logistic opacity, exp scales, normalized quaternion,
// DC spherical harmonic color. Output stays in scene units.
inline GaussianPrimitive activate(const RawSplat& raw, std::uint32_t id = 0) {
  GaussianPrimitive p;
  p.id = id;
  p.mean = {raw.position[0], raw.position[1], raw.position[2]};
  p.opacity = 1.0 / (1.0 + std::exp(-raw.opacity_logit));

  const auto& q = raw.rotation_quat;
  const double qn = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
  if (!(qn > 0.0) || !std::isfinite(qn)) {
    throw numeric_error("splat " + std::to_string(id) + ": quaternion is zero or not finite");
  }
  const Mat3 r = quaternion_to_rotation(q[0] / qn, q[1] / qn, q[2] / qn, q[3] / qn);

  std::array<double, 3> s{std::exp(raw.log_scales[0]), std::exp(raw.log_scales[1]),
                          raw.scale_count == 3 ? std::exp(raw.log_scales[2]) : 0.0};
  // Drop the thinnest axis; a cyclic column permutation keeps det(R) = +1.
  int drop = 2;
  if (raw.scale_count == 3) {
    drop = static_cast<int>(std::min_element(s.begin(), s.end()) - s.begin());
  }
  const int a = (drop + 1) % 3;
  const int b = (drop + 2) % 3;
  for (int row = 0; row < 3; ++row) {
    p.rot[row] = {r[row][a], r[row][b], r[row][drop]};
  }
  p.scales = {s[a], s[b]};

  for (int c = 0; c < 3; ++c) p.color[c] = std::max(0.0, raw.sh_dc[c] * sh_c0 + 0.5);

  auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(p.mean.begin(), p.mean.end(), finite) || !finite(p.opacity) ||
      !std::all_of(p.scales.begin(), p.scales.end(), finite) || !std::all_of(p.color.begin(), p.color.end(), finite)) {
    throw numeric_error("splat " + std::to_string(id) + ": activation produced non-finite values");
  }
  if (!(p.scales[0] > 0.0) || !(p.scales[1] > 0.0)) {
    throw numeric_error("splat " + std::to_string(id) + ": in-plane scale underflowed to zero");
  }
  return p;
}

// Scene-to-hologram transform: rigid view transform, uniform lateral scale,
// and an affine depth remap measured from the SLM plane.
struct SceneMapping {
  Mat3 view_rotation = identity3();
  Vec3 view_translation{0.0, 0.0, 0.0};
  double lateral_scale = 1.0;  // meters per scene unit
  double z_near_scene = 0.0;
  double z_far_scene = 1.0;
  double z_near_holo = 0.01;
  double z_far_holo = 0.10;
  double cull_margin = 0.0;  // meters beyond the aperture edge

  void validate() const {
    if (!(lateral_scale > 0.0) || !std::isfinite(lateral_scale)) {
      throw config_error("mapping: lateral scale must be positive");
    }
    if (!(z_far_scene > z_near_scene)) throw config_error("mapping: scene z range is empty or inverted");
    if (!(z_far_holo > z_near_holo)) throw config_error("mapping: hologram z range is empty or inverted");
    if (!(cull_margin >= 0.0)) throw config_error("mapping: cull margin must be >= 0");
  }
};

// True when the 3-sigma lateral footprint of `p` touches the aperture grown by `margin`.
inline bool overlaps_aperture(const GaussianPrimitive& p, const OpticsConfig& optics, double margin) {
  const Mat2 c = project_covariance(p, optics.pixel_pitch);
  const double half_x = 0.5 * static_cast<double>(optics.grid_nx) * optics.pixel_pitch + margin;
  const double half_y = 0.5 * static_cast<double>(optics.grid_ny) * optics.pixel_pitch + margin;
  return std::abs(p.mean[0]) - 3.0 * std::sqrt(c[0][0]) <= half_x &&
         std::abs(p.mean[1]) - 3.0 * std::sqrt(c[1][1]) <= half_y;
}

inline HologramScene to_hologram_space(const std::vector<GaussianPrimitive>& prims, const OpticsConfig& optics,
                                       const SceneMapping& mapping) {
  mapping.validate();
  optics.validate();
  const double z_gain = (mapping.z_far_holo - mapping.z_near_holo) / (mapping.z_far_scene - mapping.z_near_scene);
  HologramScene scene;
  scene.optics = optics;
  for (const GaussianPrimitive& src : prims) {
    GaussianPrimitive p = src;
    Vec3 cam = matvec(mapping.view_rotation, src.mean);
    for (int i = 0; i < 3; ++i) cam[i] += mapping.view_translation[i];
    p.mean = {cam[0] * mapping.lateral_scale, cam[1] * mapping.lateral_scale,
              mapping.z_near_holo + (cam[2] - mapping.z_near_scene) * z_gain};
    p.rot = matmul(mapping.view_rotation, src.rot);
    p.scales = {src.scales[0] * mapping.lateral_scale, src.scales[1] * mapping.lateral_scale};
    if (overlaps_aperture(p, optics, mapping.cull_margin)) scene.primitives.push_back(p);
  }
  return scene;
}

// Sorts by depth (ties broken by ascending id). With n_layers set, members
// are binned onto the nearest of n uniformly spaced planes spanning the depth
// range and each layer sits at the mean depth of its members.
inline HologramScene sort_and_bin(HologramScene scene, DepthOrder order, std::optional<std::size_t> n_layers) {
  if (scene.primitives.empty()) throw invalid_argument("sort_and_bin: scene is empty");
  if (n_layers && *n_layers < 1) throw invalid_argument("sort_and_bin: n_layers must be >= 1");

  auto& prims = scene.primitives;
  std::stable_sort(prims.begin(), prims.end(), [order](const GaussianPrimitive& a, const GaussianPrimitive& b) {
    if (a.mean[2] != b.mean[2]) {
      return order == DepthOrder::back_to_front ? a.mean[2] > b.mean[2] : a.mean[2] < b.mean[2];
    }
    return a.id < b.id;
  });
  scene.order = order;
  scene.layers.reset();
  if (!n_layers) return scene;

  const std::size_t n = *n_layers;
  double zmin = prims.front().mean[2];
  double zmax = zmin;
  for (const auto& p : prims) {
    zmin = std::min(zmin, p.mean[2]);
    zmax = std::max(zmax, p.mean[2]);
  }
  std::vector<double> planes(n);
  for (std::size_t j = 0; j < n; ++j) {
    planes[j] = n == 1 ? 0.5 * (zmin + zmax)
                       : zmin + (zmax - zmin) * static_cast<double>(j) / static_cast<double>(n - 1);
  }
  std::vector<std::vector<std::size_t>> bins(n);
  for (std::size_t i = 0; i < prims.size(); ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < n; ++j) {
      if (std::abs(prims[i].mean[2] - planes[j]) < std::abs(prims[i].mean[2] - planes[best])) best = j;
    }
    bins[best].push_back(i);
  }
  std::vector<Layer> layers;
  for (auto& members : bins) {
    if (members.empty()) continue;
    double z = 0.0;
    for (std::size_t i : members) z += prims[i].mean[2];
    layers.push_back({z / static_cast<double>(members.size()), std::move(members)});
  }
  if (order == DepthOrder::back_to_front) std::reverse(layers.begin(), layers.end());
  scene.layers = std::move(layers);
  return scene;
}

// Reads a splat file and produces a depth-sorted hologram-space scene.
inline HologramScene load_scene(const std::string& path, const OpticsConfig& optics, const SceneMapping& mapping,
                                DepthOrder order, std::optional<std::size_t> n_layers = std::nullopt) {
  const auto raw = load_ply_file(path);
  std::vector<GaussianPrimitive> prims;
  prims.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) prims.push_back(activate(raw[i], static_cast<std::uint32_t>(i)));
  return sort_and_bin(to_hologram_space(prims, optics, mapping), order, n_layers);
}

}  // namespace holosplat
