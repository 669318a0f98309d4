#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "holosplat/core/field.hpp"

namespace holosplat {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<std::array<double, 3>, 3>;  // row-major
using Mat2 = std::array<std::array<double, 2>, 2>;

inline Mat3 identity3() { return {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}}; }

inline Mat3 matmul(const Mat3& a, const Mat3& b) {
  Mat3 c{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) c[i][j] += a[i][k] * b[k][j];
  return c;
}

inline Vec3 matvec(const Mat3& a, const Vec3& v) {
  Vec3 r{};
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) r[i] += a[i][k] * v[k];
  return r;
}

inline Mat3 transpose(const Mat3& a) {
  Mat3 t{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) t[i][j] = a[j][i];
  return t;
}

inline double determinant(const Mat3& a) {
  return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
         a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
}

// Rotation from a unit quaternion stored (w, x, y, z), the 3DGS convention.
inline Mat3 quaternion_to_rotation(double w, double x, double y, double z) {
  return {{{1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)},
           {2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)},
           {2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)}}};
}

// One planar Gaussian. Columns 0 and 1 of `rot` are the in-plane axes with
// standard deviations `scales`; column 2 is the (flattened) normal.
struct GaussianPrimitive {
  Vec3 mean{};  // meters in hologram space, z measured from the SLM
  Mat3 rot = identity3();
  std::array<double, 2> scales{1.0, 1.0};
  double opacity = 1.0;
  std::array<double, 3> color{1.0, 1.0, 1.0};
  std::uint32_t id = 0;
};

enum class DepthOrder { front_to_back, back_to_front };

// Whether stored colors are intensity (square-trained) or amplitude values.
enum class ColorDomain { intensity, amplitude };

struct Layer {
  double z = 0.0;
  std::vector<std::size_t> members;  // indices into HologramScene::primitives, in composite order
};

struct HologramScene {
  std::vector<GaussianPrimitive> primitives;
  std::optional<DepthOrder> order;
  std::optional<std::vector<Layer>> layers;  // empty optional: one plane per primitive
  OpticsConfig optics;
  ColorDomain color_domain = ColorDomain::intensity;
};

inline void validate_primitive(const GaussianPrimitive& p) {
  const Mat3 rtr = matmul(transpose(p.rot), p.rot);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (std::abs(rtr[i][j] - (i == j ? 1.0 : 0.0)) > 1e-6) {
        throw invalid_argument("primitive " + std::to_string(p.id) + ": rotation is not orthonormal");
      }
  if (std::abs(determinant(p.rot) - 1.0) > 1e-6) {
    throw invalid_argument("primitive " + std::to_string(p.id) + ": rotation determinant is not +1");
  }
  if (!(p.opacity >= 0.0 && p.opacity <= 1.0)) {
    throw invalid_argument("primitive " + std::to_string(p.id) + ": opacity outside [0,1]");
  }
  for (double s : p.scales)
    if (!(s > 0.0) || !std::isfinite(s)) throw invalid_argument("primitive " + std::to_string(p.id) + ": scale must be positive");
  for (double c : p.color)
    if (!(c >= 0.0) || !std::isfinite(c)) throw invalid_argument("primitive " + std::to_string(p.id) + ": color must be finite and >= 0");
  for (double m : p.mean)
    if (!std::isfinite(m)) throw invalid_argument("primitive " + std::to_string(p.id) + ": mean is not finite");
}

}  // namespace holosplat
