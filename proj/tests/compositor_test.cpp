#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "holosplat/compositor.hpp"

namespace hs = holosplat;

namespace {

hs::OpticsConfig optics(std::size_t n) {
  hs::OpticsConfig o;
  o.grid_ny = o.grid_nx = n;
  return o;
}

hs::GaussianPrimitive prim(std::uint32_t id, double x, double y, double z, double sigma, double opacity,
                           double color = 1.0) {
  hs::GaussianPrimitive p;
  p.id = id;
  p.mean = {x, y, z};
  p.scales = {sigma, sigma};
  p.opacity = opacity;
  p.color = {color, color, color};
  return p;
}

hs::CompositeRequest request(std::vector<hs::GaussianPrimitive> prims, std::size_t n, hs::CompositeMode mode,
                             std::optional<std::size_t> layers = std::nullopt) {
  hs::HologramScene s;
  s.primitives = std::move(prims);
  s.optics = optics(n);
  hs::CompositeRequest r;
  r.scene = hs::order_for(s, mode, layers);
  r.mode = mode;
  r.channels = {1};
  r.seed = 17;
  return r;
}

const hs::PropagationOptions kNoLimit{hs::BandLimit::off, false};

}  // namespace

TEST(TransmittanceMask, Endpoints) {
  const auto o = optics(16);
  auto fp = hs::rasterize_gaussian(prim(0, 0, 0, 0.01, 2 * o.pixel_pitch, 1.0), o);
  const auto full = hs::transmittance_mask(fp, 1.0);
  EXPECT_EQ(full(8, 8), 0.0);
  EXPECT_EQ(full(0, 0), 1.0);
  const auto clear = hs::transmittance_mask(fp, 0.0);
  for (double v : clear) EXPECT_EQ(v, 1.0);
  fp.amplitude(fp.amplitude.rows() / 2, fp.amplitude.cols() / 2) = 0.5;
  EXPECT_NEAR(hs::transmittance_mask(fp, 0.5)(8, 8), std::sqrt(0.75), 1e-15);
  EXPECT_THROW(hs::transmittance_mask(fp, 1.5), hs::Error);
}

TEST(CompositeRp, LoneEmitterRefocusesToFootprint) {
  const std::size_t n = 64;
  const double z = 0.02;
  for (auto mode : {hs::CompositeMode::rp_spatial, hs::CompositeMode::rp_structured}) {
    auto req = request({prim(3, 0, 0, z, 4 * 8e-6, 1.0)}, n, mode);
    req.zero_phase = true;
    req.propagation = kNoLimit;
    req.kernel = {};  // uniform Q
    const auto g0 = hs::composite_rp_frame(req, 1, 1);
    EXPECT_EQ(g0.plane_z, 0.0);
    const auto back = hs::propagate(g0, z, kNoLimit);
    const auto fp = hs::rasterize_gaussian(req.scene.primitives[0], req.scene.optics).dense();
    if (mode == hs::CompositeMode::rp_spatial) {
      for (std::size_t i = 0; i < fp.size(); ++i)
        if (fp[i] >= 0.1) {
          EXPECT_NEAR(std::abs(back.samples[i]), std::sqrt(fp[i]), 1e-6);
        }
    } else {
      // Uniform Q with phi = 0: m = sqrt(N) delta at the grid center.
      const double expect = std::sqrt(fp(32, 32)) * static_cast<double>(n);
      EXPECT_NEAR(std::abs(back.samples(32, 32)), expect, 1e-6 * expect);
      EXPECT_NEAR(hs::sum_norm(back.samples), expect * expect, 1e-6 * expect * expect);
    }
  }
}

TEST(CompositeRp, OpaqueOccluderBlocksBackground) {
  const std::size_t n = 64;
  auto background = prim(1, 0, 0, 0.03, 6 * 8e-6, 1.0);
  // 10 m wide: a = 1 - O(1e-9) over the whole aperture. Color 0 so it only occludes.
  auto occluder = prim(2, 0, 0, 0.01, 10.0, 1.0, 0.0);
  for (auto mode : {hs::CompositeMode::rp_spatial, hs::CompositeMode::rp_structured}) {
    const auto open = hs::composite_rp_frame(request({background}, n, mode), 1, 1);
    const auto blocked = hs::composite_rp_frame(request({background, occluder}, n, mode), 1, 1);
    EXPECT_LT(hs::sum_norm(blocked.samples) / hs::sum_norm(open.samples), 1e-6);
  }
}

TEST(CompositeRp, NoOpacityNoField) {
  auto req = request({prim(0, 0, 0, 0.01, 3e-5, 0.0), prim(1, 1e-5, 0, 0.02, 5e-5, 0.0)}, 32,
                     hs::CompositeMode::rp_structured);
  const auto g = hs::composite_rp_frame(req, 1, 0);
  for (const auto& v : g.samples) EXPECT_EQ(v, hs::complex(0, 0));
}

TEST(CompositeRp, EmissionIsLinearInSqrtColor) {
  std::vector<hs::GaussianPrimitive> prims{prim(0, 0, 0, 0.01, 3e-5, 0.7, 0.3), prim(1, 4e-5, 0, 0.02, 5e-5, 0.4, 0.6)};
  for (auto mode : {hs::CompositeMode::rp_spatial, hs::CompositeMode::rp_structured}) {
    const auto a = hs::composite_rp_frame(request(prims, 32, mode), 2, 1);
    auto brighter = prims;
    for (auto& p : brighter)
      for (double& c : p.color) c *= 4.0;  // sqrt(c) doubles exactly
    const auto b = hs::composite_rp_frame(request(brighter, 32, mode), 2, 1);
    for (std::size_t i = 0; i < a.samples.size(); ++i) EXPECT_EQ(b.samples[i], 2.0 * a.samples[i]);
  }
}

TEST(CompositeRp, LayeredWithOneMemberPerLayerIsExact) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-1e-4, 1e-4), jitter(-1e-4, 1e-4);
  // Depths near a uniform 6-plane grid so each lands in its own bin.
  std::vector<hs::GaussianPrimitive> prims;
  for (std::uint32_t i = 0; i < 6; ++i) {
    const double z = i == 0 ? 0.01 : i == 5 ? 0.03 : 0.01 + 0.004 * i + jitter(rng);
    prims.push_back(prim(i, u(rng), u(rng), z, 3e-5, 0.6));
  }
  for (auto mode : {hs::CompositeMode::rp_spatial, hs::CompositeMode::rp_structured}) {
    const auto exact = hs::composite_rp_frame(request(prims, 32, mode), 1, 1);
    const auto layered = hs::composite_rp_frame(request(prims, 32, mode, 6), 1, 1);
    EXPECT_EQ(exact.samples, layered.samples);
    // Fewer layers is a different (approximate) computation.
    const auto coarse = hs::composite_rp_frame(request(prims, 32, mode, 2), 1, 1);
    EXPECT_FALSE(coarse.samples == exact.samples);
  }
}

TEST(CompositeRp, RequestValidation) {
  hs::CompositeRequest empty;
  EXPECT_THROW(hs::composite_rp_frame(empty, 1, 0), hs::Error);
  auto sp = request({prim(0, 0, 0, 0.01, 3e-5, 1.0)}, 16, hs::CompositeMode::sp_smooth);
  sp.frames = 8;
  EXPECT_THROW(hs::time_multiplex(sp), hs::Error);
  auto wrong_order = request({prim(0, 0, 0, 0.01, 3e-5, 1.0)}, 16, hs::CompositeMode::sp_smooth);
  wrong_order.mode = hs::CompositeMode::rp_spatial;
  EXPECT_THROW(hs::composite_rp_frame(wrong_order, 1, 0), hs::Error);
  auto dup = request({prim(4, 0, 0, 0.01, 3e-5, 1.0), prim(4, 0, 0, 0.02, 3e-5, 1.0)}, 16, hs::CompositeMode::rp_spatial);
  EXPECT_THROW(hs::composite_rp_frame(dup, 1, 0), hs::Error);
}

TEST(CompositeSp, LoneEmitterAndStackedWeights) {
  const std::size_t n = 64;
  const double z = 0.02;
  auto req = request({prim(0, 0, 0, z, 4 * 8e-6, 1.0)}, n, hs::CompositeMode::sp_smooth);
  req.propagation = kNoLimit;
  const auto u = hs::composite_sp(req, 1);
  const auto back = hs::propagate(u, z, kNoLimit);
  const auto fp = hs::rasterize_gaussian(req.scene.primitives[0], req.scene.optics).dense();
  for (std::size_t i = 0; i < fp.size(); ++i)
    if (fp[i] >= 0.1) {
      EXPECT_NEAR(std::abs(back.samples[i]), fp[i], 1e-6);
    }

  // Two nearly flat-topped sheets at z = 0, o = 0.5: 0.5 + 0.5 * 0.5 = 0.75 on axis.
  auto stack = request({prim(0, 0, 0, 0.0, 10.0, 0.5), prim(1, 0, 0, 0.0, 10.0, 0.5)}, 16, hs::CompositeMode::sp_smooth);
  stack.scene.color_domain = hs::ColorDomain::amplitude;
  const auto s = hs::composite_sp(stack, 0);
  EXPECT_NEAR(s.samples(8, 8).real(), 0.75, 1e-9);
}

TEST(CompositeSp, RecurrenceMatchesDirectSum) {
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> u(-1.5e-4, 1.5e-4), uz(0.005, 0.04), us(1.5e-5, 6e-5), uo(0.2, 1.0);
  std::vector<hs::GaussianPrimitive> prims;
  for (std::uint32_t i = 0; i < 8; ++i) prims.push_back(prim(i, u(rng), u(rng), uz(rng), us(rng), uo(rng), uo(rng)));
  for (std::optional<std::size_t> layers : {std::optional<std::size_t>{}, std::optional<std::size_t>{3}}) {
    auto req = request(prims, 64, hs::CompositeMode::sp_smooth, layers);
    // A distance-dependent band limit would make chained steps differ from one long step.
    req.propagation = kNoLimit;
    const auto direct = hs::composite_sp(req, 2);
    const auto rec = hs::composite_sp_recurrence(req, 2);
    EXPECT_LT(hs::rel_l2(rec.samples, direct.samples), 1e-9);
  }
}

TEST(TimeMultiplex, SingleFrameDeterminismAndThreads) {
  std::vector<hs::GaussianPrimitive> prims{prim(0, 0, 0, 0.01, 3e-5, 0.7), prim(1, 4e-5, 0, 0.02, 5e-5, 0.4)};
  auto req = request(prims, 32, hs::CompositeMode::rp_structured);
  req.channels = {0, 1, 2};
  const auto one = hs::time_multiplex(req);
  ASSERT_EQ(one.frame_count(), 1u);
  EXPECT_EQ(one.frames[1][0].samples, hs::composite_rp_frame(req, 1, 1).samples);
  EXPECT_EQ(one.frames[2][0].wavelength, req.scene.optics.wavelengths[2]);

  req.frames = 4;
  const auto a = hs::time_multiplex(req);
  req.threads = 3;
  const auto b = hs::time_multiplex(req);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t t = 0; t < 4; ++t) EXPECT_EQ(a.frames[c][t].samples, b.frames[c][t].samples);
  EXPECT_FALSE(a.frames[0][0].samples == a.frames[0][1].samples);
  EXPECT_EQ(a.scene_digest, hs::scene_digest(req.scene));
  req.seed += 1;
  EXPECT_FALSE(hs::time_multiplex(req).frames[0][0].samples == a.frames[0][0].samples);
}

TEST(TimeMultiplex, IntensityExpectationMatchesAlphaCompositing) {
  // Same-plane pair so refocusing introduces no defocus: E|g|^2 at the plane is
  // c_f o_f a_f + (1 - o_f a_f) c_b o_b a_b per pixel.
  const std::size_t n = 64;
  const double pitch = 8e-6, z = 0.015;
  auto front = prim(2, -4 * pitch, 0, z, 6 * pitch, 1.0, 0.8);
  auto back = prim(1, 4 * pitch, 0, z, 6 * pitch, 0.5, 0.6);
  auto req = request({front, back}, n, hs::CompositeMode::rp_spatial);
  // Sort ties resolve by id, so id 1 is emitted first and id 2 occludes it.
  ASSERT_EQ(req.scene.primitives[1].id, 2u);
  req.frames = 256;
  req.propagation = kNoLimit;
  const auto h = hs::time_multiplex(req);
  hs::RealGrid mean(req.scene.optics.shape());
  for (const auto& f : h.frames[0]) {
    const auto r = hs::propagate(f, z, kNoLimit);
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += std::norm(r.samples[i]) / 256.0;
  }
  const auto af = hs::rasterize_gaussian(front, req.scene.optics).dense();
  const auto ab = hs::rasterize_gaussian(back, req.scene.optics).dense();
  double worst_z = 0;
  for (std::size_t i = 0; i < mean.size(); ++i) {
    const double e_front = 0.8 * 1.0 * af[i];
    const double e_back = (1 - af[i]) * 0.6 * 0.5 * ab[i];
    const double oracle = e_front + e_back;
    if (oracle < 1e-3) continue;
    // |A + B e^{i d}|^2 has variance 2 A^2 B^2 per frame.
    const double sd = std::sqrt(2.0 * e_front * e_back / 256.0);
    if (sd == 0.0) {
      EXPECT_NEAR(mean[i], oracle, 1e-9);
    } else {
      worst_z = std::max(worst_z, std::abs(mean[i] - oracle) / sd);
    }
  }
  EXPECT_LT(worst_z, 5.5);
}
