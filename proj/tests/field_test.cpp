#include <gtest/gtest.h>

#include "holosplat/core/fft.hpp"
#include "holosplat/core/rng.hpp"
#include "test_support.hpp"

namespace hs = holosplat;
using hs::testing::random_field;

TEST(MakeField, FullHdGridAtDefaultPitch) {
  hs::OpticsConfig cfg;
  cfg.grid_ny = 1080;
  cfg.grid_nx = 1920;
  const auto f = hs::make_field(cfg, 0, 0.0);
  EXPECT_EQ(f.shape().nx, 1920u);
  EXPECT_EQ(f.shape().ny, 1080u);
  EXPECT_DOUBLE_EQ(f.pitch, 8e-6);
  EXPECT_DOUBLE_EQ(f.wavelength, 638e-9);
  EXPECT_EQ(hs::energy(f), 0.0);
}

TEST(MakeField, TinyGridIsZero) {
  hs::OpticsConfig cfg;
  cfg.grid_ny = cfg.grid_nx = 2;
  const auto f = hs::make_field(cfg, 0, 0.0);
  for (const auto& v : f.samples) EXPECT_EQ(v, hs::complex{});
  EXPECT_EQ(hs::energy(f), 0.0);
}

TEST(MakeField, RejectsBadChannelAndConfig) {
  hs::OpticsConfig cfg;
  EXPECT_THROW(hs::make_field(cfg, 3, 0.0), hs::Error);
  EXPECT_THROW(hs::make_field(cfg, -1, 0.0), hs::Error);
  cfg.pixel_pitch = 0.0;
  EXPECT_THROW(hs::make_field(cfg, 0, 0.0), hs::Error);
  cfg.pixel_pitch = 8e-6;
  cfg.grid_nx = 1;
  EXPECT_THROW(cfg.validate(), hs::Error);
}

TEST(Spectrum, DcOnlySignalHasSingleCenteredBin) {
  hs::WaveField f{hs::ComplexGrid(4, 4, hs::complex(1.0, 0.0)), 8e-6, 520e-9, 0.0};
  const auto s = hs::spectrum(f);
  for (std::size_t y = 0; y < 4; ++y) {
    for (std::size_t x = 0; x < 4; ++x) {
      if (y == 2 && x == 2) {
        EXPECT_NEAR(s.samples(y, x).real(), 4.0, 1e-12);
        EXPECT_NEAR(s.samples(y, x).imag(), 0.0, 1e-12);
      } else {
        EXPECT_LT(std::abs(s.samples(y, x)), 1e-12);
      }
    }
  }
}

TEST(Spectrum, RoundTripAndParseval) {
  for (hs::Shape shape : {hs::Shape{8, 8}, hs::Shape{16, 12}, hs::Shape{9, 7}, hs::Shape{64, 64}}) {
    const auto f = random_field(shape, 11 + shape.nx);
    const auto s = hs::spectrum(f);
    const auto back = hs::inverse_spectrum(s);
    EXPECT_LT(hs::rel_l2(back.samples, f.samples), 1e-10);
    const double es = hs::sum_norm(s.samples);
    const double ef = hs::sum_norm(f.samples);
    EXPECT_LT(std::abs(es - ef) / ef, 1e-10);
  }
}

TEST(Spectrum, MatchesNaiveDftOracle) {
  for (hs::Shape shape : {hs::Shape{8, 8}, hs::Shape{6, 10}, hs::Shape{5, 7}}) {
    const auto f = random_field(shape, 3);
    const auto fast = hs::spectrum(f).samples;
    const auto slow = hs::testing::naive_dft(f.samples, -1);
    EXPECT_LT(hs::rel_l2(fast, slow), 1e-12);
    const double oracle_energy = hs::sum_norm(slow);
    EXPECT_LT(std::abs(oracle_energy - hs::sum_norm(f.samples)) / oracle_energy, 1e-10);
    EXPECT_LT(hs::rel_l2(hs::centered_ifft(f.samples), hs::testing::naive_dft(f.samples, +1)), 1e-12);
  }
}

TEST(Spectrum, Linearity) {
  const hs::Shape shape{16, 16};
  const auto f = random_field(shape, 1);
  const auto g = random_field(shape, 2);
  const hs::complex a(0.3, -1.2);
  const hs::complex b(-2.0, 0.7);
  hs::WaveField mix = f;
  for (std::size_t i = 0; i < shape.size(); ++i) mix.samples[i] = a * f.samples[i] + b * g.samples[i];
  const auto sf = hs::spectrum(f).samples;
  const auto sg = hs::spectrum(g).samples;
  hs::ComplexGrid expect(shape);
  for (std::size_t i = 0; i < shape.size(); ++i) expect[i] = a * sf[i] + b * sg[i];
  EXPECT_LT(hs::rel_l2(hs::spectrum(mix).samples, expect), 1e-10);
}

TEST(Spectrum, Deterministic) {
  const auto f = random_field({32, 32}, 5);
  EXPECT_EQ(hs::spectrum(f).samples, hs::spectrum(f).samples);
}

TEST(FrequencyGrid, NyquistEdgeDcAndSpacing) {
  const double p = 8e-6;
  const auto g4 = hs::frequency_grid({4, 4}, p);
  EXPECT_DOUBLE_EQ(g4.kx(0, 0), -hs::pi / p);
  EXPECT_DOUBLE_EQ(g4.ky(0, 0), -hs::pi / p);
  EXPECT_EQ(g4.kx(2, 2), 0.0);
  EXPECT_EQ(g4.ky(2, 2), 0.0);
  const auto g8 = hs::frequency_grid({8, 8}, p);
  EXPECT_NEAR(g8.kx(0, 1) - g8.kx(0, 0), 2.0 * hs::pi / (8 * p), 1e-6);
  EXPECT_THROW(hs::frequency_grid({4, 4}, 0.0), hs::Error);
}

TEST(Intensity, UnitModulusAndConjugateProductOracle) {
  hs::WaveField ones{hs::ComplexGrid(3, 3, {1.0, 0.0}), 8e-6, 520e-9, 0.0};
  for (double v : hs::intensity(ones)) EXPECT_EQ(v, 1.0);
  hs::WaveField unit{hs::ComplexGrid(3, 3, {0.6, 0.8}), 8e-6, 520e-9, 0.0};
  for (double v : hs::intensity(unit)) EXPECT_NEAR(v, 1.0, 1e-15);
  const auto f = random_field({8, 8}, 9);
  const auto i = hs::intensity(f);
  for (std::size_t k = 0; k < i.size(); ++k) {
    EXPECT_NEAR(i[k], (f.samples[k] * std::conj(f.samples[k])).real(), 1e-14);
    EXPECT_GE(i[k], 0.0);
  }
}

// Known-answer vectors from the Random123 distribution (kat_vectors).
TEST(Philox, KnownAnswerVectors) {
  using P = hs::Philox4x32;
  EXPECT_EQ(P::generate({0, 0, 0, 0}, {0, 0}),
            (P::Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
  EXPECT_EQ(P::generate({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}),
            (P::Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
  EXPECT_EQ(P::generate({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}),
            (P::Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(Philox, UniformIsOrderIndependentAndInRange) {
  const hs::StreamKey key{42, 7, 3, 1};
  double sum = 0.0;
  constexpr std::uint32_t n = 100000;
  for (std::uint32_t i = n; i-- > 0;) {
    const double u = hs::uniform_at(key, i);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / n, 0.5, 0.005);
  EXPECT_EQ(hs::uniform_at(key, 17), hs::uniform_at(key, 17));
  EXPECT_NE(hs::uniform_at(key, 17), hs::uniform_at({42, 7, 4, 1}, 17));
}
