#include <gtest/gtest.h>

#include <random>

#include "holosplat/propagation.hpp"
#include "test_support.hpp"

namespace hs = holosplat;
using hs::testing::random_field;

namespace {

constexpr double kPitch = 8e-6;
constexpr double kLambda = 520e-9;

// Band-limited random field: spectrum restricted to the inner half of the band.
hs::WaveField smooth_random_field(hs::Shape shape, std::uint64_t seed) {
  auto f = random_field(shape, seed, kPitch, kLambda);
  auto spec = hs::centered_fft(f.samples);
  for (std::size_t y = 0; y < shape.ny; ++y) {
    for (std::size_t x = 0; x < shape.nx; ++x) {
      const auto dy = std::abs(static_cast<long>(y) - static_cast<long>(shape.ny / 2));
      const auto dx = std::abs(static_cast<long>(x) - static_cast<long>(shape.nx / 2));
      if (dy > static_cast<long>(shape.ny / 4) || dx > static_cast<long>(shape.nx / 4)) spec(y, x) = 0.0;
    }
  }
  f.samples = hs::centered_ifft(spec);
  return f;
}

// 1D naive DFT energy fraction within |bin| <= half_width for a sampled Gaussian.
double gaussian_central_fraction_1d(std::size_t n, double sigma_px, int half_width) {
  std::vector<std::complex<double>> spec(n);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t x = 0; x < n; ++x) {
      const double px = static_cast<double>(x) - static_cast<double>(n / 2);
      const double fk = static_cast<double>(k) - static_cast<double>(n / 2);
      spec[k] += std::exp(-px * px / (2 * sigma_px * sigma_px)) *
                 std::polar(1.0, -2.0 * hs::pi * fk * px / static_cast<double>(n));
    }
  }
  double in = 0.0;
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double e = std::norm(spec[k]);
    total += e;
    if (std::abs(static_cast<long>(k) - static_cast<long>(n / 2)) <= half_width) in += e;
  }
  return in / total;
}

double central_fraction(const hs::RealGrid& p, int half_width) {
  const auto s = p.shape();
  double in = 0.0;
  double total = 0.0;
  for (std::size_t y = 0; y < s.ny; ++y) {
    for (std::size_t x = 0; x < s.nx; ++x) {
      total += p(y, x);
      if (std::abs(static_cast<long>(y) - static_cast<long>(s.ny / 2)) <= half_width &&
          std::abs(static_cast<long>(x) - static_cast<long>(s.nx / 2)) <= half_width) {
        in += p(y, x);
      }
    }
  }
  return in / total;
}

}  // namespace

TEST(AsmKernel, IdentityAtZeroDistance) {
  const auto k = hs::asm_kernel({16, 16}, kPitch, kLambda, 0.0, false);
  for (const auto& h : k.transfer) EXPECT_EQ(h, hs::complex(1.0, 0.0));
}

TEST(AsmKernel, OnAxisPlaneWavePhase) {
  const double z = 1.234e-3;
  const auto k = hs::asm_kernel({16, 16}, kPitch, kLambda, z, false);
  const auto expect = std::polar(1.0, 2.0 * hs::pi * z / kLambda);
  EXPECT_NEAR(std::abs(k.transfer(8, 8) - expect), 0.0, 1e-9);
}

TEST(AsmKernel, EvanescentCutoff) {
  const double pitch = 0.2e-6;  // band extends past 2*pi/lambda
  const auto k = hs::asm_kernel({32, 32}, pitch, kLambda, 1e-6, false);
  const auto fg = hs::frequency_grid({32, 32}, pitch);
  const double k0 = 2.0 * hs::pi / kLambda;
  int zeroed = 0;
  for (std::size_t i = 0; i < k.transfer.size(); ++i) {
    const double kt = std::hypot(fg.kx[i], fg.ky[i]);
    if (kt >= k0) {
      EXPECT_EQ(k.transfer[i], hs::complex{});
      ++zeroed;
    } else {
      EXPECT_NEAR(std::abs(k.transfer[i]), 1.0, 1e-15);
    }
  }
  EXPECT_GT(zeroed, 0);
}

TEST(AsmKernel, ConjugateSymmetryInDistance) {
  for (bool bl : {false, true}) {
    const auto a = hs::asm_kernel({32, 24}, kPitch, kLambda, 0.05, bl);
    const auto b = hs::asm_kernel({32, 24}, kPitch, kLambda, -0.05, bl);
    for (std::size_t i = 0; i < a.transfer.size(); ++i) {
      EXPECT_EQ(b.transfer[i], std::conj(a.transfer[i]));
      EXPECT_LE(std::abs(a.transfer[i]), 1.0 + 1e-15);
    }
  }
}

TEST(AsmKernel, BandLimitMaskMatchesFrequencyBound) {
  const hs::Shape shape{64, 64};
  const double z = 0.05;
  EXPECT_TRUE(hs::resolve_band_limit(hs::BandLimit::automatic, shape, kPitch, kLambda, z));
  EXPECT_FALSE(hs::resolve_band_limit(hs::BandLimit::automatic, shape, kPitch, kLambda, 1e-4));
  const auto k = hs::asm_kernel(shape, kPitch, kLambda, z, true);
  const double df = 1.0 / (64 * kPitch);
  const double limit = 1.0 / (kLambda * std::sqrt(std::pow(2 * df * z, 2) + 1));
  for (std::size_t x = 0; x < 64; ++x) {
    const double fx = std::abs(hs::axis_frequency(x, 64, kPitch)) / (2 * hs::pi);
    EXPECT_EQ(k.transfer(32, x) != hs::complex{}, fx <= limit) << x;
  }
}

TEST(Propagate, ZeroDistanceIsIdentity) {
  const auto f = random_field({32, 32}, 1);
  const auto g = hs::propagate(f, 0.0);
  EXPECT_LT(hs::rel_l2(g.samples, f.samples), 1e-12);
  EXPECT_EQ(g.plane_z, 0.0);
}

TEST(Propagate, TiltedPlaneWaveIsEigenfunction) {
  const hs::Shape shape{32, 32};
  const double kx = hs::axis_frequency(21, 32, kPitch);
  hs::WaveField f{hs::ComplexGrid(shape), kPitch, kLambda, 0.0};
  for (std::size_t y = 0; y < 32; ++y)
    for (std::size_t x = 0; x < 32; ++x) f.samples(y, x) = std::polar(1.0, kx * hs::axis_coordinate(x, 32, kPitch));
  const double z = 2e-3;
  const auto g = hs::propagate(f, z);
  const double k = 2 * hs::pi / kLambda;
  const auto phase = std::polar(1.0, z * std::sqrt(k * k - kx * kx));
  for (std::size_t i = 0; i < shape.size(); ++i) {
    EXPECT_NEAR(std::abs(g.samples[i]), 1.0, 1e-10);
    EXPECT_NEAR(std::abs(g.samples[i] - f.samples[i] * phase), 0.0, 1e-9);
  }
  EXPECT_DOUBLE_EQ(g.plane_z, z);
}

TEST(Propagate, MatchesNaiveDftOracle) {
  const hs::Shape shape{32, 32};
  const auto f = random_field(shape, 77, kPitch, kLambda);
  const double z = 1e-3;
  // Oracle: naive forward DFT, multiply by the transfer function formula, naive inverse.
  auto spec = hs::testing::naive_dft(f.samples, -1);
  const double k = 2 * hs::pi / kLambda;
  for (std::size_t y = 0; y < 32; ++y) {
    for (std::size_t x = 0; x < 32; ++x) {
      const double kx = (static_cast<double>(x) - 16) * 2 * hs::pi / (32 * kPitch);
      const double ky = (static_cast<double>(y) - 16) * 2 * hs::pi / (32 * kPitch);
      const double kt2 = kx * kx + ky * ky;
      spec(y, x) *= kt2 < k * k ? std::exp(hs::complex(0, z * std::sqrt(k * k - kt2))) : hs::complex{};
    }
  }
  const auto expect = hs::testing::naive_dft(spec, +1);
  EXPECT_LT(hs::rel_l2(hs::propagate(f, z).samples, expect), 1e-6);
}

TEST(Propagate, SemigroupAndEnergy) {
  const auto f = smooth_random_field({64, 64}, 4);
  const hs::PropagationOptions off{hs::BandLimit::off, false};
  const auto a = hs::propagate(hs::propagate(f, 1.5e-3, off), 2.5e-3, off);
  const auto b = hs::propagate(f, 4e-3, off);
  EXPECT_LT(hs::rel_l2(a.samples, b.samples), 1e-9);
  const double e0 = hs::energy(f);
  EXPECT_LT(std::abs(hs::energy(b) - e0) / e0, 1e-9);
  EXPECT_LT(hs::rel_l2(hs::psd(b), hs::psd(f)), 1e-9);
}

TEST(Propagate, EnergyNonIncreasingWithBandLimit) {
  const auto f = random_field({64, 64}, 8, kPitch, kLambda);
  const auto g = hs::propagate(f, 0.08);  // automatic band limit engages
  EXPECT_LE(hs::energy(g), hs::energy(f) * (1 + 1e-12));
  EXPECT_TRUE(hs::all_finite(g.samples));
}

TEST(Propagate, PaddingKeepsShapeAndAgreesForShortDistances) {
  hs::WaveField f{hs::testing::gaussian_amplitude({64, 64}, 4.0), kPitch, kLambda, 0.0};
  const hs::PropagationOptions padded{hs::BandLimit::off, true};
  const auto a = hs::propagate(f, 2e-4, padded);
  const auto b = hs::propagate(f, 2e-4, {hs::BandLimit::off, false});
  EXPECT_EQ(a.shape(), f.shape());
  EXPECT_LT(hs::rel_l2(a.samples, b.samples), 1e-6);
}

TEST(RoundTrip, BandLimitedFieldIsRecovered) {
  const auto f = smooth_random_field({32, 32}, 5);
  for (double z : {1e-3, -3e-3, 0.05}) EXPECT_LT(hs::round_trip_check(f, z).residual, 1e-9);
  EXPECT_EQ(hs::round_trip_check(f, 0.0).residual, 0.0);
}

TEST(RoundTrip, EvanescentEnergyFractionMatchesMaskOracle) {
  const double pitch = 0.2e-6;
  const auto f = random_field({32, 32}, 6, pitch, kLambda);
  const hs::PropagationOptions off{hs::BandLimit::off, false};
  const auto r = hs::round_trip_check(f, 5e-6, off);
  EXPECT_LT(r.residual, 1e-9);
  // Oracle: spectral energy outside the propagating disc.
  const auto spec = hs::testing::naive_dft(f.samples, -1);
  const double k = 2 * hs::pi / kLambda;
  double out = 0.0;
  double total = 0.0;
  for (std::size_t y = 0; y < 32; ++y) {
    for (std::size_t x = 0; x < 32; ++x) {
      const double kx = (static_cast<double>(x) - 16) * 2 * hs::pi / (32 * pitch);
      const double ky = (static_cast<double>(y) - 16) * 2 * hs::pi / (32 * pitch);
      total += std::norm(spec(y, x));
      if (kx * kx + ky * ky >= k * k) out += std::norm(spec(y, x));
    }
  }
  EXPECT_GT(out / total, 0.1);
  EXPECT_NEAR(r.out_of_band_energy_fraction, out / total, 1e-9);
  // Squared residual against the unprojected field equals the same fraction.
  const auto back = hs::propagate(hs::propagate(f, 5e-6, off), -5e-6, off);
  EXPECT_NEAR(std::pow(hs::rel_l2(back.samples, f.samples), 2), out / total, 1e-9);
}

TEST(Psd, ConstantPhaseGaussianIsConcentrated) {
  // The 5x5 energy fraction for a separable Gaussian is the square of the 1D
  // fraction, which the oracle integrates directly.
  for (double sigma : {16.0, 32.0}) {
    hs::WaveField f{hs::testing::gaussian_amplitude({256, 256}, sigma), kPitch, kLambda, 0.0};
    const double measured = central_fraction(hs::psd(f), 2);
    const double oracle = std::pow(gaussian_central_fraction_1d(256, sigma, 2), 2);
    EXPECT_NEAR(measured, oracle, 1e-9) << sigma;
  }
  hs::WaveField wide{hs::testing::gaussian_amplitude({256, 256}, 32.0), kPitch, kLambda, 0.0};
  EXPECT_GE(central_fraction(hs::psd(wide), 2), 0.99);
}

TEST(Psd, ImpulseIsFlatAndParsevalHolds) {
  hs::WaveField f{hs::ComplexGrid(16, 16), kPitch, kLambda, 0.0};
  f.samples(3, 11) = hs::complex(0.0, 2.0);
  const auto p = hs::psd(f);
  for (double v : p) EXPECT_NEAR(v, 4.0 / 256.0, 1e-15);
  const auto r = random_field({16, 20}, 2);
  double sp = 0.0;
  for (double v : hs::psd(r)) sp += v;
  double si = 0.0;
  for (double v : hs::intensity(r)) si += v;
  EXPECT_NEAR(sp, si, 1e-10 * si);
}

TEST(ExpectedPsd, RandomPhaseGaussianIsFlat) {
  const hs::Shape shape{64, 64};
  const auto amp = hs::testing::gaussian_amplitude(shape, 8.0);
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> phase(-hs::pi, hs::pi);
  auto sampler = [&](std::size_t) {
    hs::WaveField f{amp, kPitch, kLambda, 0.0};
    for (auto& v : f.samples) v *= std::polar(1.0, phase(rng));
    return f;
  };
  const auto mean = hs::expected_psd(sampler, 512);
  double m = 0.0;
  for (double v : mean) m += v;
  m /= static_cast<double>(mean.size());
  double var = 0.0;
  for (double v : mean) var += (v - m) * (v - m);
  const double cov = std::sqrt(var / static_cast<double>(mean.size())) / m;
  // Monte-Carlo oracle: per-bin relative error of an average of 512 exponential draws is 1/sqrt(512).
  EXPECT_LT(cov, 0.1);
  EXPECT_NEAR(cov, 1.0 / std::sqrt(512.0), 0.02);
}

TEST(ExpectedPsd, DeterministicSamplerEqualsPsd) {
  const auto f = random_field({16, 16}, 3);
  const auto mean = hs::expected_psd([&](std::size_t) { return f; }, 5);
  EXPECT_LT(hs::rel_l2(mean, hs::psd(f)), 1e-14);
  EXPECT_THROW(hs::expected_psd([&](std::size_t) { return f; }, 0), hs::Error);
}
