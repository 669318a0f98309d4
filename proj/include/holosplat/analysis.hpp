#pragma once

#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "holosplat/compositor.hpp"
#include "holosplat/core/fft.hpp"
#include "holosplat/core/parallel.hpp"
#include "holosplat/propagation.hpp"

namespace holosplat {

// Second central moment of an intensity image, |x - centroid|^2 averaged with
// weight I. Two-dimensional, so an isotropic Gaussian of std s gives 2 s^2.
inline double intensity_variance(const RealGrid& img, double pitch) {
  double s = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t y = 0; y < img.rows(); ++y)
    for (std::size_t x = 0; x < img.cols(); ++x) {
      const double v = img(y, x);
      s += v;
      sx += v * axis_coordinate(x, img.cols(), pitch);
      sy += v * axis_coordinate(y, img.rows(), pitch);
    }
  if (!(s > 0.0)) throw numeric_error("intensity_variance: field has zero energy");
  const double cx = sx / s, cy = sy / s;
  double m = 0.0;
  for (std::size_t y = 0; y < img.rows(); ++y) {
    const double dy = axis_coordinate(y, img.rows(), pitch) - cy;
    for (std::size_t x = 0; x < img.cols(); ++x) {
      const double dx = axis_coordinate(x, img.cols(), pitch) - cx;
      m += img(y, x) * (dx * dx + dy * dy);
    }
  }
  return m / s;
}

inline double intensity_variance(const WaveField& f) { return intensity_variance(intensity(f), f.pitch); }

// Same moment taken over the power spectrum, in (rad/m)^2.
inline double angular_variance(const WaveField& f) {
  const RealGrid p = intensity(centered_fft(f.samples));
  double s = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t y = 0; y < p.rows(); ++y)
    for (std::size_t x = 0; x < p.cols(); ++x) {
      s += p(y, x);
      sx += p(y, x) * axis_frequency(x, p.cols(), f.pitch);
      sy += p(y, x) * axis_frequency(y, p.rows(), f.pitch);
    }
  if (!(s > 0.0)) throw numeric_error("angular_variance: field has zero energy");
  const double cx = sx / s, cy = sy / s;
  double m = 0.0;
  for (std::size_t y = 0; y < p.rows(); ++y) {
    const double dy = axis_frequency(y, p.rows(), f.pitch) - cy;
    for (std::size_t x = 0; x < p.cols(); ++x) {
      const double dx = axis_frequency(x, p.cols(), f.pitch) - cx;
      m += p(y, x) * (dx * dx + dy * dy);
    }
  }
  return m / s;
}

struct VariancePrediction {
  double total = 0.0;
  double spatial_term = 0.0;
  double angular_term = 0.0;
};

// sigma^2(z) ~ spatial + (z/k)^2 * angular moment. No cross term.
inline VariancePrediction predicted_variance(const WaveField& u, double z) {
  VariancePrediction p;
  p.spatial_term = intensity_variance(u);
  const double zk = z / u.wavenumber();
  p.angular_term = zk * zk * angular_variance(u);
  p.total = p.spatial_term + p.angular_term;
  return p;
}

struct VarianceReport {
  std::vector<double> depths;
  std::vector<double> measured;
  std::vector<double> predicted;
  double spatial_term = 0.0;
  double angular_coefficient = 0.0;  // predicted = spatial_term + angular_coefficient * z^2
};

// Spread of u measured after propagating to each depth, beside the prediction.
// Band limiting off and 2x padding unless told otherwise.
inline VarianceReport variance_report(const WaveField& u, const std::vector<double>& depths,
                                      const PropagationOptions& opts = {BandLimit::off, true}, unsigned threads = 1) {
  if (depths.empty()) throw invalid_argument("variance_report: depth list is empty");
  VarianceReport r;
  r.depths = depths;
  r.spatial_term = intensity_variance(u);
  const double k = u.wavenumber();
  r.angular_coefficient = angular_variance(u) / (k * k);
  r.measured.assign(depths.size(), 0.0);
  r.predicted.assign(depths.size(), 0.0);
  parallel_for(depths.size(), threads, [&](std::size_t i) {
    r.measured[i] = intensity_variance(propagate(u, depths[i], opts));
    r.predicted[i] = r.spatial_term + r.angular_coefficient * depths[i] * depths[i];
  });
  return r;
}

struct QuadraticFit {
  double c0 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double r_squared = 0.0;
};

// Least-squares y ~ c0 + c1 z + c2 z^2.
inline QuadraticFit fit_quadratic(const std::vector<double>& z, const std::vector<double>& y) {
  if (z.size() != y.size() || z.size() < 3) throw invalid_argument("fit_quadratic: need at least 3 matching points");
  // Normal equations, solved by Cramer's rule on the 3x3 system.
  double s[5] = {0, 0, 0, 0, 0}, t[3] = {0, 0, 0};
  for (std::size_t i = 0; i < z.size(); ++i) {
    double p = 1.0;
    for (int j = 0; j < 5; ++j) {
      s[j] += p;
      if (j < 3) t[j] += p * y[i];
      p *= z[i];
    }
  }
  const double a[3][3] = {{s[0], s[1], s[2]}, {s[1], s[2], s[3]}, {s[2], s[3], s[4]}};
  auto det3 = [](const double m[3][3]) {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  };
  const double d = det3(a);
  if (d == 0.0) throw numeric_error("fit_quadratic: depths are degenerate");
  double c[3];
  for (int col = 0; col < 3; ++col) {
    double m[3][3];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) m[i][j] = j == col ? t[i] : a[i][j];
    c[col] = det3(m) / d;
  }
  QuadraticFit f{c[0], c[1], c[2], 0.0};
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double e = y[i] - (f.c0 + f.c1 * z[i] + f.c2 * z[i] * z[i]);
    ss_res += e * e;
    ss_tot += (y[i] - mean) * (y[i] - mean);
  }
  f.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return f;
}

struct BandwidthReport {
  RealGrid mean_psd;
  double coverage = 0.0;  // fraction of bins above 10% of the mean PSD
  double cov = 0.0;       // std / mean over all bins
  std::vector<double> radial_profile;  // mean PSD per integer-bin annulus
};

inline BandwidthReport bandwidth_report(const std::vector<WaveField>& frames) {
  if (frames.empty()) throw invalid_argument("bandwidth_report: no frames");
  BandwidthReport r;
  r.mean_psd = RealGrid(frames.front().shape());
  for (const auto& f : frames) {
    require_same_shape(r.mean_psd, f.samples, "bandwidth_report");
    const RealGrid p = psd(f);
    for (std::size_t i = 0; i < p.size(); ++i) r.mean_psd[i] += p[i];
  }
  const double inv_t = 1.0 / static_cast<double>(frames.size());
  double s = 0.0, s2 = 0.0;
  for (double& v : r.mean_psd) {
    v *= inv_t;
    s += v;
    s2 += v * v;
  }
  const double n = static_cast<double>(r.mean_psd.size());
  const double mean = s / n;
  if (mean > 0.0) {
    std::size_t above = 0;
    for (double v : r.mean_psd) above += v > 0.1 * mean;
    r.coverage = static_cast<double>(above) / n;
    r.cov = std::sqrt(std::max(0.0, s2 / n - mean * mean)) / mean;
  }
  const std::size_t ny = r.mean_psd.rows(), nx = r.mean_psd.cols();
  std::vector<double> sum, count;
  for (std::size_t y = 0; y < ny; ++y)
    for (std::size_t x = 0; x < nx; ++x) {
      const double dy = static_cast<double>(y) - static_cast<double>(ny / 2);
      const double dx = static_cast<double>(x) - static_cast<double>(nx / 2);
      const auto b = static_cast<std::size_t>(std::lround(std::hypot(dy, dx)));
      if (b >= sum.size()) sum.resize(b + 1, 0.0), count.resize(b + 1, 0.0);
      sum[b] += r.mean_psd(y, x);
      count[b] += 1.0;
    }
  r.radial_profile.resize(sum.size());
  for (std::size_t b = 0; b < sum.size(); ++b) r.radial_profile[b] = sum[b] / count[b];
  return r;
}

inline BandwidthReport bandwidth_report(const TimeMultiplexedHologram& h, std::size_t channel_slot = 0) {
  return bandwidth_report(h.frames.at(channel_slot));
}

inline std::string variance_table(const VarianceReport& r) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%12s %16s %16s %10s\n", "z_m", "measured_m2", "predicted_m2", "ratio");
  os << line;
  for (std::size_t i = 0; i < r.depths.size(); ++i) {
    std::snprintf(line, sizeof line, "%12.6g %16.8e %16.8e %10.5f\n", r.depths[i], r.measured[i], r.predicted[i],
                  r.predicted[i] > 0.0 ? r.measured[i] / r.predicted[i] : 0.0);
    os << line;
  }
  return os.str();
}

inline std::string variance_csv(const VarianceReport& r) {
  std::ostringstream os;
  os.precision(17);
  os << "z_m,measured_m2,predicted_m2\n";
  for (std::size_t i = 0; i < r.depths.size(); ++i) os << r.depths[i] << ',' << r.measured[i] << ',' << r.predicted[i] << '\n';
  return os.str();
}

}  // namespace holosplat
