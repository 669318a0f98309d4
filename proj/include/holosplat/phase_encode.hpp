#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "holosplat/core/rng.hpp"
#include "holosplat/propagation.hpp"
#include "holosplat/reconstruct.hpp"
#include "holosplat/spectral_kernels.hpp"

namespace holosplat {

enum class EncodeInit { zero, random };

struct EncodeProblem {
  WaveField target;  // complex field z_t in front of the SLM
  double z_t = 0.04;
  std::size_t iterations = 500;
  double step_size = 1.0;  // in units of 1 / (2 |s|^2)
  EncodeInit init = EncodeInit::random;
  std::uint64_t seed = 0;
  std::uint32_t stream = 0;  // channel, for per-channel init draws
  bool scale_free = true;
  PropagationOptions propagation{BandLimit::off, false};
};

struct PhasePattern {
  RealGrid phase;  // [-pi, pi)
  complex scale{1.0, 0.0};
  std::vector<double> loss_trace;  // loss after each iteration
  double initial_loss = 0.0;
  double best_loss = 0.0;
  std::size_t best_iteration = 0;  // 0 = the initial phase
};

struct EncodeLoss {
  double loss = 0.0;
  RealGrid gradient;
  complex scale{1.0, 0.0};
};

inline void check_problem(const EncodeProblem& p) {
  if (p.iterations < 1) throw invalid_argument("encode: iterations must be >= 1");
  if (!(p.step_size > 0.0) || !std::isfinite(p.step_size)) throw invalid_argument("encode: step_size must be positive");
  if (!std::isfinite(p.z_t)) throw invalid_argument("encode: z_t must be finite");
  if (p.target.samples.size() == 0) throw invalid_argument("encode: empty target");
}

inline WaveField slm_field(const RealGrid& phase, const WaveField& like) {
  WaveField w{ComplexGrid(phase.shape()), like.pitch, like.wavelength, 0.0};
  for (std::size_t i = 0; i < phase.size(); ++i) w.samples[i] = std::polar(1.0, phase[i]);
  return w;
}

// loss = sum |s P(e^{i theta}; z_t) - target|^2. s is the optimal complex scalar
// when scale_free; being optimal, it contributes nothing to the gradient.
inline EncodeLoss encode_loss(const RealGrid& phase, const EncodeProblem& prob, bool want_gradient = true) {
  require_same_shape(phase, prob.target.samples, "encode_loss");
  const WaveField w = slm_field(phase, prob.target);
  const WaveField v = propagate(w, prob.z_t, prob.propagation);
  const ComplexGrid& b = prob.target.samples;
  EncodeLoss out;
  if (prob.scale_free) {
    complex num{};
    double den = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
      num += std::conj(v.samples[i]) * b[i];
      den += std::norm(v.samples[i]);
    }
    if (!(den > 0.0)) throw numeric_error("encode_loss: prediction has zero energy");
    out.scale = num / den;
  }
  WaveField r{ComplexGrid(b.shape()), w.pitch, w.wavelength, prob.z_t};
  for (std::size_t i = 0; i < b.size(); ++i) {
    r.samples[i] = out.scale * v.samples[i] - b[i];
    out.loss += std::norm(r.samples[i]);
  }
  if (!want_gradient) return out;
  // Adjoint of the transfer is the transfer at -z (unit modulus, symmetric mask).
  for (auto& x : r.samples) x *= std::conj(out.scale);
  const WaveField g = propagate(r, -prob.z_t, prob.propagation);
  out.gradient = RealGrid(b.shape());
  for (std::size_t i = 0; i < b.size(); ++i) out.gradient[i] = 2.0 * std::imag(g.samples[i] * std::conj(w.samples[i]));
  return out;
}

inline double wrap_phase(double p) {
  double q = std::fmod(p + pi, 2.0 * pi);
  if (q < 0.0) q += 2.0 * pi;
  q -= pi;
  return q >= pi ? -pi : q;
}

inline RealGrid initial_phase(const EncodeProblem& prob) {
  RealGrid phase(prob.target.shape());
  if (prob.init == EncodeInit::random) {
    // frame 0 is never used by the compositor draws
    const StreamKey key{prob.seed, scene_scope, 0, prob.stream};
    for (std::size_t i = 0; i < phase.size(); ++i) phase[i] = phase_at(key, static_cast<std::uint32_t>(i));
  }
  return phase;
}

// Gradient descent; a step that raises the loss is retried at half the step
// (the halved step is kept). Returns the best iterate seen.
inline PhasePattern encode(const EncodeProblem& prob) {
  check_problem(prob);
  RealGrid phase = initial_phase(prob);
  EncodeLoss cur = encode_loss(phase, prob);
  if (!std::isfinite(cur.loss)) throw numeric_error("encode: loss is not finite at the initial phase");
  PhasePattern best{phase, cur.scale, {}, cur.loss, cur.loss, 0};
  double step = prob.step_size;
  RealGrid trial(phase.shape());
  for (std::size_t it = 1; it <= prob.iterations; ++it) {
    const double s2 = std::max(std::norm(cur.scale), std::numeric_limits<double>::min());
    EncodeLoss next;
    bool accepted = false;
    for (int tries = 0; tries < 40; ++tries) {
      const double lr = step / (2.0 * s2);
      for (std::size_t i = 0; i < phase.size(); ++i) trial[i] = wrap_phase(phase[i] - lr * cur.gradient[i]);
      next = encode_loss(trial, prob);
      if (!std::isfinite(next.loss)) {
        throw numeric_error("encode: loss diverged at iteration " + std::to_string(it));
      }
      if (next.loss <= cur.loss) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (accepted) {
      phase = trial;
      cur = std::move(next);
    }
    best.loss_trace.push_back(cur.loss);
    if (cur.loss < best.best_loss) {
      best.best_loss = cur.loss;
      best.best_iteration = it;
      best.phase = phase;
      best.scale = cur.scale;
    }
  }
  return best;
}

// Focal stack of s e^{i theta}, the SLM at z = 0 and depths measured from it.
inline FocalStack reconstruct_encoded(const PhasePattern& p, const EncodeProblem& prob, const std::vector<double>& depths,
                                      const PropagationOptions& opts = {}) {
  WaveField w = slm_field(p.phase, prob.target);
  for (auto& x : w.samples) x *= p.scale;
  TimeMultiplexedHologram h;
  h.channels = {0};
  h.frames = {{w}};
  auto s = focal_stack(h, depths, opts);
  s.channels.clear();
  return s;
}

}  // namespace holosplat
