// holosplat: splat scene -> time-multiplexed hologram -> reconstructions,
// analysis and phase-only encodings. See README.md for the config format.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "holosplat/analysis.hpp"
#include "holosplat/compositor.hpp"
#include "holosplat/ingest.hpp"
#include "holosplat/io/config.hpp"
#include "holosplat/io/container.hpp"
#include "holosplat/metrics.hpp"
#include "holosplat/phase_encode.hpp"
#include "holosplat/reconstruct.hpp"
#include "manifest.hpp"
#include "png_export.hpp"

namespace hs = holosplat;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint32_t> frames;
  std::string out;
  unsigned threads = 0;  // 0: all cores
  std::string hologram;  // container path, defaults to <export_dir>/<config hologram>
};

struct Run {
  hs::io::RunConfig cfg;
  std::string config_sha256;
  json overrides = json::object();
  unsigned threads = 1;
};

Run load(const Flags& f) {
  if (f.config.empty()) throw hs::config_error("--config is required for this command");
  Run r;
  r.cfg = hs::io::load_run_config(f.config);
  r.config_sha256 = hs::tool::sha256_hex(hs::io::read_bytes(f.config));
  if (f.seed) {
    r.cfg.seed = *f.seed;
    r.overrides["seed"] = *f.seed;
  }
  if (f.frames) {
    if (*f.frames < 1) throw hs::config_error("--frames must be >= 1");
    r.cfg.frames = *f.frames;
    r.overrides["frames"] = *f.frames;
  }
  if (!f.out.empty()) {
    r.cfg.export_dir = f.out;
    r.overrides["out"] = f.out;
  }
  if (r.cfg.mode == hs::CompositeMode::sp_smooth && r.cfg.frames != 1) {
    throw hs::config_error("frames is " + std::to_string(r.cfg.frames) + " but mode sp_smooth is deterministic and needs frames = 1");
  }
  r.threads = f.threads ? f.threads : std::max(1u, std::thread::hardware_concurrency());
  return r;
}

hs::tool::Manifest start(const std::string& command, const Run& r, const Flags& f) {
  hs::tool::Manifest m(command, r.cfg.export_dir);
  m.doc()["config"] = f.config;
  m.doc()["config_sha256"] = r.config_sha256;
  m.doc()["overrides"] = r.overrides;
  m.doc()["seed"] = r.cfg.seed;
  return m;
}

std::string container_path(const Run& r, const Flags& f) {
  return f.hologram.empty() ? (fs::path(r.cfg.export_dir) / r.cfg.hologram).string() : f.hologram;
}

// Reads the container and checks it against the effective config.
hs::TimeMultiplexedHologram load_container(const Run& r, const Flags& f, const std::string& command, hs::tool::Manifest& m) {
  const std::string path = container_path(r, f);
  const std::string bytes = hs::io::read_bytes(path);
  auto h = hs::io::decode_hologram(bytes);
  hs::io::check_hologram_matches(h, r.cfg.optics, command);
  if (h.mode != r.cfg.mode) {
    throw hs::config_error(command + ": container mode " + hs::mode_name(h.mode) + " but config mode " + hs::mode_name(r.cfg.mode));
  }
  if (h.channels != r.cfg.channels) throw hs::config_error(command + ": container channels differ from config channels");
  if (h.seed != r.cfg.seed) {
    throw hs::config_error(command + ": container seed " + std::to_string(h.seed) + " but config seed " + std::to_string(r.cfg.seed));
  }
  if (h.frame_count() != r.cfg.frames) {
    throw hs::config_error(command + ": container holds " + std::to_string(h.frame_count()) + " frames but config asks for " +
                           std::to_string(r.cfg.frames));
  }
  m.doc()["hologram"] = {{"path", path}, {"sha256", hs::tool::sha256_hex(bytes)}};
  return h;
}

std::string tag(const char* fmt, std::size_t v) {
  char b[32];
  std::snprintf(b, sizeof b, fmt, v);
  return b;
}

// PFM plus gamma PNG of one image.
void export_image(hs::tool::Manifest& m, const std::string& stem, const hs::RealGrid& g, double peak, json extra) {
  m.write(stem + ".pfm", hs::io::encode_pfm(g), extra);
  extra["display"] = "gamma 2.2, peak " + std::to_string(peak);
  m.write(stem + ".png", hs::tool::intensity_png(g, peak), extra);
}

int cmd_hologram(const Flags& f) {
  const Run r = load(f);
  const auto& c = r.cfg;
  if (c.scene.empty()) throw hs::config_error("config has no 'scene' entry");
  if (!fs::exists(c.scene)) throw hs::io_error("scene file '" + c.scene + "' does not exist");
  auto m = start("hologram", r, f);
  hs::tool::Stopwatch sw;

  const auto order = c.mode == hs::CompositeMode::sp_smooth ? hs::DepthOrder::front_to_back : hs::DepthOrder::back_to_front;
  hs::CompositeRequest req;
  req.scene = hs::load_scene(c.scene, c.optics, c.mapping, order, c.layers);
  req.scene.color_domain = c.color_domain;
  req.mode = c.mode;
  req.kernel = hs::io::kernel_spec(c);
  req.frames = c.frames;
  req.seed = c.seed;
  req.channels = c.channels;
  req.propagation = c.propagation;
  req.threads = r.threads;
  m.time("load", sw.lap());

  const auto h = hs::time_multiplex(req);
  m.time("composite", sw.lap());

  m.write(c.hologram, hs::io::encode_hologram(h), {{"kind", "hologram container"}});
  m.time("write", sw.lap());
  m.doc()["scene"] = {{"path", c.scene},
                      {"sha256", hs::tool::sha256_hex(hs::io::read_bytes(c.scene))},
                      {"primitives", req.scene.primitives.size()},
                      {"digest", h.scene_digest}};
  m.doc()["mode"] = hs::mode_name(c.mode);
  m.doc()["frames"] = c.frames;
  m.doc()["channels"] = c.channels;
  const std::string mpath = m.finish();
  std::printf("hologram: %zu primitives, %u frame(s) x %zu channel(s), %zux%zu -> %s\n", req.scene.primitives.size(), c.frames,
              c.channels.size(), c.optics.grid_ny, c.optics.grid_nx, mpath.c_str());
  return 0;
}

int cmd_focalstack(const Flags& f) {
  const Run r = load(f);
  const auto& c = r.cfg;
  if (!c.focal_stack) throw hs::config_error("config has no 'outputs.focal_stack' section");
  auto m = start("focalstack", r, f);
  hs::tool::Stopwatch sw;
  const auto h = load_container(r, f, "focalstack", m);
  m.time("load", sw.lap());
  const auto st = hs::focal_stack(h, c.focal_stack->depths, c.propagation, r.threads);
  m.time("reconstruct", sw.lap());
  for (std::size_t s = 0; s < st.slices.size(); ++s) {
    double peak = 0.0;
    for (const auto& g : st.slices[s]) peak = std::max(peak, hs::tool::max_of(g));
    for (std::size_t d = 0; d < st.depths.size(); ++d) {
      export_image(m, "focal_c" + std::to_string(st.channels[s]) + tag("_z%02zu", d), st.slices[s][d], peak,
                   {{"channel", st.channels[s]}, {"depth_m", st.depths[d]}});
    }
  }
  m.time("write", sw.lap());
  m.doc()["depths_m"] = st.depths;
  m.doc()["frames_used"] = st.frames_used;
  std::printf("focalstack: %zu depth(s) x %zu channel(s) -> %s\n", st.depths.size(), st.slices.size(), m.finish().c_str());
  return 0;
}

int cmd_lightfield(const Flags& f) {
  const Run r = load(f);
  const auto& c = r.cfg;
  if (!c.light_field) throw hs::config_error("config has no 'outputs.light_field' section");
  const auto& lc = *c.light_field;
  auto m = start("lightfield", r, f);
  hs::tool::Stopwatch sw;
  const auto h = load_container(r, f, "lightfield", m);
  if (lc.channel_slot >= h.channels.size()) throw hs::config_error("lightfield: channel_slot outside the container's channels");
  m.time("load", sw.lap());
  hs::LightFieldOptions o;
  o.window = lc.window;
  o.stride = lc.stride;
  o.views_y = lc.views_y;
  o.views_x = lc.views_x;
  o.refocus = lc.refocus;
  o.propagation = c.propagation;
  o.threads = r.threads;
  const auto lf = hs::light_field_stft(h, lc.channel_slot, o);
  m.time("stft", sw.lap());

  // Views tiled row-major: view (vy, vx) occupies tile (vy, vx).
  hs::RealGrid mosaic(lf.views_y * lf.positions_y, lf.views_x * lf.positions_x);
  for (std::size_t vy = 0; vy < lf.views_y; ++vy)
    for (std::size_t vx = 0; vx < lf.views_x; ++vx)
      for (std::size_t y = 0; y < lf.positions_y; ++y)
        for (std::size_t x = 0; x < lf.positions_x; ++x)
          mosaic(vy * lf.positions_y + y, vx * lf.positions_x + x) = lf.view(vy, vx)(y, x);
  const int ch = h.channels[lc.channel_slot];
  export_image(m, "lightfield_c" + std::to_string(ch) + "_views", mosaic, hs::tool::max_of(mosaic),
               {{"channel", ch}, {"layout", "views_y x views_x tiles of positions_y x positions_x"}});
  const auto epi = hs::epipolar(lf, lf.positions_y / 2);
  export_image(m, "lightfield_c" + std::to_string(ch) + "_epipolar", epi, hs::tool::max_of(epi),
               {{"channel", ch}, {"row", lf.positions_y / 2}});
  m.time("write", sw.lap());
  m.doc()["light_field"] = {{"window", lf.window},         {"stride", lf.stride},           {"views", {lf.views_y, lf.views_x}},
                            {"positions", {lf.positions_y, lf.positions_x}}, {"view_ky_rad_per_m", lf.view_ky},
                            {"view_kx_rad_per_m", lf.view_kx}, {"refocus_m", lc.refocus}};
  std::printf("lightfield: %zux%zu views over %zux%zu windows -> %s\n", lf.views_y, lf.views_x, lf.positions_y, lf.positions_x,
              m.finish().c_str());
  return 0;
}

int cmd_analyze(const Flags& f) {
  const Run r = load(f);
  const auto& c = r.cfg;
  const hs::io::AnalyzeConfig ac = c.analyze.value_or(hs::io::AnalyzeConfig{});
  auto m = start("analyze", r, f);
  hs::tool::Stopwatch sw;
  const auto h = load_container(r, f, "analyze", m);
  m.time("load", sw.lap());
  json per = json::array();
  std::string spread;
  std::printf("%8s %10s %10s\n", "channel", "coverage", "psd_cov");
  for (std::size_t s = 0; s < h.channels.size(); ++s) {
    const int ch = h.channels[s];
    const auto br = hs::bandwidth_report(h, s);
    std::printf("%8d %10.4f %10.4f\n", ch, br.coverage, br.cov);
    m.write("psd_c" + std::to_string(ch) + ".pfm", hs::io::encode_pfm(br.mean_psd), {{"channel", ch}});
    // log10 display over 6 decades
    const double peak = hs::tool::max_of(br.mean_psd);
    std::vector<unsigned char> px(br.mean_psd.size());
    for (std::size_t i = 0; i < px.size(); ++i) {
      const double l = peak > 0.0 && br.mean_psd[i] > 0.0 ? std::log10(br.mean_psd[i] / peak) : -6.0;
      px[i] = static_cast<unsigned char>(std::lround(255.0 * (std::max(l, -6.0) + 6.0) / 6.0));
    }
    m.write("psd_c" + std::to_string(ch) + ".png", hs::tool::encode_png_gray(px, br.mean_psd.rows(), br.mean_psd.cols()),
            {{"channel", ch}, {"display", "log10, 6 decades"}});
    std::string radial = "radius_bins,mean_psd\n";
    for (std::size_t b = 0; b < br.radial_profile.size(); ++b) {
      char line[64];
      std::snprintf(line, sizeof line, "%zu,%.17g\n", b, br.radial_profile[b]);
      radial += line;
    }
    m.write("radial_c" + std::to_string(ch) + ".csv", radial, {{"channel", ch}});
    json entry = {{"channel", ch}, {"coverage", br.coverage}, {"psd_cov", br.cov}};
    if (!ac.depths.empty()) {
      const auto vr = hs::variance_report(h.frames[s][0], ac.depths, {hs::BandLimit::off, ac.pad}, r.threads);
      spread += "\nspread of frame 1, channel " + std::to_string(ch) + ":\n" + hs::variance_table(vr);
      m.write("variance_c" + std::to_string(ch) + ".csv", hs::variance_csv(vr), {{"channel", ch}});
      entry["spatial_term_m2"] = vr.spatial_term;
      entry["angular_coefficient"] = vr.angular_coefficient;
      if (ac.depths.size() >= 3) entry["measured_fit_r2"] = hs::fit_quadratic(vr.depths, vr.measured).r_squared;
    }
    per.push_back(entry);
  }
  std::fputs(spread.c_str(), stdout);
  m.time("analyze", sw.lap());
  m.doc()["bandwidth"] = per;
  std::printf("analyze -> %s\n", m.finish().c_str());
  return 0;
}

int cmd_encode(const Flags& f) {
  const Run r = load(f);
  const auto& c = r.cfg;
  if (!c.encode) throw hs::config_error("config has no 'outputs.encode' section");
  const auto& ec = *c.encode;
  auto m = start("encode", r, f);
  hs::tool::Stopwatch sw;
  const auto h = load_container(r, f, "encode", m);
  if (ec.channel_slot >= h.channels.size()) throw hs::config_error("encode: channel_slot outside the container's channels");
  if (ec.frame >= h.frame_count()) throw hs::config_error("encode: frame outside the container's frames");
  m.time("load", sw.lap());

  const int ch = h.channels[ec.channel_slot];
  hs::EncodeProblem prob;
  prob.target = h.frames[ec.channel_slot][ec.frame];
  prob.target.plane_z = ec.z_t;
  prob.z_t = ec.z_t;
  prob.iterations = ec.iterations;
  prob.step_size = ec.step_size;
  prob.init = ec.init;
  prob.seed = c.seed;
  prob.stream = static_cast<std::uint32_t>(ch);
  prob.scale_free = ec.scale_free;
  prob.propagation = {ec.band_limit, false};
  const auto p = hs::encode(prob);
  m.time("encode", sw.lap());

  const std::string stem = "phase_c" + std::to_string(ch);
  m.write(stem + ".pfm", hs::io::encode_pfm(p.phase), {{"channel", ch}, {"units", "rad"}});
  m.write(stem + ".png", hs::tool::phase_png(p.phase), {{"channel", ch}, {"display", "[-pi, pi) -> 0..255"}});
  std::string trace = "iteration,loss\n";
  char line[64];
  std::snprintf(line, sizeof line, "0,%.17g\n", p.initial_loss);
  trace += line;
  for (std::size_t i = 0; i < p.loss_trace.size(); ++i) {
    std::snprintf(line, sizeof line, "%zu,%.17g\n", i + 1, p.loss_trace[i]);
    trace += line;
  }
  m.write("loss_c" + std::to_string(ch) + ".csv", trace, {{"channel", ch}});
  if (!ec.depths.empty()) {
    const auto st = hs::reconstruct_encoded(p, prob, ec.depths, {ec.band_limit, false});
    double peak = 0.0;
    for (const auto& g : st.slices[0]) peak = std::max(peak, hs::tool::max_of(g));
    for (std::size_t d = 0; d < ec.depths.size(); ++d) {
      export_image(m, "encoded_c" + std::to_string(ch) + tag("_z%02zu", d), st.slices[0][d], peak,
                   {{"channel", ch}, {"depth_m", ec.depths[d]}});
    }
  }
  m.time("write", sw.lap());
  m.doc()["encode"] = {{"channel", ch},
                       {"frame", ec.frame},
                       {"z_t_m", ec.z_t},
                       {"initial_loss", p.initial_loss},
                       {"best_loss", p.best_loss},
                       {"best_iteration", p.best_iteration},
                       {"scale", {p.scale.real(), p.scale.imag()}}};
  std::printf("encode: loss %.6g -> %.6g (iteration %zu) -> %s\n", p.initial_loss, p.best_loss, p.best_iteration,
              m.finish().c_str());
  return 0;
}

hs::RealGrid read_image(const std::string& path) {
  const std::string bytes = hs::io::read_bytes(path);
  try {
    if (bytes.rfind("Pf", 0) == 0) return hs::io::decode_pfm(bytes);
    if (bytes.rfind("P5", 0) == 0) return hs::io::decode_pgm(bytes);
  } catch (const hs::Error& e) {
    throw hs::Error(e.category(), path + ": " + e.what());
  }
  throw hs::Error(hs::ErrorCategory::parse, path + ": not a grayscale PFM or binary PGM");
}

int cmd_metrics(const std::string& ref_path, const std::vector<std::string>& tests, double peak) {
  const auto ref = read_image(ref_path);
  std::printf("%-40s %10s %10s %14s\n", "image", "psnr_db", "ssim", "mse");
  for (const auto& t : tests) {
    const auto img = read_image(t);
    if (!(img.shape() == ref.shape())) {
      throw hs::invalid_argument(t + ": shape " + std::to_string(img.rows()) + "x" + std::to_string(img.cols()) +
                                 " differs from the reference");
    }
    std::printf("%-40s %10.4f %10.6f %14.6e\n", t.c_str(), hs::psnr(ref, img, peak), hs::ssim(ref, img, peak), hs::mse(ref, img));
  }
  return 0;
}

// Random splat file in scene units: x, y in [-1, 1], z in [0, 1].
int cmd_synth(std::size_t count, std::uint64_t seed, const std::string& out, bool ascii) {
  if (count < 1) throw hs::config_error("synth: --count must be >= 1");
  if (out.empty()) throw hs::config_error("synth: --out <file.ply> is required");
  const hs::StreamKey key{seed, hs::scene_scope, 0, 0x53594e54u};
  std::vector<hs::RawSplat> splats(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto u = [&](std::uint32_t j) { return hs::uniform_at(key, static_cast<std::uint32_t>(16 * i + j)); };
    auto& s = splats[i];
    s.position = {2 * u(0) - 1, 2 * u(1) - 1, u(2)};
    s.log_scales = {std::log(0.02 + 0.04 * u(3)), std::log(0.02 + 0.04 * u(4)), std::log(1e-3)};
    const double a = hs::pi * u(5);  // rotation about the optical axis
    s.rotation_quat = {std::cos(0.5 * a), 0.0, 0.0, std::sin(0.5 * a)};
    s.opacity_logit = 0.5 + 2.5 * u(6);
    for (std::uint32_t k = 0; k < 3; ++k) s.sh_dc[k] = (0.3 + 0.7 * u(7 + k) - 0.5) / hs::sh_c0;
  }
  const fs::path p(out);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  hs::io::write_bytes(out, hs::write_ply(splats, !ascii));
  std::printf("synth: %zu splats, seed %llu -> %s\n", count, static_cast<unsigned long long>(seed), out.c_str());
  return 0;
}

const char* category_name(hs::ErrorCategory c) {
  switch (c) {
    case hs::ErrorCategory::config: return "config error";
    case hs::ErrorCategory::io: return "io error";
    case hs::ErrorCategory::numeric: return "numeric error";
    case hs::ErrorCategory::invalid_argument: return "invalid argument";
    case hs::ErrorCategory::parse: return "parse error";
  }
  return "error";
}

void add_run_flags(CLI::App* sub, Flags& f, bool needs_container) {
  sub->add_option("--config", f.config, "run config (JSON)")->required();
  sub->add_option("--seed", f.seed, "override the config seed");
  sub->add_option("--frames", f.frames, "override the frame count T");
  sub->add_option("--out", f.out, "override the export directory");
  sub->add_option("--threads", f.threads, "worker threads (0: all cores)");
  if (needs_container) sub->add_option("--hologram", f.hologram, "container to read (default: <out>/<hologram>)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"holosplat: holograms from Gaussian splat scenes"};
  app.require_subcommand(1);
  Flags f;

  auto* hologram = app.add_subcommand("hologram", "composite a scene into a hologram container");
  add_run_flags(hologram, f, false);
  auto* focal = app.add_subcommand("focalstack", "refocus a container at the configured depths");
  add_run_flags(focal, f, true);
  auto* lightfield = app.add_subcommand("lightfield", "STFT light field views of a container");
  add_run_flags(lightfield, f, true);
  auto* analyze = app.add_subcommand("analyze", "bandwidth and spread analysis of a container");
  add_run_flags(analyze, f, true);
  auto* encode = app.add_subcommand("encode", "phase-only encoding of a container frame");
  add_run_flags(encode, f, true);

  auto* metrics = app.add_subcommand("metrics", "PSNR / SSIM of test images against a reference");
  std::string ref;
  std::vector<std::string> tests;
  double peak = 1.0;
  metrics->add_option("reference", ref, "reference image (PFM or PGM)")->required();
  metrics->add_option("test", tests, "images to score")->required();
  metrics->add_option("--peak", peak, "data range / peak value")->check(CLI::PositiveNumber);

  auto* synth = app.add_subcommand("synth", "write a random splat scene (PLY)");
  std::size_t count = 20;
  std::uint64_t synth_seed = 0;
  std::string synth_out;
  bool ascii = false;
  synth->add_option("--count", count, "number of splats");
  synth->add_option("--seed", synth_seed, "random seed");
  synth->add_option("--out", synth_out, "output .ply path")->required();
  synth->add_flag("--ascii", ascii, "ASCII instead of binary little-endian");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*hologram) return cmd_hologram(f);
    if (*focal) return cmd_focalstack(f);
    if (*lightfield) return cmd_lightfield(f);
    if (*analyze) return cmd_analyze(f);
    if (*encode) return cmd_encode(f);
    if (*metrics) return cmd_metrics(ref, tests, peak);
    if (*synth) return cmd_synth(count, synth_seed, synth_out, ascii);
  } catch (const hs::Error& e) {
    std::fprintf(stderr, "holosplat: %s: %s\n", category_name(e.category()), e.what());
    return static_cast<int>(e.category());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "holosplat: %s\n", e.what());
    return 1;
  }
  return 1;
}
