#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "holosplat/analysis.hpp"
#include "holosplat/ingest.hpp"
#include "holosplat/io/image.hpp"
#include "holosplat/phase_encode.hpp"
#include "holosplat/reconstruct.hpp"

namespace holosplat::io {

struct KernelConfig {
  KernelKind kind = KernelKind::uniform;
  std::optional<double> radius;           // rad/m
  std::optional<double> radius_fraction;  // of the band corner radius
  int l = 0;
  int m = 0;
  std::string path;
};

struct FocalStackConfig {
  std::vector<double> depths;  // meters from the hologram plane
};

struct LightFieldConfig {
  std::size_t window = 64;
  std::size_t stride = 32;
  std::size_t views_y = 10;
  std::size_t views_x = 10;
  double refocus = 0.0;
  std::size_t channel_slot = 0;
};

struct AnalyzeConfig {
  std::vector<double> depths;  // spread vs depth of frame 0; empty skips it
  bool pad = true;
};

struct EncodeConfig {
  double z_t = 0.04;
  std::size_t iterations = 500;
  double step_size = 1.0;
  EncodeInit init = EncodeInit::random;
  bool scale_free = true;
  BandLimit band_limit = BandLimit::automatic;
  std::size_t channel_slot = 0;
  std::size_t frame = 0;
  std::vector<double> depths;  // reconstruct the encoded pattern here, from the SLM
};

struct RunConfig {
  std::string scene;  // resolved against the config file's directory
  OpticsConfig optics;
  SceneMapping mapping;
  ColorDomain color_domain = ColorDomain::intensity;
  CompositeMode mode = CompositeMode::rp_structured;
  KernelConfig kernel;
  std::uint32_t frames = 1;
  std::uint64_t seed = 0;
  std::vector<int> channels{0, 1, 2};
  std::optional<std::size_t> layers;
  PropagationOptions propagation;
  std::string hologram = "hologram.hsh";  // container name inside export_dir
  std::optional<FocalStackConfig> focal_stack;
  std::optional<LightFieldConfig> light_field;
  std::optional<AnalyzeConfig> analyze;
  std::optional<EncodeConfig> encode;
  std::string export_dir = "out";
};

namespace config_detail {

using nlohmann::json;

// Hands out members of one JSON object and rejects whatever is left over.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw config_error(label() + " must be an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const json& at(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw config_error("missing required key '" + sub(key) + "'");
    return j_.at(key);
  }

  std::string sub(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  double number(const std::string& key) {
    const json& v = at(key);
    if (!v.is_number()) throw config_error("'" + sub(key) + "' must be a number");
    return v.get<double>();
  }

  std::uint64_t count(const std::string& key) {
    const json& v = at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      throw config_error("'" + sub(key) + "' must be a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }

  int integer(const std::string& key) {
    const json& v = at(key);
    if (!v.is_number_integer()) throw config_error("'" + sub(key) + "' must be an integer");
    return v.get<int>();
  }

  bool boolean(const std::string& key) {
    const json& v = at(key);
    if (!v.is_boolean()) throw config_error("'" + sub(key) + "' must be true or false");
    return v.get<bool>();
  }

  std::string text(const std::string& key) {
    const json& v = at(key);
    if (!v.is_string()) throw config_error("'" + sub(key) + "' must be a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& key) {
    const json& v = at(key);
    if (!v.is_array()) throw config_error("'" + sub(key) + "' must be an array of numbers");
    std::vector<double> out;
    for (const json& e : v) {
      if (!e.is_number()) throw config_error("'" + sub(key) + "' must be an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  template <class E>
  E choice(const std::string& key, std::initializer_list<std::pair<const char*, E>> options) {
    const std::string s = text(key);
    std::string names;
    for (const auto& [name, value] : options) {
      if (s == name) return value;
      names += names.empty() ? name : std::string(", ") + name;
    }
    throw config_error("'" + sub(key) + "' is \"" + s + "\", expected one of: " + names);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw config_error("unknown key '" + sub(it.key()) + "'");
    }
  }

 private:
  std::string label() const { return path_.empty() ? "config" : "'" + path_ + "'"; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline void check_config_depths(const std::vector<double>& d, const std::string& key) {
  try {
    check_depths(d);
  } catch (const Error& e) {
    throw config_error("'" + key + "': " + e.what());
  }
}

inline BandLimit band_limit_of(Section& s, const std::string& key) {
  return s.choice<BandLimit>(key, {{"auto", BandLimit::automatic}, {"on", BandLimit::on}, {"off", BandLimit::off}});
}

inline std::array<std::size_t, 2> pair_of_counts(Section& s, const std::string& key) {
  const auto v = s.numbers(key);
  if (v.size() != 2 || v[0] < 1 || v[1] < 1 || v[0] != std::floor(v[0]) || v[1] != std::floor(v[1])) {
    throw config_error("'" + s.sub(key) + "' must be [rows, cols] of positive integers");
  }
  return {static_cast<std::size_t>(v[0]), static_cast<std::size_t>(v[1])};
}

inline void parse_optics(Section s, OpticsConfig& o) {
  if (s.has("pixel_pitch")) o.pixel_pitch = s.number("pixel_pitch");
  if (s.has("wavelengths")) {
    const auto w = s.numbers("wavelengths");
    if (w.size() != 3) throw config_error("'optics.wavelengths' must list 3 wavelengths (R, G, B) in meters");
    o.wavelengths = {w[0], w[1], w[2]};
  }
  if (s.has("grid")) {
    const auto g = pair_of_counts(s, "grid");
    o.grid_ny = g[0];
    o.grid_nx = g[1];
  }
  s.finish();
}

inline void parse_mapping(Section s, SceneMapping& m) {
  if (s.has("rotation")) {
    const json& r = s.at("rotation");
    bool ok = r.is_array() && r.size() == 3;
    for (std::size_t i = 0; ok && i < 3; ++i) {
      ok = r[i].is_array() && r[i].size() == 3;
      for (std::size_t j = 0; ok && j < 3; ++j) {
        ok = r[i][j].is_number();
        if (ok) m.view_rotation[i][j] = r[i][j].get<double>();
      }
    }
    if (!ok) throw config_error("'mapping.rotation' must be a 3x3 array of numbers");
    const Mat3 rtr = matmul(transpose(m.view_rotation), m.view_rotation);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (std::abs(rtr[i][j] - (i == j ? 1.0 : 0.0)) > 1e-6 || std::abs(determinant(m.view_rotation) - 1.0) > 1e-6) {
          throw config_error("'mapping.rotation' is not a proper rotation");
        }
  }
  if (s.has("translation")) {
    const auto t = s.numbers("translation");
    if (t.size() != 3) throw config_error("'mapping.translation' must have 3 entries");
    m.view_translation = {t[0], t[1], t[2]};
  }
  if (s.has("lateral_scale")) m.lateral_scale = s.number("lateral_scale");
  if (s.has("z_scene")) {
    const auto z = s.numbers("z_scene");
    if (z.size() != 2) throw config_error("'mapping.z_scene' must be [near, far]");
    m.z_near_scene = z[0];
    m.z_far_scene = z[1];
  }
  if (s.has("z_holo")) {
    const auto z = s.numbers("z_holo");
    if (z.size() != 2) throw config_error("'mapping.z_holo' must be [near, far] in meters");
    m.z_near_holo = z[0];
    m.z_far_holo = z[1];
  }
  if (s.has("cull_margin")) m.cull_margin = s.number("cull_margin");
  s.finish();
  m.validate();
}

inline void parse_kernel(Section s, KernelConfig& k) {
  k.kind = s.choice<KernelKind>("kind", {{"uniform", KernelKind::uniform},
                                         {"pupil", KernelKind::pupil},
                                         {"sh", KernelKind::spherical_harmonic},
                                         {"custom", KernelKind::custom}});
  switch (k.kind) {
    case KernelKind::uniform: break;
    case KernelKind::pupil: {
      const bool r = s.has("radius"), f = s.has("radius_fraction");
      if (r == f) throw config_error("'kernel' of kind pupil needs exactly one of radius (rad/m) or radius_fraction");
      if (r) k.radius = s.number("radius");
      if (f) k.radius_fraction = s.number("radius_fraction");
      if (!(k.radius.value_or(k.radius_fraction.value_or(0.0)) > 0.0)) throw config_error("'kernel' pupil radius must be positive");
      break;
    }
    case KernelKind::spherical_harmonic:
      k.l = s.integer("l");
      k.m = s.integer("m");
      check_sh_degree(k.l, k.m);
      break;
    case KernelKind::custom: k.path = s.text("path"); break;
  }
  s.finish();
}

}  // namespace config_detail

inline RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir = {}) {
  using namespace config_detail;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw config_error(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  Section s(j, "");
  auto resolve = [&base_dir](const std::string& p) {
    const std::filesystem::path q(p);
    return (q.is_absolute() || base_dir.empty() ? q : base_dir / q).lexically_normal().string();
  };
  if (s.has("scene")) c.scene = resolve(s.text("scene"));
  if (s.has("optics")) parse_optics(Section(s.at("optics"), "optics"), c.optics);
  c.optics.validate();
  if (s.has("mapping")) parse_mapping(Section(s.at("mapping"), "mapping"), c.mapping);
  if (s.has("color_domain")) {
    c.color_domain = s.choice<ColorDomain>("color_domain", {{"intensity", ColorDomain::intensity}, {"amplitude", ColorDomain::amplitude}});
  }
  if (s.has("mode")) {
    c.mode = s.choice<CompositeMode>("mode", {{"rp_structured", CompositeMode::rp_structured},
                                              {"rp_spatial", CompositeMode::rp_spatial},
                                              {"sp_smooth", CompositeMode::sp_smooth}});
  }
  if (s.has("kernel")) {
    parse_kernel(Section(s.at("kernel"), "kernel"), c.kernel);
    if (c.kernel.kind == KernelKind::custom) c.kernel.path = resolve(c.kernel.path);
  }
  if (s.has("frames")) {
    const auto t = s.count("frames");
    if (t < 1 || t > 1u << 20) throw config_error("'frames' must be between 1 and 2^20");
    c.frames = static_cast<std::uint32_t>(t);
  }
  if (s.has("seed")) c.seed = s.count("seed");
  if (s.has("channels")) {
    const json& ch = s.at("channels");
    if (!ch.is_array() || ch.empty()) throw config_error("'channels' must be a non-empty array of channel indices");
    c.channels.clear();
    std::set<int> seen;
    for (const json& e : ch) {
      if (!e.is_number_integer() || e.get<int>() < 0 || e.get<int>() > 2) throw config_error("'channels' entries must be 0, 1 or 2");
      if (!seen.insert(e.get<int>()).second) throw config_error("'channels' lists a channel twice");
      c.channels.push_back(e.get<int>());
    }
  }
  if (s.has("layers") && !s.at("layers").is_null()) {
    const auto n = s.count("layers");
    if (n < 1) throw config_error("'layers' must be >= 1, or null for one plane per primitive");
    c.layers = n;
  }
  if (s.has("propagation")) {
    Section p(s.at("propagation"), "propagation");
    if (p.has("band_limit")) c.propagation.band_limit = band_limit_of(p, "band_limit");
    if (p.has("pad")) c.propagation.pad = p.boolean("pad");
    p.finish();
  }
  if (s.has("hologram")) c.hologram = s.text("hologram");
  if (s.has("export_dir")) c.export_dir = resolve(s.text("export_dir"));
  if (s.has("outputs")) {
    Section o(s.at("outputs"), "outputs");
    if (o.has("focal_stack")) {
      Section f(o.at("focal_stack"), "outputs.focal_stack");
      c.focal_stack = FocalStackConfig{f.numbers("depths")};
      f.finish();
      check_config_depths(c.focal_stack->depths, "outputs.focal_stack.depths");
    }
    if (o.has("light_field")) {
      Section f(o.at("light_field"), "outputs.light_field");
      LightFieldConfig lf;
      if (f.has("window")) lf.window = f.count("window");
      if (f.has("stride")) lf.stride = f.count("stride");
      if (f.has("views")) {
        const auto v = pair_of_counts(f, "views");
        lf.views_y = v[0];
        lf.views_x = v[1];
      }
      if (f.has("refocus")) lf.refocus = f.number("refocus");
      if (f.has("channel_slot")) lf.channel_slot = f.count("channel_slot");
      f.finish();
      LightFieldOptions lo;
      lo.window = lf.window;
      lo.stride = lf.stride;
      lo.views_y = lf.views_y;
      lo.views_x = lf.views_x;
      try {
        check_lf_options(c.optics.shape(), lo);
      } catch (const Error& e) {
        throw config_error(std::string("'outputs.light_field': ") + e.what());
      }
      c.light_field = lf;
    }
    if (o.has("analyze")) {
      Section f(o.at("analyze"), "outputs.analyze");
      AnalyzeConfig a;
      if (f.has("depths")) a.depths = f.numbers("depths");
      if (f.has("pad")) a.pad = f.boolean("pad");
      f.finish();
      if (!a.depths.empty()) check_config_depths(a.depths, "outputs.analyze.depths");
      c.analyze = a;
    }
    if (o.has("encode")) {
      Section f(o.at("encode"), "outputs.encode");
      EncodeConfig e;
      if (f.has("z_t")) e.z_t = f.number("z_t");
      if (f.has("iterations")) e.iterations = f.count("iterations");
      if (f.has("step_size")) e.step_size = f.number("step_size");
      if (f.has("init")) e.init = f.choice<EncodeInit>("init", {{"zero", EncodeInit::zero}, {"random", EncodeInit::random}});
      if (f.has("scale_free")) e.scale_free = f.boolean("scale_free");
      if (f.has("band_limit")) e.band_limit = band_limit_of(f, "band_limit");
      if (f.has("channel_slot")) e.channel_slot = f.count("channel_slot");
      if (f.has("frame")) e.frame = f.count("frame");
      if (f.has("depths")) e.depths = f.numbers("depths");
      f.finish();
      if (e.iterations < 1) throw config_error("'outputs.encode.iterations' must be >= 1");
      if (!(e.step_size > 0.0)) throw config_error("'outputs.encode.step_size' must be positive");
      if (!e.depths.empty()) check_config_depths(e.depths, "outputs.encode.depths");
      c.encode = e;
    }
    o.finish();
  }
  s.finish();
  if (c.mode == CompositeMode::sp_smooth && c.frames != 1) {
    throw config_error("'frames' is " + std::to_string(c.frames) + " but mode sp_smooth is deterministic and needs frames = 1");
  }
  return c;
}

inline RunConfig load_run_config(const std::string& path) {
  const std::string text = read_bytes(path);
  try {
    return parse_run_config(text, std::filesystem::path(path).parent_path());
  } catch (const Error& e) {
    throw Error(e.category(), path + ": " + e.what());
  }
}

// Compositor kernel for a given grid; custom profiles are read from disk here.
inline KernelSpec kernel_spec(const RunConfig& c) {
  KernelSpec k;
  k.kind = c.kernel.kind;
  k.l = c.kernel.l;
  k.m = c.kernel.m;
  if (k.kind == KernelKind::pupil) {
    k.pupil_radius = c.kernel.radius ? *c.kernel.radius
                                     : *c.kernel.radius_fraction * band_corner_radius(c.optics.shape(), c.optics.pixel_pitch);
  }
  if (k.kind == KernelKind::custom) k.custom = load_kernel(c.kernel.path, c.optics.shape()).q;
  return k;
}

}  // namespace holosplat::io
