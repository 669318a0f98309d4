#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include <json.hpp>

#include "holosplat/io/container.hpp"
#include "holosplat/io/image.hpp"
#include "holosplat/ply.hpp"
#include "manifest.hpp"

namespace fs = std::filesystem;
namespace hs = holosplat;
using nlohmann::json;

namespace {

const fs::path kWork = HOLOSPLAT_CLI_WORK_DIR;

struct Result {
  int code = -1;
  std::string output;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(HOLOSPLAT_CLI) + " " + args + " 2>&1";
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, p)) r.output.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = kWork / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

// Small grid and scene so each command runs in well under a second.
json base_config(const fs::path& scene, const fs::path& out) {
  return {{"scene", scene.string()},
          {"optics", {{"pixel_pitch", 8e-6}, {"grid", {128, 128}}}},
          {"mapping", {{"lateral_scale", 3.5e-4}, {"z_scene", {0, 1}}, {"z_holo", {0.006, 0.014}}}},
          {"mode", "rp_structured"},
          {"kernel", {{"kind", "uniform"}}},
          {"frames", 1},
          {"seed", 7},
          {"channels", {1}},
          {"export_dir", out.string()}};
}

fs::path write_config(const fs::path& dir, const json& j, const std::string& name = "run.json") {
  const fs::path p = dir / name;
  std::ofstream(p) << j.dump(2);
  return p;
}

fs::path synth_scene(const fs::path& dir, std::size_t count, std::uint64_t seed) {
  const fs::path p = dir / ("synth" + std::to_string(count) + ".ply");
  const auto r = run("synth --count " + std::to_string(count) + " --seed " + std::to_string(seed) + " --out " + p.string());
  EXPECT_EQ(r.code, 0) << r.output;
  return p;
}

json read_json(const fs::path& p) { return json::parse(hs::io::read_bytes(p.string())); }

}  // namespace

TEST(Cli, HologramIsByteIdenticalAcrossRuns) {
  const auto dir = fresh_dir("determinism");
  const auto scene = synth_scene(dir, 20, 7);
  auto cfg = base_config(scene, dir / "a");
  cfg["channels"] = {0, 1, 2};
  const auto cfg_path = write_config(dir, cfg);
  ASSERT_EQ(run("hologram --config " + cfg_path.string()).code, 0);
  const auto first = run("hologram --config " + cfg_path.string() + " --out " + (dir / "b").string() + " --threads 3");
  ASSERT_EQ(first.code, 0) << first.output;
  const auto a = hs::io::read_bytes((dir / "a" / "hologram.hsh").string());
  const auto b = hs::io::read_bytes((dir / "b" / "hologram.hsh").string());
  EXPECT_EQ(a, b);
  const auto h = hs::io::decode_hologram(a);
  EXPECT_EQ(h.seed, 7u);
  EXPECT_EQ(h.frame_count(), 1u);
  EXPECT_EQ(h.channels.size(), 3u);

  ASSERT_EQ(run("hologram --config " + cfg_path.string() + " --seed 8 --out " + (dir / "c").string()).code, 0);
  EXPECT_NE(hs::io::read_bytes((dir / "c" / "hologram.hsh").string()), a);
  const auto m = read_json(dir / "c" / "manifest_hologram.json");
  EXPECT_EQ(m["seed"], 8);
  EXPECT_EQ(m["overrides"]["seed"], 8);
  EXPECT_EQ(m["scene"]["primitives"], 20);
}

TEST(Cli, SmoothPhaseWithSeveralFramesIsAConfigError) {
  const auto dir = fresh_dir("sp_frames");
  auto cfg = base_config(synth_scene(dir, 3, 1), dir / "out");
  cfg["mode"] = "sp_smooth";
  const auto ok = write_config(dir, cfg);
  const auto r = run("hologram --config " + ok.string() + " --frames 8");
  EXPECT_EQ(r.code, 2) << r.output;
  EXPECT_NE(r.output.find("sp_smooth"), std::string::npos);
  cfg["frames"] = 8;
  const auto bad = write_config(dir, cfg, "bad.json");
  const auto r2 = run("hologram --config " + bad.string());
  EXPECT_EQ(r2.code, 2);
  EXPECT_NE(r2.output.find(bad.string()), std::string::npos) << r2.output;
  EXPECT_FALSE(fs::exists(dir / "out" / "hologram.hsh"));
}

TEST(Cli, MissingSceneNamesThePath) {
  const auto dir = fresh_dir("missing_scene");
  const auto cfg = write_config(dir, base_config(dir / "nowhere" / "scene.ply", dir / "out"));
  const auto r = run("hologram --config " + cfg.string());
  EXPECT_EQ(r.code, 3) << r.output;
  EXPECT_NE(r.output.find((dir / "nowhere" / "scene.ply").string()), std::string::npos) << r.output;
}

TEST(Cli, ConfigErrorsExitWithConfigCode) {
  const auto dir = fresh_dir("config_errors");
  auto cfg = base_config(synth_scene(dir, 2, 1), dir / "out");
  cfg["optics"]["pitch"] = 8e-6;
  const auto r = run("hologram --config " + write_config(dir, cfg).string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("optics.pitch"), std::string::npos) << r.output;
  EXPECT_EQ(run("hologram --config " + (dir / "absent.json").string()).code, 3);
  EXPECT_NE(run("hologram").code, 0);
  EXPECT_NE(run("").code, 0);
}

TEST(Cli, MetricsOfAnImageWithItself) {
  const auto dir = fresh_dir("metrics");
  hs::RealGrid g(16, 16);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = static_cast<double>((i * 7) % 13) / 13.0;
  const auto a = dir / "a.pfm";
  hs::io::write_bytes(a.string(), hs::io::encode_pfm(g));
  const auto r = run("metrics " + a.string() + " " + a.string());
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find(" 120.0000 "), std::string::npos) << r.output;
  EXPECT_NE(r.output.find(" 1.000000 "), std::string::npos) << r.output;

  hs::io::write_bytes((dir / "small.pfm").string(), hs::io::encode_pfm(hs::RealGrid(8, 8)));
  EXPECT_EQ(run("metrics " + a.string() + " " + (dir / "small.pfm").string()).code, 5);
  EXPECT_EQ(run("metrics " + a.string() + " " + (dir / "none.pfm").string()).code, 3);
}

TEST(Cli, AnalyzeRandomPhaseCoversMoreBandThanSmooth) {
  const auto dir = fresh_dir("analyze");
  const auto scene = synth_scene(dir, 6, 4);
  auto rp = base_config(scene, dir / "rp");
  rp["frames"] = 4;
  auto sp = base_config(scene, dir / "sp");
  sp["mode"] = "sp_smooth";
  double coverage[2] = {0, 0};
  int i = 0;
  for (const auto& cfg : {rp, sp}) {
    const auto path = write_config(dir, cfg, "cfg" + std::to_string(i) + ".json");
    ASSERT_EQ(run("hologram --config " + path.string()).code, 0);
    const auto r = run("analyze --config " + path.string());
    ASSERT_EQ(r.code, 0) << r.output;
    const auto m = read_json(fs::path(cfg["export_dir"].get<std::string>()) / "manifest_analyze.json");
    coverage[i++] = m["bandwidth"][0]["coverage"].get<double>();
  }
  EXPECT_GT(coverage[0], coverage[1]);
  EXPECT_GT(coverage[0], 0.8);
}

TEST(Cli, FocalStackOfLonePrimitiveIsBrightestAtIt) {
  const auto dir = fresh_dir("lone");
  hs::RawSplat s;
  s.position = {0.2, -0.1, 0.5};  // z_holo 10 mm
  s.log_scales = {std::log(0.01), std::log(0.01), std::log(1e-4)};
  s.opacity_logit = 3.0;
  s.sh_dc = {1.0, 1.0, 1.0};
  hs::io::write_bytes((dir / "lone.ply").string(), hs::write_ply({s}, true));
  auto cfg = base_config(dir / "lone.ply", dir / "out");
  cfg["outputs"] = {{"focal_stack", {{"depths", {0.0, 0.01}}}}};
  const auto path = write_config(dir, cfg);
  ASSERT_EQ(run("hologram --config " + path.string()).code, 0);
  const auto r = run("focalstack --config " + path.string());
  ASSERT_EQ(r.code, 0) << r.output;
  const auto at0 = hs::io::decode_pfm(hs::io::read_bytes((dir / "out" / "focal_c1_z00.pfm").string()));
  const auto at = hs::io::decode_pfm(hs::io::read_bytes((dir / "out" / "focal_c1_z01.pfm").string()));
  std::size_t best = 0;
  for (std::size_t k = 1; k < at.size(); ++k)
    if (at[k] > at[best]) best = k;
  // 0.2 and -0.1 scene units at 0.35 mm per unit, 8 um pixels, origin at 64.
  EXPECT_NEAR(double(best % 128), 64 + 70e-6 / 8e-6, 1.5);
  EXPECT_NEAR(double(best / 128), 64 - 35e-6 / 8e-6, 1.5);
  double peak0 = 0.0;
  for (double v : at0) peak0 = std::max(peak0, v);
  EXPECT_GT(at[best], 3.0 * peak0);
}

TEST(Cli, ManifestsListEveryOutputWithItsHash) {
  const auto dir = fresh_dir("manifest");
  auto cfg = base_config(synth_scene(dir, 5, 2), dir / "out");
  cfg["frames"] = 2;
  cfg["outputs"] = {{"focal_stack", {{"depths", {0.006, 0.01}}}},
                    {"light_field", {{"window", 32}, {"stride", 16}, {"views", {4, 4}}}},
                    {"analyze", {{"depths", {0.0, 0.002, 0.004}}}},
                    {"encode", {{"iterations", 5}, {"depths", {0.046}}}}};
  const auto path = write_config(dir, cfg);
  for (const char* c : {"hologram", "focalstack", "lightfield", "analyze", "encode"}) {
    const auto r = run(std::string(c) + " --config " + path.string());
    ASSERT_EQ(r.code, 0) << c << "\n" << r.output;
  }
  std::set<std::string> listed;
  const std::string cfg_hash = hs::tool::sha256_hex(hs::io::read_bytes(path.string()));
  for (const auto& e : fs::directory_iterator(dir / "out")) {
    const std::string name = e.path().filename().string();
    if (name.rfind("manifest_", 0) != 0) continue;
    const auto m = read_json(e.path());
    EXPECT_EQ(m["config_sha256"], cfg_hash);
    EXPECT_TRUE(m.contains("timings_s"));
    for (const auto& o : m["outputs"]) {
      const auto bytes = hs::io::read_bytes((dir / "out" / o["path"].get<std::string>()).string());
      EXPECT_EQ(o["sha256"], hs::tool::sha256_hex(bytes)) << o["path"];
      EXPECT_EQ(o["bytes"], bytes.size());
      listed.insert(o["path"].get<std::string>());
    }
  }
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir / "out")) {
    const std::string name = e.path().filename().string();
    if (name.rfind("manifest_", 0) == 0) continue;
    ++files;
    EXPECT_TRUE(listed.count(name)) << name << " is not in any manifest";
  }
  EXPECT_EQ(files, listed.size());
  EXPECT_TRUE(listed.count("phase_c1.png"));
  EXPECT_TRUE(listed.count("lightfield_c1_views.pfm"));
}

TEST(Cli, ContainerConfigMismatchIsReported) {
  const auto dir = fresh_dir("mismatch");
  auto cfg = base_config(synth_scene(dir, 3, 5), dir / "out");
  cfg["outputs"] = {{"focal_stack", {{"depths", {0.01}}}}};
  ASSERT_EQ(run("hologram --config " + write_config(dir, cfg).string()).code, 0);
  cfg["optics"]["grid"] = {64, 64};
  const auto r = run("focalstack --config " + write_config(dir, cfg, "other.json").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("128x128"), std::string::npos) << r.output;
  cfg["optics"]["grid"] = {128, 128};
  const auto r2 = run("focalstack --config " + write_config(dir, cfg, "other.json").string() + " --seed 9");
  EXPECT_EQ(r2.code, 2);
  EXPECT_NE(r2.output.find("seed"), std::string::npos) << r2.output;
}
