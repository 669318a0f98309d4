#pragma once

#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "holosplat/io/image.hpp"

namespace holosplat::tool {

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) throw io_error("sha256 failed");
  std::string hex;
  char b[3];
  for (unsigned i = 0; i < len; ++i) {
    std::snprintf(b, sizeof b, "%02x", md[i]);
    hex += b;
  }
  return hex;
}

// Collects every file a command writes, with its hash, plus timings.
class Manifest {
 public:
  Manifest(std::string command, std::filesystem::path dir) : command_(std::move(command)), dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw io_error("cannot create output directory '" + dir_.string() + "': " + ec.message());
    doc_["command"] = command_;
    doc_["outputs"] = nlohmann::json::array();
    doc_["timings_s"] = nlohmann::json::object();
  }

  nlohmann::json& doc() { return doc_; }

  // Writes `bytes` to dir/name and records it.
  std::string write(const std::string& name, const std::string& bytes, nlohmann::json extra = nlohmann::json::object()) {
    const auto path = dir_ / name;
    io::write_bytes(path.string(), bytes);
    extra["path"] = name;
    extra["bytes"] = bytes.size();
    extra["sha256"] = sha256_hex(bytes);
    doc_["outputs"].push_back(std::move(extra));
    return path.string();
  }

  void time(const std::string& stage, double seconds) { doc_["timings_s"][stage] = seconds; }

  std::string finish() {
    const std::string name = "manifest_" + command_ + ".json";
    io::write_bytes((dir_ / name).string(), doc_.dump(2) + "\n");
    return (dir_ / name).string();
  }

 private:
  std::string command_;
  std::filesystem::path dir_;
  nlohmann::json doc_;
};

class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

}  // namespace holosplat::tool
