#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "holosplat/core/error.hpp"

namespace holosplat {

// Splat record exactly as stored (pre-activation, scene units).
struct RawSplat {
  std::array<double, 3> position{};
  std::array<double, 3> log_scales{};
  int scale_count = 3;  // 2 for files without scale_2
  std::array<double, 4> rotation_quat{1.0, 0.0, 0.0, 0.0};  // (w, x, y, z)
  double opacity_logit = 0.0;
  std::array<double, 3> sh_dc{};
  std::vector<double> sh_rest;
};

class PlyError : public Error {
 public:
  PlyError(const std::string& message, std::string property, std::size_t offset)
      : Error(ErrorCategory::parse, "ply: " + message + " (property '" + property + "', byte offset " +
                                        std::to_string(offset) + ")"),
        property_(std::move(property)),
        offset_(offset) {}

  const std::string& property() const noexcept { return property_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::string property_;
  std::size_t offset_;
};

namespace ply_detail {

enum class Scalar { i8, u8, i16, u16, i32, u32, f32, f64 };

inline bool parse_scalar(std::string_view name, Scalar& out) {
  static const std::map<std::string_view, Scalar> table{
      {"char", Scalar::i8},    {"int8", Scalar::i8},     {"uchar", Scalar::u8},   {"uint8", Scalar::u8},
      {"short", Scalar::i16},  {"int16", Scalar::i16},   {"ushort", Scalar::u16}, {"uint16", Scalar::u16},
      {"int", Scalar::i32},    {"int32", Scalar::i32},   {"uint", Scalar::u32},   {"uint32", Scalar::u32},
      {"float", Scalar::f32},  {"float32", Scalar::f32}, {"double", Scalar::f64}, {"float64", Scalar::f64}};
  auto it = table.find(name);
  if (it == table.end()) return false;
  out = it->second;
  return true;
}

inline std::size_t scalar_size(Scalar s) {
  switch (s) {
    case Scalar::i8:
    case Scalar::u8: return 1;
    case Scalar::i16:
    case Scalar::u16: return 2;
    case Scalar::i32:
    case Scalar::u32:
    case Scalar::f32: return 4;
    case Scalar::f64: return 8;
  }
  return 0;
}

template <typename T>
T load_le(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    auto* b = reinterpret_cast<unsigned char*>(&v);
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
  }
  return v;
}

inline double decode_le(Scalar s, const char* p) {
  switch (s) {
    case Scalar::i8: return static_cast<double>(static_cast<std::int8_t>(*p));
    case Scalar::u8: return static_cast<double>(static_cast<std::uint8_t>(*p));
    case Scalar::i16: return load_le<std::int16_t>(p);
    case Scalar::u16: return load_le<std::uint16_t>(p);
    case Scalar::i32: return load_le<std::int32_t>(p);
    case Scalar::u32: return load_le<std::uint32_t>(p);
    case Scalar::f32: return load_le<float>(p);
    case Scalar::f64: return load_le<double>(p);
  }
  return 0.0;
}

struct Property {
  std::string name;
  Scalar type = Scalar::f32;
  bool is_list = false;
  Scalar count_type = Scalar::u8;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::size_t header_offset = 0;
  std::vector<Property> properties;
};

enum class Format { ascii, binary_le };

struct Header {
  Format format = Format::ascii;
  std::vector<Element> elements;
  std::size_t body_offset = 0;
};

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline Header parse_header(std::string_view bytes) {
  Header h;
  std::size_t pos = 0;
  bool saw_format = false;
  int line_no = 0;
  while (true) {
    const std::size_t eol = bytes.find('\n', pos);
    if (eol == std::string_view::npos) throw PlyError("header is not terminated by end_header", "header", pos);
    const std::string_view line = bytes.substr(pos, eol - pos);
    const auto tok = split_ws(line);
    const std::size_t line_offset = pos;
    pos = eol + 1;
    if (line_no++ == 0) {
      if (tok.size() != 1 || tok[0] != "ply") throw PlyError("missing 'ply' magic", "header", line_offset);
      continue;
    }
    if (tok.empty()) continue;
    if (tok[0] == "comment" || tok[0] == "obj_info") continue;
    if (tok[0] == "format") {
      if (tok.size() != 3) throw PlyError("malformed format line", "format", line_offset);
      if (tok[1] == "ascii") {
        h.format = Format::ascii;
      } else if (tok[1] == "binary_little_endian") {
        h.format = Format::binary_le;
      } else {
        throw PlyError("unsupported format '" + std::string(tok[1]) + "'", "format", line_offset);
      }
      saw_format = true;
    } else if (tok[0] == "element") {
      if (tok.size() != 3) throw PlyError("malformed element line", "element", line_offset);
      std::size_t count = 0;
      const auto res = std::from_chars(tok[2].data(), tok[2].data() + tok[2].size(), count);
      if (res.ec != std::errc() || res.ptr != tok[2].data() + tok[2].size()) {
        throw PlyError("invalid element count", std::string(tok[1]), line_offset);
      }
      h.elements.push_back({std::string(tok[1]), count, line_offset, {}});
    } else if (tok[0] == "property") {
      if (h.elements.empty()) throw PlyError("property before any element", "property", line_offset);
      Property p;
      if (tok.size() == 5 && tok[1] == "list") {
        p.is_list = true;
        p.name = std::string(tok[4]);
        if (!parse_scalar(tok[2], p.count_type) || !parse_scalar(tok[3], p.type)) {
          throw PlyError("unknown list property type", p.name, line_offset);
        }
      } else if (tok.size() == 3) {
        p.name = std::string(tok[2]);
        if (!parse_scalar(tok[1], p.type)) throw PlyError("unknown property type '" + std::string(tok[1]) + "'", p.name, line_offset);
      } else {
        throw PlyError("malformed property line", "property", line_offset);
      }
      h.elements.back().properties.push_back(std::move(p));
    } else if (tok[0] == "end_header") {
      if (!saw_format) throw PlyError("missing format line", "format", line_offset);
      h.body_offset = pos;
      return h;
    } else {
      throw PlyError("unexpected header keyword '" + std::string(tok[0]) + "'", "header", line_offset);
    }
  }
}

// Sequential reader over the body, binary or ASCII.
class BodyReader {
 public:
  BodyReader(std::string_view bytes, std::size_t offset, Format format)
      : bytes_(bytes), pos_(offset), format_(format) {}

  double read(Scalar type, const std::string& property) {
    if (format_ == Format::binary_le) {
      const std::size_t n = scalar_size(type);
      if (pos_ + n > bytes_.size()) throw PlyError("truncated payload", property, pos_);
      const double v = decode_le(type, bytes_.data() + pos_);
      pos_ += n;
      return v;
    }
    while (pos_ < bytes_.size() && std::isspace(static_cast<unsigned char>(bytes_[pos_]))) ++pos_;
    if (pos_ >= bytes_.size()) throw PlyError("truncated payload", property, pos_);
    std::size_t end = pos_;
    while (end < bytes_.size() && !std::isspace(static_cast<unsigned char>(bytes_[end]))) ++end;
    const std::string token(bytes_.substr(pos_, end - pos_));
    char* stop = nullptr;
    double v = std::strtod(token.c_str(), &stop);
    if (stop != token.c_str() + token.size()) throw PlyError("invalid number '" + token + "'", property, pos_);
    // A float property holds float precision whichever encoding carried it.
    if (type == Scalar::f32) v = static_cast<float>(v);
    pos_ = end;
    return v;
  }

  std::size_t position() const noexcept { return pos_; }

 private:
  std::string_view bytes_;
  std::size_t pos_;
  Format format_;
};

}  // namespace ply_detail

// Parses a 3DGS/2DGS splat PLY (ASCII or binary little-endian).
inline std::vector<RawSplat> load_ply(std::string_view bytes) {
  using namespace ply_detail;
  const Header header = parse_header(bytes);
  BodyReader reader(bytes, header.body_offset, header.format);
  std::vector<RawSplat> splats;
  bool found_vertex = false;

  for (const Element& el : header.elements) {
    if (el.name != "vertex") {
      for (std::size_t i = 0; i < el.count; ++i) {
        for (const Property& p : el.properties) {
          if (p.is_list) {
            const auto n = static_cast<std::size_t>(reader.read(p.count_type, p.name));
            for (std::size_t j = 0; j < n; ++j) reader.read(p.type, p.name);
          } else {
            reader.read(p.type, p.name);
          }
        }
      }
      continue;
    }
    found_vertex = true;

    // Resolve property slots; -1 marks absent.
    std::map<std::string, int> slot;
    for (std::size_t i = 0; i < el.properties.size(); ++i) {
      if (el.properties[i].is_list) {
        throw PlyError("list properties are not supported on vertices", el.properties[i].name, el.header_offset);
      }
      slot[el.properties[i].name] = static_cast<int>(i);
    }
    static const char* const required[] = {"x",     "y",     "z",     "scale_0", "scale_1", "rot_0",  "rot_1",
                                           "rot_2", "rot_3", "opacity", "f_dc_0", "f_dc_1", "f_dc_2"};
    for (const char* name : required) {
      if (!slot.contains(name)) throw PlyError("missing required vertex property", name, el.header_offset);
    }
    const bool has_scale2 = slot.contains("scale_2");
    std::vector<std::pair<int, int>> rest;  // (coefficient index, property slot)
    for (const auto& [name, s] : slot) {
      if (name.rfind("f_rest_", 0) == 0) {
        int idx = 0;
        const auto r = std::from_chars(name.data() + 7, name.data() + name.size(), idx);
        if (r.ec != std::errc() || r.ptr != name.data() + name.size() || idx < 0) {
          throw PlyError("malformed f_rest property name", name, el.header_offset);
        }
        rest.emplace_back(idx, s);
      }
    }
    std::sort(rest.begin(), rest.end());
    for (std::size_t i = 0; i < rest.size(); ++i) {
      if (rest[i].first != static_cast<int>(i)) {
        throw PlyError("f_rest coefficients are not contiguous from 0", "f_rest_" + std::to_string(i), el.header_offset);
      }
    }

    std::vector<double> values(el.properties.size());
    splats.reserve(el.count);
    for (std::size_t v = 0; v < el.count; ++v) {
      for (std::size_t i = 0; i < el.properties.size(); ++i) {
        values[i] = reader.read(el.properties[i].type, el.properties[i].name);
      }
      auto at = [&](const char* name) { return values[static_cast<std::size_t>(slot.at(name))]; };
      RawSplat s;
      s.position = {at("x"), at("y"), at("z")};
      s.scale_count = has_scale2 ? 3 : 2;
      s.log_scales = {at("scale_0"), at("scale_1"), has_scale2 ? at("scale_2") : 0.0};
      s.rotation_quat = {at("rot_0"), at("rot_1"), at("rot_2"), at("rot_3")};
      s.opacity_logit = at("opacity");
      s.sh_dc = {at("f_dc_0"), at("f_dc_1"), at("f_dc_2")};
      s.sh_rest.reserve(rest.size());
      for (const auto& r : rest) s.sh_rest.push_back(values[static_cast<std::size_t>(r.second)]);
      splats.push_back(std::move(s));
    }
  }
  if (!found_vertex) throw PlyError("no vertex element", "vertex", header.body_offset);
  return splats;
}

inline std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open '" + path + "'");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline std::vector<RawSplat> load_ply_file(const std::string& path) { return load_ply(read_file_bytes(path)); }

// Writes splats with float32 properties in the usual 3DGS layout.
inline std::string write_ply(const std::vector<RawSplat>& splats, bool binary) {
  const int scale_count = splats.empty() ? 3 : splats.front().scale_count;
  const std::size_t rest_count = splats.empty() ? 0 : splats.front().sh_rest.size();
  std::ostringstream out;
  out << "ply\nformat " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n";
  out << "element vertex " << splats.size() << "\n";
  std::vector<std::string> names{"x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2"};
  for (std::size_t i = 0; i < rest_count; ++i) names.push_back("f_rest_" + std::to_string(i));
  names.push_back("opacity");
  for (int i = 0; i < scale_count; ++i) names.push_back("scale_" + std::to_string(i));
  for (int i = 0; i < 4; ++i) names.push_back("rot_" + std::to_string(i));
  for (const auto& n : names) out << "property float " << n << "\n";
  out << "end_header\n";
  for (const RawSplat& s : splats) {
    if (s.scale_count != scale_count || s.sh_rest.size() != rest_count) {
      throw invalid_argument("write_ply: splats must share one property layout");
    }
    std::vector<double> v{s.position[0], s.position[1], s.position[2], s.sh_dc[0], s.sh_dc[1], s.sh_dc[2]};
    v.insert(v.end(), s.sh_rest.begin(), s.sh_rest.end());
    v.push_back(s.opacity_logit);
    for (int i = 0; i < scale_count; ++i) v.push_back(s.log_scales[static_cast<std::size_t>(i)]);
    v.insert(v.end(), s.rotation_quat.begin(), s.rotation_quat.end());
    if (binary) {
      for (double d : v) {
        const float f = static_cast<float>(d);
        char b[4];
        std::memcpy(b, &f, 4);
        if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + 4);
        out.write(b, 4);
      }
    } else {
      for (std::size_t i = 0; i < v.size(); ++i) {
        char buf[32];
        const auto r = std::to_chars(buf, buf + sizeof(buf), static_cast<float>(v[i]));
        out.write(buf, r.ptr - buf);
        out << (i + 1 == v.size() ? '\n' : ' ');
      }
    }
  }
  return out.str();
}

}  // namespace holosplat
