#include "forge/io/ply.hpp"

#include "forge/core/error.hpp"
#include "forge/io/binary.hpp"

#include <fstream>
#include <sstream>

namespace forge::io {

namespace {

PlyType parse_type(const std::string& t, std::size_t line) {
  if (t == "char" || t == "int8") return PlyType::int8;
  if (t == "uchar" || t == "uint8") return PlyType::uint8;
  if (t == "short" || t == "int16") return PlyType::int16;
  if (t == "ushort" || t == "uint16") return PlyType::uint16;
  if (t == "int" || t == "int32") return PlyType::int32;
  if (t == "uint" || t == "uint32") return PlyType::uint32;
  if (t == "float" || t == "float32") return PlyType::float32;
  if (t == "double" || t == "float64") return PlyType::float64;
  fail(ErrorCode::ParseError, "unknown PLY type '" + t + "' at header line " + std::to_string(line));
}

template <typename T>
double read_binary(std::istream& is, bool big) {
  T v;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) fail(ErrorCode::ParseError, "PLY body truncated");
  v = big ? from_big(v) : from_little(v);
  return static_cast<double>(v);
}

double read_value(std::istream& is, PlyType type, bool big) {
  switch (type) {
    case PlyType::int8: return read_binary<std::int8_t>(is, big);
    case PlyType::uint8: return read_binary<std::uint8_t>(is, big);
    case PlyType::int16: return read_binary<std::int16_t>(is, big);
    case PlyType::uint16: return read_binary<std::uint16_t>(is, big);
    case PlyType::int32: return read_binary<std::int32_t>(is, big);
    case PlyType::uint32: return read_binary<std::uint32_t>(is, big);
    case PlyType::float32: return read_binary<float>(is, big);
    case PlyType::float64: return read_binary<double>(is, big);
  }
  return 0.0;
}

}  // namespace

int PlyElement::find(const std::string& property) const {
  for (std::size_t i = 0; i < properties.size(); ++i) {
    if (properties[i].name == property) return static_cast<int>(i);
  }
  return -1;
}

const PlyElement* PlyFile::element(const std::string& name) const {
  for (const auto& e : elements) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

PlyFile read_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());

  PlyFile ply;
  std::string line;
  std::size_t line_no = 0;
  bool saw_magic = false;
  bool saw_format = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (!saw_magic) {
      if (word != "ply") fail(ErrorCode::ParseError, path.string() + ": missing 'ply' magic");
      saw_magic = true;
      continue;
    }
    if (word.empty() || word == "comment" || word == "obj_info") continue;
    if (word == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt == "ascii") ply.format = PlyFormat::ascii;
      else if (fmt == "binary_little_endian") ply.format = PlyFormat::binary_little_endian;
      else if (fmt == "binary_big_endian") ply.format = PlyFormat::binary_big_endian;
      else fail(ErrorCode::ParseError, "unsupported PLY format '" + fmt + "'");
      saw_format = true;
    } else if (word == "element") {
      PlyElement e;
      long long count = -1;
      ls >> e.name >> count;
      if (!ls || count < 0) fail(ErrorCode::ParseError, "bad element declaration at header line " + std::to_string(line_no));
      e.count = static_cast<std::size_t>(count);
      ply.elements.push_back(std::move(e));
    } else if (word == "property") {
      if (ply.elements.empty()) fail(ErrorCode::ParseError, "property before element at header line " + std::to_string(line_no));
      PlyProperty p;
      std::string t;
      ls >> t;
      if (t == "list") {
        std::string ct, vt;
        ls >> ct >> vt >> p.name;
        p.is_list = true;
        p.count_type = parse_type(ct, line_no);
        p.type = parse_type(vt, line_no);
      } else {
        p.type = parse_type(t, line_no);
        ls >> p.name;
      }
      if (p.name.empty()) fail(ErrorCode::ParseError, "unnamed property at header line " + std::to_string(line_no));
      ply.elements.back().properties.push_back(std::move(p));
    } else if (word == "end_header") {
      break;
    } else {
      fail(ErrorCode::ParseError, "unexpected header keyword '" + word + "' at line " + std::to_string(line_no));
    }
  }
  if (!saw_magic || !saw_format) fail(ErrorCode::ParseError, path.string() + ": incomplete PLY header");

  for (auto& e : ply.elements) {
    e.scalars.assign(e.properties.size(), {});
    e.lists.assign(e.properties.size(), {});
    for (std::size_t p = 0; p < e.properties.size(); ++p) {
      if (e.properties[p].is_list) e.lists[p].reserve(e.count);
      else e.scalars[p].reserve(e.count);
    }
    for (std::size_t r = 0; r < e.count; ++r) {
      if (ply.format == PlyFormat::ascii) {
        ++line_no;
        if (!std::getline(in, line)) fail(ErrorCode::ParseError, "PLY body truncated at line " + std::to_string(line_no));
        std::istringstream ls(line);
        for (std::size_t p = 0; p < e.properties.size(); ++p) {
          const auto& prop = e.properties[p];
          if (prop.is_list) {
            double cnt = 0;
            if (!(ls >> cnt) || cnt < 0) fail(ErrorCode::ParseError, "bad list count at line " + std::to_string(line_no));
            std::vector<std::int64_t> items(static_cast<std::size_t>(cnt));
            for (auto& it : items) {
              double v;
              if (!(ls >> v)) fail(ErrorCode::ParseError, "bad list item at line " + std::to_string(line_no));
              it = static_cast<std::int64_t>(v);
            }
            e.lists[p].push_back(std::move(items));
          } else {
            double v;
            if (!(ls >> v)) fail(ErrorCode::ParseError, "bad value at line " + std::to_string(line_no));
            e.scalars[p].push_back(v);
          }
        }
      } else {
        const bool big = ply.format == PlyFormat::binary_big_endian;
        for (std::size_t p = 0; p < e.properties.size(); ++p) {
          const auto& prop = e.properties[p];
          if (prop.is_list) {
            const auto cnt = static_cast<std::size_t>(read_value(in, prop.count_type, big));
            std::vector<std::int64_t> items(cnt);
            for (auto& it : items) it = static_cast<std::int64_t>(read_value(in, prop.type, big));
            e.lists[p].push_back(std::move(items));
          } else {
            e.scalars[p].push_back(read_value(in, prop.type, big));
          }
        }
      }
    }
  }
  return ply;
}

}  // namespace forge::io
