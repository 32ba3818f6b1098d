#include "forge/io/convert.hpp"

#include "forge/core/error.hpp"
#include "forge/io/binary.hpp"
#include "forge/io/ply.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <vector>

namespace forge::io {

namespace fs = std::filesystem;

InputFormat parse_input_format(const std::string& name) {
  if (name == "ascii-xyz" || name == "xyz" || name == "txt") return InputFormat::ascii_xyz;
  if (name == "csv") return InputFormat::csv;
  if (name == "ply") return InputFormat::ply;
  fail(ErrorCode::SchemaError, "unknown input format '" + name + "'");
}

namespace {

std::string canonical_field(const std::string& f) {
  if (f == "sem" || f == "label" || f == "semantic") return "semantic";
  if (f == "inst" || f == "instance") return "instance";
  if (f == "red") return "r";
  if (f == "green") return "g";
  if (f == "blue") return "b";
  return f;
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> tokens;
  std::string cur;
  bool pending = false;
  for (char c : line) {
    if (c == ',' || c == ' ' || c == '\t' || c == ';') {
      if (pending || c == ',') {
        if (pending) tokens.push_back(cur);
        cur.clear();
        pending = false;
      }
    } else if (c != '\r') {
      cur.push_back(c);
      pending = true;
    }
  }
  if (pending) tokens.push_back(cur);
  return tokens;
}

std::optional<double> parse_number(const std::string& tok) {
  double v = 0.0;
  const char* begin = tok.data();
  const char* end = tok.data() + tok.size();
  if (!tok.empty() && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return v;
}

std::optional<std::size_t> as_index(const std::string& spec) {
  if (spec.empty()) return std::nullopt;
  for (char c : spec) {
    if (c < '0' || c > '9') return std::nullopt;
  }
  return static_cast<std::size_t>(std::stoul(spec));
}

LabeledCloud convert_text(const fs::path& input, const ColumnMap& columns) {
  std::ifstream in(input);
  if (!in) fail(ErrorCode::IoError, "cannot open " + input.string());

  std::map<std::string, std::size_t> resolved;
  std::vector<std::string> header;
  bool header_checked = false;
  const auto resolve = [&]() {
    for (const auto& [field, spec] : columns.fields) {
      if (auto idx = as_index(spec)) {
        resolved[field] = *idx;
        continue;
      }
      bool found = false;
      for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == spec) {
          resolved[field] = i;
          found = true;
        }
      }
      if (!found) fail(ErrorCode::SchemaError, "column '" + spec + "' for field '" + field + "' not found");
    }
    for (const char* axis : {"x", "y", "z"}) {
      if (!resolved.count(axis)) fail(ErrorCode::SchemaError, std::string("no column mapped to coordinate ") + axis);
    }
  };

  LabeledCloud cloud;
  const bool has_color = columns.fields.count("r") && columns.fields.count("g") && columns.fields.count("b");
  if (has_color) cloud.color.emplace();

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    auto tokens = split_row(line);
    if (!header_checked) {
      header_checked = true;
      if (!parse_number(tokens.front())) {
        header = tokens;
        resolve();
        continue;
      }
      resolve();
    }
    std::vector<double> values(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      auto v = parse_number(tokens[i]);
      if (!v) fail(ErrorCode::ParseError, input.string() + ":" + std::to_string(line_no) + ": malformed value '" + tokens[i] + "'");
      values[i] = *v;
    }
    const auto get = [&](const std::string& field) -> double {
      const std::size_t col = resolved.at(field);
      if (col >= values.size()) {
        fail(ErrorCode::ParseError, input.string() + ":" + std::to_string(line_no) + ": row has " +
                                        std::to_string(values.size()) + " columns, need column " + std::to_string(col));
      }
      return values[col];
    };
    const Vec3f p(static_cast<float>(get("x")), static_cast<float>(get("y")), static_cast<float>(get("z")));
    if (!p.allFinite()) fail(ErrorCode::ParseError, input.string() + ":" + std::to_string(line_no) + ": non-finite coordinate");
    const int sem = resolved.count("semantic") ? static_cast<int>(std::lround(get("semantic"))) : kUnlabeled;
    const int inst = resolved.count("instance") ? static_cast<int>(std::lround(get("instance"))) : kUnlabeled;
    Rgb rgb{0, 0, 0};
    if (has_color) {
      rgb = {static_cast<std::uint8_t>(std::clamp(std::lround(get("r")), 0L, 255L)),
             static_cast<std::uint8_t>(std::clamp(std::lround(get("g")), 0L, 255L)),
             static_cast<std::uint8_t>(std::clamp(std::lround(get("b")), 0L, 255L))};
    }
    cloud.push_back(p, sem, inst, rgb);
  }
  if (!header_checked) resolve();
  return cloud;
}

LabeledCloud convert_ply(const fs::path& input, const ColumnMap& columns) {
  const PlyFile ply = read_ply(input);
  const PlyElement* vertex = ply.element("vertex");
  if (!vertex) fail(ErrorCode::SchemaError, input.string() + ": no vertex element");

  const auto column = [&](const std::string& field) -> const std::vector<double>* {
    auto it = columns.fields.find(field);
    if (it == columns.fields.end()) return nullptr;
    int idx = -1;
    if (auto i = as_index(it->second)) {
      idx = static_cast<int>(*i) < static_cast<int>(vertex->properties.size()) ? static_cast<int>(*i) : -1;
    } else {
      idx = vertex->find(it->second);
    }
    if (idx < 0 || vertex->properties[static_cast<std::size_t>(idx)].is_list) return nullptr;
    return &vertex->scalars[static_cast<std::size_t>(idx)];
  };

  const auto* xs = column("x");
  const auto* ys = column("y");
  const auto* zs = column("z");
  if (!xs || !ys || !zs) fail(ErrorCode::SchemaError, input.string() + ": missing x/y/z vertex property");
  const auto* sem = column("semantic");
  const auto* inst = column("instance");
  const auto* r = column("r");
  const auto* g = column("g");
  const auto* b = column("b");

  LabeledCloud cloud;
  if (r && g && b) cloud.color.emplace();
  for (std::size_t i = 0; i < vertex->count; ++i) {
    const Vec3f p(static_cast<float>((*xs)[i]), static_cast<float>((*ys)[i]), static_cast<float>((*zs)[i]));
    if (!p.allFinite()) fail(ErrorCode::ParseError, input.string() + ": non-finite coordinate at vertex " + std::to_string(i));
    Rgb rgb{0, 0, 0};
    if (cloud.color) {
      rgb = {static_cast<std::uint8_t>((*r)[i]), static_cast<std::uint8_t>((*g)[i]), static_cast<std::uint8_t>((*b)[i])};
    }
    cloud.push_back(p, sem ? static_cast<int>((*sem)[i]) : kUnlabeled, inst ? static_cast<int>((*inst)[i]) : kUnlabeled, rgb);
  }
  return cloud;
}

}  // namespace

ColumnMap ColumnMap::defaults(InputFormat format) {
  ColumnMap m;
  if (format == InputFormat::ply) {
    m.fields = {{"x", "x"}, {"y", "y"}, {"z", "z"},           {"r", "red"},
                {"g", "green"}, {"b", "blue"}, {"semantic", "semantic"}, {"instance", "instance"}};
  } else {
    m.fields = {{"x", "0"}, {"y", "1"}, {"z", "2"}};
  }
  return m;
}

ColumnMap ColumnMap::parse(const std::string& text) {
  ColumnMap m;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == item.size()) {
      fail(ErrorCode::SchemaError, "bad column spec '" + item + "', expected field=column");
    }
    const std::string field = canonical_field(item.substr(0, eq));
    static const std::vector<std::string> known{"x", "y", "z", "semantic", "instance", "r", "g", "b"};
    if (std::find(known.begin(), known.end(), field) == known.end()) {
      fail(ErrorCode::SchemaError, "unknown field '" + field + "' in column map");
    }
    m.fields[field] = item.substr(eq + 1);
  }
  return m;
}

LabeledCloud convert(const fs::path& input, InputFormat format, const ColumnMap& columns) {
  if (!fs::exists(input)) fail(ErrorCode::IoError, "input does not exist: " + input.string());
  LabeledCloud cloud = format == InputFormat::ply ? convert_ply(input, columns) : convert_text(input, columns);
  validate(cloud);
  return cloud;
}

void write_ply_cloud(const LabeledCloud& cloud, const fs::path& path, bool binary) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out << "ply\nformat " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n";
  out << "element vertex " << cloud.size() << "\n";
  out << "property float x\nproperty float y\nproperty float z\n";
  if (cloud.color) out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out << "property int semantic\nproperty int instance\nend_header\n";
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.points[i];
    if (binary) {
      write_le(out, p.x());
      write_le(out, p.y());
      write_le(out, p.z());
      if (cloud.color) out.write(reinterpret_cast<const char*>((*cloud.color)[i].data()), 3);
      write_le(out, static_cast<std::int32_t>(cloud.semantic[i]));
      write_le(out, static_cast<std::int32_t>(cloud.instance[i]));
    } else {
      out.precision(9);
      out << p.x() << ' ' << p.y() << ' ' << p.z();
      if (cloud.color) {
        const auto& c = (*cloud.color)[i];
        out << ' ' << int(c[0]) << ' ' << int(c[1]) << ' ' << int(c[2]);
      }
      out << ' ' << cloud.semantic[i] << ' ' << cloud.instance[i] << '\n';
    }
  }
}

}  // namespace forge::io
