#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace forge::io {

enum class PlyFormat { ascii, binary_little_endian, binary_big_endian };
enum class PlyType { int8, uint8, int16, uint16, int32, uint32, float32, float64 };

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::float32;
  bool is_list = false;
  PlyType count_type = PlyType::uint8;
};

/// One element block with its values decoded column-wise. Scalar properties
/// land in `scalars[p]`, list properties in `lists[p]`.
struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
  std::vector<std::vector<double>> scalars;
  std::vector<std::vector<std::vector<std::int64_t>>> lists;

  /// Index of a property by name, or -1.
  int find(const std::string& property) const;
};

struct PlyFile {
  PlyFormat format = PlyFormat::binary_little_endian;
  std::vector<PlyElement> elements;

  const PlyElement* element(const std::string& name) const;
};

/// Reads ascii, binary_little_endian or binary_big_endian PLY. Throws ParseError.
PlyFile read_ply(const std::filesystem::path& path);

}  // namespace forge::io
