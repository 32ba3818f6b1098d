#pragma once

#include "forge/core/cloud.hpp"

#include <filesystem>
#include <map>
#include <string>

namespace forge::io {

enum class InputFormat { ascii_xyz, csv, ply };

InputFormat parse_input_format(const std::string& name);

/// Field -> column spec. Fields: x, y, z, semantic, instance, r, g, b.
/// A spec is a zero-based column index or a column/property name.
struct ColumnMap {
  std::map<std::string, std::string> fields;

  /// x=0,y=1,z=2 for text formats; x,y,z,red,green,blue,semantic,instance
  /// property names for PLY.
  static ColumnMap defaults(InputFormat format);

  /// Parses "x=0,y=1,z=2,semantic=3" (aliases: sem, inst, label).
  static ColumnMap parse(const std::string& text);
};

/// Reads a text or PLY point file. Missing label columns become -1.
/// Text rows accept comma or whitespace delimiters; '#' lines are comments.
LabeledCloud convert(const std::filesystem::path& input, InputFormat format, const ColumnMap& columns);

/// Writes a point PLY with x/y/z float, optional uchar red/green/blue and
/// int semantic/instance properties.
void write_ply_cloud(const LabeledCloud& cloud, const std::filesystem::path& path, bool binary = true);

}  // namespace forge::io
