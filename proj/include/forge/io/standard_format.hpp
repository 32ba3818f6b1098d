#pragma once

// On-disk sample layout, all values little-endian:
//   <id>.points  float32 x,y,z triples
//   <id>.sem     int32 semantic class per point
//   <id>.inst    int32 instance id per point
//   <id>.rgb     optional uint8 r,g,b triples

#include "forge/core/cloud.hpp"

#include <filesystem>
#include <string>
#include <utility>

namespace forge::io {

struct SamplePaths {
  std::filesystem::path points;
  std::filesystem::path semantic;
  std::filesystem::path instance;
  std::filesystem::path color;

  SamplePaths(const std::filesystem::path& dir, const std::string& sample_id);
};

void write_standard(const LabeledCloud& cloud, const std::filesystem::path& dir, const std::string& sample_id);
LabeledCloud load_standard(const std::filesystem::path& dir, const std::string& sample_id);

/// Splits "some/dir/sample" into ("some/dir", "sample").
std::pair<std::filesystem::path, std::string> split_sample_prefix(const std::filesystem::path& prefix);

bool sample_exists(const std::filesystem::path& dir, const std::string& sample_id);

/// Whole-file helpers shared with other binary formats.
std::string read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, const std::string& bytes);

}  // namespace forge::io
