#pragma once

#include "forge/core/cloud.hpp"
#include "forge/core/error.hpp"
#include "forge/io/manifest.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace forge::cli {

namespace fs = std::filesystem;

/// Line-delimited JSON on the error stream.
class Logger {
 public:
  explicit Logger(std::ostream& sink) : sink_(sink), start_(std::chrono::steady_clock::now()) {}

  void info(const std::string& stage, const std::string& message, nlohmann::ordered_json fields = {}) {
    write("info", stage, message, std::move(fields));
  }
  void error(const std::string& stage, const std::string& message, nlohmann::ordered_json fields = {}) {
    write("error", stage, message, std::move(fields));
  }

 private:
  void write(const char* level, const std::string& stage, const std::string& message, nlohmann::ordered_json fields);

  std::ostream& sink_;
  std::chrono::steady_clock::time_point start_;
};

struct Context {
  std::uint64_t seed = 0;
  fs::path out;
  std::ostream& stdout_;
  Logger& log;
};

/// A standard sample: manifest id plus the file location "dir/stem".
struct SampleRef {
  std::string id;
  fs::path dir;
  std::string stem;
};

/// Samples of a manifest split (all samples without a split).
std::vector<SampleRef> manifest_samples(const io::DatasetManifest& manifest, const std::string& split);
SampleRef sample_ref(const fs::path& prefix);
LabeledCloud load_sample(const SampleRef& ref);

void require_exists(const fs::path& path, const std::string& what);
nlohmann::json read_json(const fs::path& path);
void write_json(const fs::path& path, const nlohmann::ordered_json& j);
/// Relative path from `base` to `target`, both made absolute first.
std::string relative_to(const fs::path& target, const fs::path& base);

/// Manifest over samples written into `dir`, one split named `split`.
io::DatasetManifest local_manifest(const std::string& name, const std::map<int, std::string>& classes,
                                   const std::vector<int>& instance_classes, const fs::path& dir,
                                   const std::vector<std::string>& ids, const std::string& split = "all");

/// trunk/branch, the labels every generated tree carries.
std::map<int, std::string> tree_classes();

std::vector<int> parse_int_list(const std::string& text);
std::vector<std::size_t> parse_size_list(const std::string& text);

}  // namespace forge::cli
