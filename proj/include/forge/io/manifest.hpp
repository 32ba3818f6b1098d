#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace forge::io {

/// Dataset metadata shared by every pipeline stage.
///
/// `samples` maps a sample id to a path prefix relative to the manifest
/// directory ("data/tree01" -> data/tree01.points, ...). `sample_meta` holds
/// optional per-sample string attributes such as the orchard a tree came from.
struct DatasetManifest {
  std::string name;
  std::map<int, std::string> classes;
  std::vector<int> instance_classes;
  std::map<std::string, std::vector<std::string>> splits;
  std::map<std::string, std::string> samples;
  std::map<std::string, std::map<std::string, std::string>> sample_meta;

  /// Directory the relative sample paths resolve against.
  std::filesystem::path root = ".";

  /// Throws SchemaError on non-contiguous class ids, unknown instance classes,
  /// overlapping splits or split entries without a sample path.
  void validate() const;

  std::vector<std::string> sample_ids() const;
  /// Sample ids of one split; throws SchemaError for an unknown split.
  const std::vector<std::string>& split(const std::string& name) const;

  /// Directory and file stem of a sample's standard-format files.
  std::pair<std::filesystem::path, std::string> sample_location(const std::string& sample_id) const;

  nlohmann::ordered_json to_json() const;
  static DatasetManifest from_json(const nlohmann::json& j, std::filesystem::path root = ".");

  static DatasetManifest load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

struct SplitOptions {
  /// split name -> fraction; fractions sum to 1.
  std::map<std::string, double> ratios;
  /// sample_meta key whose values define strata.
  std::optional<std::string> stratify_by;
  /// With stratification: give every group an equal share of each split
  /// (larger splits first); the smallest split takes what remains.
  bool balanced = false;
  std::uint64_t seed = 0;
};

/// Reassigns every sample to exactly one split.
DatasetManifest make_splits(const DatasetManifest& manifest, const SplitOptions& options);

/// Largest-remainder allocation of `total` items over `fractions`.
std::vector<std::size_t> allocate_counts(std::size_t total, const std::vector<double>& fractions);

}  // namespace forge::io
