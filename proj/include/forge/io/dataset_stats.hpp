#pragma once

#include "forge/core/cloud.hpp"
#include "forge/core/parallel.hpp"
#include "forge/io/manifest.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace forge::io {

struct SampleCounts {
  std::string sample_id;
  std::map<int, std::size_t> class_points;     // class -> points
  std::map<int, std::size_t> class_instances;  // class -> distinct instance ids
};

struct ClassInstanceSummary {
  std::size_t instances = 0;
  double mean_extent = 0.0;  // mean bounding-box diagonal, meters
  double mean_points = 0.0;  // mean points per instance
};

struct DatasetStats {
  std::map<int, std::string> classes;
  std::vector<SampleCounts> samples;
  std::map<int, ClassInstanceSummary> instance_classes;
  /// Mean bounding-box diagonal over every instance of an instance class.
  double mean_instance_extent = 0.0;
  std::size_t total_instances = 0;

  nlohmann::ordered_json to_json() const;
  static DatasetStats from_json(const nlohmann::json& j);
};

/// Per-instance geometry of one cloud.
struct InstanceGeometry {
  int instance_id;
  int class_id;
  std::size_t points;
  double extent;
};

SampleCounts count_sample(const LabeledCloud& cloud, const std::string& sample_id);
std::vector<InstanceGeometry> instance_geometry(const LabeledCloud& cloud);

/// Loads every sample (or one split) and tallies per-class point counts,
/// instance counts and instance extents. Throws CorruptSample naming the
/// failing sample.
DatasetStats compute_stats(const DatasetManifest& manifest, const std::optional<std::string>& split = std::nullopt,
                           Exec exec = Exec::parallel);

/// Same tally over in-memory clouds.
DatasetStats compute_stats(const std::map<int, std::string>& classes, const std::vector<int>& instance_classes,
                           const std::vector<std::pair<std::string, LabeledCloud>>& clouds);

struct Summary {
  std::size_t count = 0;
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0, mean = 0;
};

/// Five-number summary with linearly interpolated quartiles.
Summary summarize(std::vector<double> values);

}  // namespace forge::io
