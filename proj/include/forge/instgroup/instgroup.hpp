#pragma once

#include "forge/core/cloud.hpp"
#include "forge/core/parallel.hpp"
#include "forge/io/dataset_stats.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <vector>

namespace forge::instgroup {

/// Per-point class scores (row-major n x n_classes) and offsets towards the
/// predicted instance center. Stored as float32, like the files.
struct ModelOutput {
  std::size_t n_classes = 0;
  std::vector<float> scores;
  std::vector<Vec3f> offsets;

  std::size_t size() const { return offsets.size(); }
  float score(std::size_t point, int cls) const { return scores[point * n_classes + static_cast<std::size_t>(cls)]; }
  /// Throws ShapeError when the arrays do not describe n points, and
  /// InvalidInput for non-finite values.
  void validate(std::size_t n_points) const;
};

struct GroupingParams {
  double radius = 0.03;           // Gr, m
  double score_threshold = 0.2;   // tau
  std::map<int, std::size_t> min_points;  // Gnp per instance class

  void validate() const;
  nlohmann::ordered_json to_json() const;
  static GroupingParams from_json(const nlohmann::json& j);
};

struct InstancePrediction {
  int class_id = 0;
  std::vector<std::uint32_t> point_indices;  // ascending
  double confidence = 0.0;
  bool operator==(const InstancePrediction&) const = default;
};

enum class GroupingMode {
  shifted,  // clusters on point + offset only
  dual,     // union of the shifted and the original-coordinate clusterings
};

/// Soft-threshold grouping: per instance class, points scoring >= tau are
/// joined when their shifted coordinates lie within Gr (single linkage);
/// clusters smaller than Gnp are dropped. Output is sorted by class, then
/// descending confidence, then smallest point index.
std::vector<InstancePrediction> group(const LabeledCloud& cloud, const ModelOutput& output,
                                      const GroupingParams& params, std::span<const int> instance_classes,
                                      GroupingMode mode = GroupingMode::shifted, Exec exec = Exec::parallel);

/// Connected components of the graph joining points closer than `radius`
/// (inclusive). Component labels follow the first point of each component.
std::vector<std::uint32_t> radius_components(std::span<const Vec3> points, double radius, Exec exec = Exec::parallel);

/// Scales Gr by the ratio of mean instance extents and each Gnp by the ratio
/// of mean instance point counts; tau is kept.
GroupingParams infer_params(const io::DatasetStats& target, const io::DatasetStats& reference,
                            const GroupingParams& reference_params);

/// Perfect-model output: one-hot scores and offsets to the instance centroid
/// plus Normal(0, sigma) noise per component.
ModelOutput oracle_output(const LabeledCloud& cloud, std::size_t n_classes, double noise_sigma, std::uint64_t seed);

void write_model_output(const ModelOutput& output, const std::filesystem::path& dir, const std::string& sample_id);
ModelOutput read_model_output(const std::filesystem::path& scores, const std::filesystem::path& offsets,
                              std::size_t n_points, std::size_t n_classes);

nlohmann::ordered_json predictions_to_json(const std::vector<InstancePrediction>& preds);
std::vector<InstancePrediction> predictions_from_json(const nlohmann::json& j);

}  // namespace forge::instgroup
