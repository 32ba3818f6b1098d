#pragma once

#include "forge/core/cloud.hpp"
#include "forge/io/manifest.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace forge::protocol {

struct ProtocolConfig {
  std::string train_split = "train";
  std::string test_split = "test";
  std::string group_key = "orchard";  // sample_meta key of the source group
  std::size_t kb = 6;                 // base trees per fold
  std::size_t folds = 0;              // 0: as many as the pool allows
  std::vector<std::size_t> kb_levels{6, 12, 18, 24};
  /// Per-fold score (e.g. 0-shot AP) used to rank folds for the bound
  /// subsets. Without scores folds rank by index.
  std::vector<double> fold_scores;
  std::uint64_t seed = 0;

  nlohmann::ordered_json to_json() const;
  static ProtocolConfig from_json(const nlohmann::json& j);
};

struct Fold {
  std::size_t index = 0;
  std::vector<std::string> base_trees;  // group by group, each group sorted
};

/// Union of several folds: the best (upper) or worst (lower) ranked ones.
struct BoundSubset {
  std::size_t kb = 0;
  std::string bound;  // "lower" or "upper"
  std::vector<std::size_t> folds;
  std::vector<std::string> base_trees;
  std::string name() const;
};

struct KbRatio {
  std::size_t kb = 0;
  double ratio = 0.0;  // kb / test size
};

struct ProtocolPlan {
  std::string train_split;
  std::string test_split;
  std::map<std::string, std::size_t> group_sizes;  // train pool per group
  std::size_t pool_size = 0;
  std::size_t test_size = 0;
  std::vector<Fold> folds;
  std::vector<KbRatio> ratios;
  std::vector<BoundSubset> subsets;
  bool ranked = false;

  nlohmann::ordered_json to_json() const;
};

/// Disjoint folds of kb base trees, kb / G from each of the G groups of the
/// train pool. Throws InvalidProtocol when kb does not split evenly over the
/// groups, exceeds the pool, or when more folds are asked for than the pool
/// holds.
std::vector<Fold> assemble_folds(const io::DatasetManifest& manifest, const ProtocolConfig& config);

ProtocolPlan plan_protocol(const io::DatasetManifest& manifest, const ProtocolConfig& config);

enum class SyntheticMethod { tg, tg_vls, deform };
SyntheticMethod parse_method(const std::string& name);
std::string to_string(SyntheticMethod method);

struct SyntheticConfig {
  SyntheticMethod method = SyntheticMethod::tg;
  std::size_t count = 150;
  int max_order = 3;
  double surface_density = 20000.0;  // points per m^2 for tg
  // tg_vls
  double angular_resolution_deg = 0.06;
  std::size_t scanner_positions = 4;
  double scanner_standoff = 2.0;
  double range_noise_sigma = 0.002;
  // deform
  double voxel_size = 0.001;
  double force_bound = 5.0;
  /// Empty: default materials for the manifest's classes.
  nlohmann::json materials;

  nlohmann::ordered_json to_json() const;
  static SyntheticConfig from_json(const nlohmann::json& j);
};

/// Synthetic clouds grown from a set of base trees. Deterministic in
/// (bases, config, seed).
std::vector<LabeledCloud> synthesize(const io::DatasetManifest& manifest, const std::vector<std::string>& base_trees,
                                     const SyntheticConfig& config, std::uint64_t seed);

/// Writes plan.json and vanilla.json, and for every fold and bound subset a
/// base.json (finetune + test). With a corpus config the subset directory also
/// gets the synthetic clouds plus zero_shot.json and kb_shot.json.
void materialize(const io::DatasetManifest& manifest, const ProtocolPlan& plan, const std::filesystem::path& out,
                 const std::optional<SyntheticConfig>& corpus, std::uint64_t seed);

}  // namespace forge::protocol
