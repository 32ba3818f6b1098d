#pragma once

// Synthetic stand-ins for real base trees and small datasets.

#include "forge/core/rng.hpp"
#include "forge/io/manifest.hpp"
#include "forge/io/standard_format.hpp"
#include "forge/treegen/treegen.hpp"
#include "forge/vls/scanner.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numbers>

namespace forge::test {

inline treegen::TreeStats simple_stats(double height, int branches, std::uint64_t seed) {
  constexpr double kPi = std::numbers::pi;
  Rng rng(seed);
  treegen::TreeStats s;
  s.trunk_height = height;
  s.trunk_base_radius = 0.04 + 0.02 * rng.uniform();
  for (int i = 0; i <= 8; ++i) s.trunk_skeleton.push_back(Vec3(0.01 * rng.uniform(), 0.0, height * i / 8.0));
  for (int i = 0; i < branches; ++i) {
    treegen::BranchRecord r;
    r.order = 1;
    r.insertion = rng.uniform(0.3, 0.9);
    r.azimuth = rng.uniform(0.0, 2 * kPi);
    r.elevation = rng.uniform(0.1, 0.8);
    r.length = rng.uniform(0.4, 1.2);
    r.base_radius = rng.uniform(0.01, 0.02);
    s.branch_records.push_back(r);
  }
  for (int i = 0; i < branches / 2; ++i) {
    treegen::BranchRecord r;
    r.order = 2;
    r.insertion = rng.uniform(0.2, 0.8);
    r.azimuth = rng.uniform(0.0, 2 * kPi);
    r.elevation = rng.uniform(0.0, 0.5);
    r.length = rng.uniform(0.1, 0.4);
    r.base_radius = rng.uniform(0.004, 0.008);
    s.branch_records.push_back(r);
  }
  s.canonicalize();
  return s;
}

/// Labeled surface sample of a generated tree: trunk class 0, branches class 1.
inline LabeledCloud base_tree_cloud(std::uint64_t seed, double density = 3000.0) {
  Rng rng(seed);
  const auto stats = simple_stats(rng.uniform(2.5, 4.0), 4 + static_cast<int>(rng.index(5)), rng.next());
  const auto model = treegen::generate_tree(stats, rng.next(), 2);
  return vls::sample_surface(model.mesh, density, rng.next());
}

/// Manifest of `per_group[g]` base trees per group written under `dir`, with
/// the given number of samples from each group in the train split and the
/// rest in test.
inline io::DatasetManifest write_tree_dataset(const std::filesystem::path& dir, const std::vector<std::size_t>& per_group,
                                              const std::vector<std::size_t>& train_per_group, std::uint64_t seed,
                                              double density = 3000.0) {
  io::DatasetManifest m;
  m.name = "trees";
  m.classes = {{0, "trunk"}, {1, "branch"}};
  m.instance_classes = {1};
  m.root = dir;
  std::size_t k = 0;
  for (std::size_t g = 0; g < per_group.size(); ++g) {
    for (std::size_t i = 0; i < per_group[g]; ++i, ++k) {
      char id[32];
      std::snprintf(id, sizeof id, "tree%03zu", k);
      io::write_standard(base_tree_cloud(derive_seed(seed, k), density), dir / "data", id);
      m.samples[id] = std::string("data/") + id;
      m.sample_meta[id]["orchard"] = "g" + std::to_string(g);
      m.splits[i < train_per_group[g] ? "train" : "test"].push_back(id);
    }
  }
  m.save(dir / "manifest.json");
  return m;
}

/// Manifest without sample files: the 98-tree, two-orchard layout with a
/// balanced 72 / 26 split (36 training trees per orchard).
inline io::DatasetManifest cos_layout() {
  io::DatasetManifest m;
  m.name = "cos";
  m.classes = {{0, "trunk"}, {1, "branch"}};
  m.instance_classes = {1};
  for (int i = 0; i < 98; ++i) {
    const std::string id = "tree" + std::to_string(i);
    m.samples[id] = "data/" + id;
    m.sample_meta[id]["orchard"] = i < 48 ? "campus" : "geneva";
    const bool train = i < 48 ? i < 36 : i - 48 < 36;
    m.splits[train ? "train" : "test"].push_back(id);
  }
  return m;
}

}  // namespace forge::test

namespace forge::test {

/// Two base trees -> 6 generated -> scan at 0.3 deg -> 2 deformation variants
/// each -> oracle model output -> grouping -> evaluation. `dir` receives the
/// base dataset, the grouping parameters and the config itself.
inline std::filesystem::path write_mini_pipeline(const std::filesystem::path& dir, std::uint64_t seed) {
  write_tree_dataset(dir / "bases", {1, 1}, {1, 1}, 21, 2500.0);
  std::ofstream(dir / "params.json") << R"({"radius": 0.005, "score_threshold": 0.2, "min_points": {"1": 1}})" << '\n';
  const std::string deformed = "${out}/deformed/manifest.json";
  nlohmann::ordered_json cfg;
  cfg["seed"] = seed;
  cfg["out"] = "out";
  cfg["stages"] = nlohmann::ordered_json::array(
      {{{"stage", "gen-tree"},
        {"args", {{"bases", "${config_dir}/bases/manifest.json"}, {"split", "train"}, {"count", 6}, {"max-order", 2}, {"out", "trees"}}}},
       {{"stage", "scan"},
        {"args", {{"model", "${out}/trees"}, {"resolution-deg", 0.3}, {"positions", 3}, {"noise-sigma", 0.002}, {"out", "scans"}}}},
       {{"stage", "deform"},
        {"args", {{"manifest", "${out}/scans/manifest.json"}, {"variants", 2}, {"voxel-size", 0.02}, {"force-bound", 5.0}, {"out", "deformed"}}}},
       {{"stage", "oracle-output"}, {"args", {{"manifest", deformed}, {"sigma", 0.0}, {"out", "model"}}}},
       {{"stage", "group"},
        {"args", {{"manifest", deformed}, {"model-dir", "${out}/model"}, {"params", "${config_dir}/params.json"}, {"out", "pred"}}}},
       {{"stage", "eval"},
        {"args", {{"manifest", deformed}, {"split", "all"}, {"pred-dir", "${out}/pred"}, {"csv", "${out}/report.csv"}, {"out", "report.json"}}}}});
  std::ofstream(dir / "pipeline.json") << cfg.dump(2) << '\n';
  return dir / "pipeline.json";
}

/// Every regular file under `root` as "relative path\ncontents", sorted.
inline std::string tree_snapshot(const std::filesystem::path& root) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::string all;
  for (const auto& f : files) all += f.lexically_relative(root).generic_string() + "\n" + io::read_file_bytes(f);
  return all;
}

}  // namespace forge::test
