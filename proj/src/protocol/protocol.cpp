#include "forge/protocol/protocol.hpp"

#include "forge/core/error.hpp"
#include "forge/core/rng.hpp"

#include <algorithm>
#include <numeric>
#include <set>

namespace forge::protocol {

namespace {

[[noreturn]] void invalid(const std::string& message) { fail(ErrorCode::InvalidProtocol, message); }

}  // namespace

nlohmann::ordered_json ProtocolConfig::to_json() const {
  nlohmann::ordered_json j;
  j["train_split"] = train_split;
  j["test_split"] = test_split;
  j["group_key"] = group_key;
  j["kb"] = kb;
  j["folds"] = folds;
  j["kb_levels"] = kb_levels;
  if (!fold_scores.empty()) j["fold_scores"] = fold_scores;
  j["seed"] = seed;
  return j;
}

ProtocolConfig ProtocolConfig::from_json(const nlohmann::json& j) {
  ProtocolConfig c;
  try {
    c.train_split = j.value("train_split", c.train_split);
    c.test_split = j.value("test_split", c.test_split);
    c.group_key = j.value("group_key", c.group_key);
    c.kb = j.value("kb", c.kb);
    c.folds = j.value("folds", c.folds);
    c.kb_levels = j.value("kb_levels", c.kb_levels);
    c.fold_scores = j.value("fold_scores", c.fold_scores);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::SchemaError, std::string("protocol config: ") + e.what());
  }
  return c;
}

std::string BoundSubset::name() const { return "kb" + std::to_string(kb) + "_" + bound; }

std::vector<Fold> assemble_folds(const io::DatasetManifest& manifest, const ProtocolConfig& config) {
  const auto& pool = manifest.split(config.train_split);
  std::map<std::string, std::vector<std::string>> groups;
  for (const auto& id : pool) {
    const auto meta = manifest.sample_meta.find(id);
    if (meta == manifest.sample_meta.end() || !meta->second.count(config.group_key)) {
      invalid("sample " + id + " has no '" + config.group_key + "' attribute");
    }
    groups[meta->second.at(config.group_key)].push_back(id);
  }
  if (config.kb == 0) invalid("K_b must be positive");
  if (config.kb > pool.size()) {
    invalid("K_b = " + std::to_string(config.kb) + " exceeds the " + std::to_string(pool.size()) + " base trees");
  }
  if (config.kb % groups.size() != 0) {
    invalid("K_b = " + std::to_string(config.kb) + " does not split evenly over " + std::to_string(groups.size()) +
            " groups");
  }
  const std::size_t per_group = config.kb / groups.size();
  std::size_t capacity = pool.size();
  for (const auto& [name, ids] : groups) capacity = std::min(capacity, ids.size() / per_group);
  const std::size_t n_folds = config.folds == 0 ? capacity : config.folds;
  if (n_folds > capacity || n_folds > pool.size() / config.kb) {
    invalid(std::to_string(n_folds) + " folds requested, the pool holds " + std::to_string(capacity));
  }
  if (n_folds == 0) invalid("the pool holds no complete fold");

  std::vector<Fold> folds(n_folds);
  for (auto& [name, ids] : groups) {
    std::sort(ids.begin(), ids.end());
    Rng rng(derive_seed(config.seed, hash_name("protocol-folds"), hash_name(name)));
    rng.shuffle(std::span<std::string>(ids));
    for (std::size_t f = 0; f < n_folds; ++f) {
      std::vector<std::string> take(ids.begin() + static_cast<std::ptrdiff_t>(f * per_group),
                                    ids.begin() + static_cast<std::ptrdiff_t>((f + 1) * per_group));
      std::sort(take.begin(), take.end());
      folds[f].index = f;
      folds[f].base_trees.insert(folds[f].base_trees.end(), take.begin(), take.end());
    }
  }
  return folds;
}

ProtocolPlan plan_protocol(const io::DatasetManifest& manifest, const ProtocolConfig& config) {
  ProtocolPlan plan;
  plan.train_split = config.train_split;
  plan.test_split = config.test_split;
  plan.folds = assemble_folds(manifest, config);
  const auto& pool = manifest.split(config.train_split);
  plan.pool_size = pool.size();
  for (const auto& id : pool) ++plan.group_sizes[manifest.sample_meta.at(id).at(config.group_key)];
  plan.test_size = manifest.split(config.test_split).size();
  if (plan.test_size == 0) invalid("split '" + config.test_split + "' is empty");

  for (std::size_t kb : config.kb_levels) {
    if (kb > plan.pool_size) invalid("K_b = " + std::to_string(kb) + " exceeds the base-tree pool");
    plan.ratios.push_back({kb, static_cast<double>(kb) / static_cast<double>(plan.test_size)});
  }

  if (!config.fold_scores.empty() && config.fold_scores.size() != plan.folds.size()) {
    invalid("got " + std::to_string(config.fold_scores.size()) + " fold scores for " +
            std::to_string(plan.folds.size()) + " folds");
  }
  plan.ranked = !config.fold_scores.empty();
  // best first; equal scores keep fold order
  std::vector<std::size_t> order(plan.folds.size());
  std::iota(order.begin(), order.end(), 0);
  if (plan.ranked) {
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return config.fold_scores[a] > config.fold_scores[b]; });
  }
  for (std::size_t kb : config.kb_levels) {
    if (kb <= config.kb) continue;
    if (kb % config.kb != 0) invalid("K_b level " + std::to_string(kb) + " is not a multiple of the fold size");
    const std::size_t m = kb / config.kb;
    if (m > plan.folds.size()) invalid("K_b level " + std::to_string(kb) + " needs more folds than exist");
    for (const std::string bound : {"lower", "upper"}) {
      BoundSubset s;
      s.kb = kb;
      s.bound = bound;
      if (bound == "upper") {
        s.folds.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m));
      } else {
        s.folds.assign(order.end() - static_cast<std::ptrdiff_t>(m), order.end());
      }
      std::sort(s.folds.begin(), s.folds.end());
      for (auto f : s.folds) {
        const auto& trees = plan.folds[f].base_trees;
        s.base_trees.insert(s.base_trees.end(), trees.begin(), trees.end());
      }
      std::sort(s.base_trees.begin(), s.base_trees.end());
      plan.subsets.push_back(std::move(s));
    }
  }
  return plan;
}

nlohmann::ordered_json ProtocolPlan::to_json() const {
  nlohmann::ordered_json j;
  j["train_split"] = train_split;
  j["test_split"] = test_split;
  j["pool_size"] = pool_size;
  j["test_size"] = test_size;
  j["group_sizes"] = group_sizes;
  j["ranked"] = ranked;
  auto& fj = j["folds"] = nlohmann::ordered_json::array();
  for (const auto& f : folds) fj.push_back({{"index", f.index}, {"base_trees", f.base_trees}});
  auto& rj = j["ratios"] = nlohmann::ordered_json::array();
  for (const auto& r : ratios) rj.push_back({{"kb", r.kb}, {"ratio", r.ratio}});
  auto& sj = j["subsets"] = nlohmann::ordered_json::array();
  for (const auto& s : subsets) {
    sj.push_back({{"name", s.name()}, {"kb", s.kb}, {"bound", s.bound}, {"folds", s.folds}, {"base_trees", s.base_trees}});
  }
  return j;
}

}  // namespace forge::protocol
