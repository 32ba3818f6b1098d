#include "forge/io/manifest.hpp"

#include "forge/core/error.hpp"
#include "forge/core/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

namespace forge::io {

namespace fs = std::filesystem;

void DatasetManifest::validate() const {
  int expected = 0;
  for (const auto& [id, name] : classes) {
    if (id != expected) fail(ErrorCode::SchemaError, "class ids must be contiguous from 0; missing " + std::to_string(expected));
    ++expected;
  }
  for (int c : instance_classes) {
    if (!classes.count(c)) fail(ErrorCode::SchemaError, "instance class " + std::to_string(c) + " absent from class map");
  }
  std::set<std::string> seen;
  for (const auto& [split_name, ids] : splits) {
    for (const auto& id : ids) {
      if (!samples.count(id)) fail(ErrorCode::SchemaError, "split '" + split_name + "' lists sample '" + id + "' without a path");
      if (!seen.insert(id).second) fail(ErrorCode::SchemaError, "sample '" + id + "' appears in more than one split");
    }
  }
}

std::vector<std::string> DatasetManifest::sample_ids() const {
  std::vector<std::string> ids;
  ids.reserve(samples.size());
  for (const auto& [id, path] : samples) ids.push_back(id);
  return ids;
}

const std::vector<std::string>& DatasetManifest::split(const std::string& split_name) const {
  auto it = splits.find(split_name);
  if (it == splits.end()) fail(ErrorCode::SchemaError, "unknown split '" + split_name + "'");
  return it->second;
}

std::pair<fs::path, std::string> DatasetManifest::sample_location(const std::string& sample_id) const {
  auto it = samples.find(sample_id);
  if (it == samples.end()) fail(ErrorCode::SchemaError, "unknown sample '" + sample_id + "'");
  const fs::path rel(it->second);
  fs::path dir = root / rel.parent_path();
  return {dir, rel.filename().string()};
}

nlohmann::ordered_json DatasetManifest::to_json() const {
  nlohmann::ordered_json j;
  j["name"] = name;
  nlohmann::ordered_json cls = nlohmann::ordered_json::object();
  for (const auto& [id, n] : classes) cls[std::to_string(id)] = n;
  j["classes"] = cls;
  j["instance_classes"] = instance_classes;
  nlohmann::ordered_json sp = nlohmann::ordered_json::object();
  for (const auto& [k, v] : splits) sp[k] = v;
  j["splits"] = sp;
  nlohmann::ordered_json sm = nlohmann::ordered_json::object();
  for (const auto& [k, v] : samples) sm[k] = v;
  j["samples"] = sm;
  if (!sample_meta.empty()) {
    nlohmann::ordered_json meta = nlohmann::ordered_json::object();
    for (const auto& [id, kv] : sample_meta) {
      nlohmann::ordered_json entry = nlohmann::ordered_json::object();
      for (const auto& [k, v] : kv) entry[k] = v;
      meta[id] = entry;
    }
    j["sample_meta"] = meta;
  }
  return j;
}

DatasetManifest DatasetManifest::from_json(const nlohmann::json& j, fs::path root) {
  DatasetManifest m;
  m.root = std::move(root);
  try {
    m.name = j.value("name", std::string{});
    for (const auto& [k, v] : j.at("classes").items()) {
      std::size_t used = 0;
      const int id = std::stoi(k, &used);
      if (used != k.size()) fail(ErrorCode::SchemaError, "class key '" + k + "' is not an integer");
      m.classes[id] = v.get<std::string>();
    }
    if (j.contains("instance_classes")) m.instance_classes = j.at("instance_classes").get<std::vector<int>>();
    if (j.contains("splits")) {
      for (const auto& [k, v] : j.at("splits").items()) m.splits[k] = v.get<std::vector<std::string>>();
    }
    if (j.contains("samples")) {
      for (const auto& [k, v] : j.at("samples").items()) m.samples[k] = v.get<std::string>();
    }
    if (j.contains("sample_meta")) {
      for (const auto& [id, kv] : j.at("sample_meta").items()) {
        for (const auto& [k, v] : kv.items()) m.sample_meta[id][k] = v.is_string() ? v.get<std::string>() : v.dump();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::SchemaError, std::string("manifest: ") + e.what());
  } catch (const std::invalid_argument&) {
    fail(ErrorCode::SchemaError, "manifest: class keys must be integers");
  }
  m.validate();
  return m;
}

DatasetManifest DatasetManifest::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open manifest " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::SchemaError, path.string() + ": " + e.what());
  }
  fs::path root = path.parent_path();
  if (root.empty()) root = ".";
  return from_json(j, root);
}

void DatasetManifest::save(const fs::path& path) const {
  validate();
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write manifest " + path.string());
  out << to_json().dump(2) << "\n";
}

std::vector<std::size_t> allocate_counts(std::size_t total, const std::vector<double>& fractions) {
  std::vector<std::size_t> counts(fractions.size(), 0);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    const double exact = fractions[i] * static_cast<double>(total);
    // round away representation noise (72/98 * 98 = 71.99999999999999)
    const double snapped = std::abs(exact - std::round(exact)) < 1e-9 ? std::round(exact) : exact;
    counts[i] = static_cast<std::size_t>(std::floor(snapped));
    assigned += counts[i];
    remainders.emplace_back(snapped - std::floor(snapped), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < total && k < remainders.size(); ++k, ++assigned) ++counts[remainders[k].second];
  return counts;
}

DatasetManifest make_splits(const DatasetManifest& manifest, const SplitOptions& options) {
  if (options.ratios.empty()) fail(ErrorCode::InvalidArgument, "no split ratios given");
  double sum = 0.0;
  for (const auto& [name, frac] : options.ratios) {
    if (frac < 0.0) fail(ErrorCode::InvalidArgument, "negative fraction for split '" + name + "'");
    sum += frac;
  }
  if (std::abs(sum - 1.0) > 1e-9) fail(ErrorCode::InvalidArgument, "split fractions must sum to 1");

  std::vector<std::string> names;
  std::vector<double> fractions;
  for (const auto& [name, frac] : options.ratios) {
    names.push_back(name);
    fractions.push_back(frac);
  }

  // strata in sorted key order; unstratified = one group
  std::map<std::string, std::vector<std::string>> groups;
  for (const auto& id : manifest.sample_ids()) {
    std::string key;
    if (options.stratify_by) {
      auto meta = manifest.sample_meta.find(id);
      if (meta == manifest.sample_meta.end() || !meta->second.count(*options.stratify_by)) {
        fail(ErrorCode::SchemaError, "sample '" + id + "' has no '" + *options.stratify_by + "' attribute");
      }
      key = meta->second.at(*options.stratify_by);
    }
    groups[key].push_back(id);
  }

  Rng rng(derive_seed(options.seed, hash_name("make_splits")));
  for (auto& [key, ids] : groups) rng.shuffle(std::span<std::string>(ids));

  // counts[group][split]
  std::vector<std::vector<std::size_t>> counts;
  if (options.stratify_by && options.balanced) {
    std::size_t total = 0;
    for (const auto& [key, ids] : groups) total += ids.size();
    const auto split_totals = allocate_counts(total, fractions);
    std::vector<std::size_t> order(names.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fractions[a] > fractions[b]; });

    std::vector<std::size_t> left;
    for (const auto& [key, ids] : groups) left.push_back(ids.size());
    counts.assign(groups.size(), std::vector<std::size_t>(names.size(), 0));
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      const std::size_t s = order[pos];
      if (pos + 1 == order.size()) {
        for (std::size_t g = 0; g < left.size(); ++g) counts[g][s] = std::exchange(left[g], 0);
        break;
      }
      std::size_t need = split_totals[s];
      // equal shares, capped by what each group still has
      while (need > 0) {
        std::vector<std::size_t> open;
        for (std::size_t g = 0; g < left.size(); ++g) {
          if (left[g] > 0) open.push_back(g);
        }
        if (open.empty()) break;
        const std::size_t share = std::max<std::size_t>(1, need / open.size());
        for (std::size_t g : open) {
          const std::size_t take = std::min({share, left[g], need});
          counts[g][s] += take;
          left[g] -= take;
          need -= take;
          if (need == 0) break;
        }
      }
    }
  } else {
    for (const auto& [key, ids] : groups) counts.push_back(allocate_counts(ids.size(), fractions));
  }

  DatasetManifest out = manifest;
  out.splits.clear();
  for (const auto& n : names) out.splits[n] = {};
  std::size_t g = 0;
  for (const auto& [key, ids] : groups) {
    std::size_t cursor = 0;
    for (std::size_t s = 0; s < names.size(); ++s) {
      auto& dst = out.splits[names[s]];
      dst.insert(dst.end(), ids.begin() + static_cast<std::ptrdiff_t>(cursor),
                 ids.begin() + static_cast<std::ptrdiff_t>(cursor + counts[g][s]));
      cursor += counts[g][s];
    }
    ++g;
  }
  for (auto& [n, ids] : out.splits) std::sort(ids.begin(), ids.end());
  out.validate();
  return out;
}

}  // namespace forge::io
