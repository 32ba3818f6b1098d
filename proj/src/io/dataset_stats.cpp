#include "forge/io/dataset_stats.hpp"

#include "forge/core/error.hpp"
#include "forge/io/standard_format.hpp"

#include <algorithm>
#include <exception>
#include <set>
#include <unordered_map>

namespace forge::io {

SampleCounts count_sample(const LabeledCloud& cloud, const std::string& sample_id) {
  SampleCounts counts;
  counts.sample_id = sample_id;
  std::map<int, std::set<int>> instances;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const int c = cloud.semantic[i];
    if (c < 0) continue;
    ++counts.class_points[c];
    if (cloud.instance[i] >= 0) instances[c].insert(cloud.instance[i]);
  }
  for (const auto& [c, ids] : instances) counts.class_instances[c] = ids.size();
  return counts;
}

std::vector<InstanceGeometry> instance_geometry(const LabeledCloud& cloud) {
  struct Acc {
    int class_id;
    std::size_t points = 0;
    Aabb box;
  };
  std::map<int, Acc> acc;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const int inst = cloud.instance[i];
    if (inst < 0 || cloud.semantic[i] < 0) continue;
    auto [it, inserted] = acc.try_emplace(inst, Acc{cloud.semantic[i], 0, Aabb{}});
    ++it->second.points;
    it->second.box.extend(cloud.points[i].cast<double>());
  }
  std::vector<InstanceGeometry> out;
  out.reserve(acc.size());
  for (const auto& [id, a] : acc) out.push_back({id, a.class_id, a.points, a.box.diagonal()});
  return out;
}

namespace {

DatasetStats finish(const std::map<int, std::string>& classes, const std::vector<int>& instance_classes,
                    std::vector<SampleCounts> counts, const std::vector<std::vector<InstanceGeometry>>& geometry) {
  DatasetStats stats;
  stats.classes = classes;
  stats.samples = std::move(counts);
  const std::set<int> wanted(instance_classes.begin(), instance_classes.end());
  std::map<int, std::pair<double, double>> sums;  // extent, points
  double extent_sum = 0.0;
  for (const auto& sample : geometry) {
    for (const auto& g : sample) {
      if (!wanted.empty() && !wanted.count(g.class_id)) continue;
      auto& s = stats.instance_classes[g.class_id];
      ++s.instances;
      sums[g.class_id].first += g.extent;
      sums[g.class_id].second += static_cast<double>(g.points);
      extent_sum += g.extent;
      ++stats.total_instances;
    }
  }
  for (auto& [c, s] : stats.instance_classes) {
    s.mean_extent = sums[c].first / static_cast<double>(s.instances);
    s.mean_points = sums[c].second / static_cast<double>(s.instances);
  }
  for (int c : instance_classes) stats.instance_classes.try_emplace(c);
  stats.mean_instance_extent = stats.total_instances ? extent_sum / static_cast<double>(stats.total_instances) : 0.0;
  return stats;
}

}  // namespace

DatasetStats compute_stats(const DatasetManifest& manifest, const std::optional<std::string>& split, Exec exec) {
  const std::vector<std::string> ids = split ? manifest.split(*split) : manifest.sample_ids();
  std::vector<SampleCounts> counts(ids.size());
  std::vector<std::vector<InstanceGeometry>> geometry(ids.size());
  std::vector<std::exception_ptr> errors(ids.size());

  const auto work = [&](std::size_t i) {
    try {
      const auto [dir, stem] = manifest.sample_location(ids[i]);
      LabeledCloud cloud;
      try {
        cloud = load_standard(dir, stem);
      } catch (const Error& e) {
        fail(ErrorCode::CorruptSample, "sample '" + ids[i] + "': " + e.what());
      }
      counts[i] = count_sample(cloud, ids[i]);
      geometry[i] = instance_geometry(cloud);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(ids.size()); ++i) work(static_cast<std::size_t>(i));
  } else {
    for (std::size_t i = 0; i < ids.size(); ++i) work(i);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return finish(manifest.classes, manifest.instance_classes, std::move(counts), geometry);
}

DatasetStats compute_stats(const std::map<int, std::string>& classes, const std::vector<int>& instance_classes,
                           const std::vector<std::pair<std::string, LabeledCloud>>& clouds) {
  std::vector<SampleCounts> counts;
  std::vector<std::vector<InstanceGeometry>> geometry;
  for (const auto& [id, cloud] : clouds) {
    counts.push_back(count_sample(cloud, id));
    geometry.push_back(instance_geometry(cloud));
  }
  return finish(classes, instance_classes, std::move(counts), geometry);
}

Summary summarize(std::vector<double> values) {
  Summary s;
  s.count = values.size();
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  const auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  s.min = values.front();
  s.max = values.back();
  s.q1 = quantile(0.25);
  s.median = quantile(0.5);
  s.q3 = quantile(0.75);
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  return s;
}

nlohmann::ordered_json DatasetStats::to_json() const {
  nlohmann::ordered_json j;
  nlohmann::ordered_json cls = nlohmann::ordered_json::object();
  for (const auto& [id, n] : classes) cls[std::to_string(id)] = n;
  j["classes"] = cls;
  j["mean_instance_extent"] = mean_instance_extent;
  j["total_instances"] = total_instances;
  nlohmann::ordered_json ic = nlohmann::ordered_json::object();
  for (const auto& [c, s] : instance_classes) {
    ic[std::to_string(c)] = {{"instances", s.instances}, {"mean_extent", s.mean_extent}, {"mean_points", s.mean_points}};
  }
  j["instance_classes"] = ic;
  nlohmann::ordered_json samples_json = nlohmann::ordered_json::array();
  for (const auto& s : samples) {
    nlohmann::ordered_json pts = nlohmann::ordered_json::object();
    for (const auto& [c, n] : s.class_points) pts[std::to_string(c)] = n;
    nlohmann::ordered_json inst = nlohmann::ordered_json::object();
    for (const auto& [c, n] : s.class_instances) inst[std::to_string(c)] = n;
    samples_json.push_back({{"sample", s.sample_id}, {"class_points", pts}, {"class_instances", inst}});
  }
  j["samples"] = samples_json;
  return j;
}

DatasetStats DatasetStats::from_json(const nlohmann::json& j) {
  DatasetStats s;
  try {
    for (const auto& [k, v] : j.at("classes").items()) s.classes[std::stoi(k)] = v.get<std::string>();
    s.mean_instance_extent = j.at("mean_instance_extent").get<double>();
    s.total_instances = j.value("total_instances", std::size_t{0});
    for (const auto& [k, v] : j.at("instance_classes").items()) {
      ClassInstanceSummary c;
      c.instances = v.at("instances").get<std::size_t>();
      c.mean_extent = v.at("mean_extent").get<double>();
      c.mean_points = v.at("mean_points").get<double>();
      s.instance_classes[std::stoi(k)] = c;
    }
    for (const auto& sj : j.value("samples", nlohmann::json::array())) {
      SampleCounts c;
      c.sample_id = sj.at("sample").get<std::string>();
      for (const auto& [k, v] : sj.at("class_points").items()) c.class_points[std::stoi(k)] = v.get<std::size_t>();
      for (const auto& [k, v] : sj.at("class_instances").items()) c.class_instances[std::stoi(k)] = v.get<std::size_t>();
      s.samples.push_back(std::move(c));
    }
  } catch (const std::exception& e) {
    fail(ErrorCode::SchemaError, std::string("stats json: ") + e.what());
  }
  return s;
}

}  // namespace forge::io
