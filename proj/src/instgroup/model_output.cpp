#include "forge/core/error.hpp"
#include "forge/core/rng.hpp"
#include "forge/instgroup/instgroup.hpp"
#include "forge/io/binary.hpp"
#include "forge/io/standard_format.hpp"

#include <cmath>
#include <cstring>

namespace forge::instgroup {

void ModelOutput::validate(std::size_t n_points) const {
  if (offsets.size() != n_points) fail(ErrorCode::ShapeError, "offsets do not match the point count");
  if (n_classes == 0 || scores.size() != n_points * n_classes) {
    fail(ErrorCode::ShapeError, "score matrix is not n_points x n_classes");
  }
  for (float s : scores) {
    if (!std::isfinite(s)) fail(ErrorCode::InvalidInput, "non-finite semantic score");
  }
  for (const auto& o : offsets) {
    if (!o.allFinite()) fail(ErrorCode::InvalidInput, "non-finite offset");
  }
}

void GroupingParams::validate() const {
  if (!(radius > 0.0)) fail(ErrorCode::InvalidArgument, "Gr must be positive");
  if (!(score_threshold > 0.0 && score_threshold <= 1.0)) fail(ErrorCode::InvalidArgument, "tau must lie in (0, 1]");
  for (const auto& [c, n] : min_points) {
    if (n < 1) fail(ErrorCode::InvalidArgument, "Gnp must be at least 1 for class " + std::to_string(c));
  }
}

nlohmann::ordered_json GroupingParams::to_json() const {
  nlohmann::ordered_json gnp = nlohmann::ordered_json::object();
  for (const auto& [c, n] : min_points) gnp[std::to_string(c)] = n;
  return {{"radius", radius}, {"score_threshold", score_threshold}, {"min_points", gnp}};
}

GroupingParams GroupingParams::from_json(const nlohmann::json& j) {
  GroupingParams p;
  try {
    p.radius = j.at("radius").get<double>();
    p.score_threshold = j.value("score_threshold", p.score_threshold);
    for (const auto& [key, value] : j.at("min_points").items()) p.min_points[std::stoi(key)] = value.get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::SchemaError, std::string("grouping params: ") + e.what());
  } catch (const std::logic_error&) {
    fail(ErrorCode::SchemaError, "grouping params: min_points keys must be class ids");
  }
  p.validate();
  return p;
}

GroupingParams infer_params(const io::DatasetStats& target, const io::DatasetStats& reference,
                            const GroupingParams& reference_params) {
  reference_params.validate();
  if (!(reference.mean_instance_extent > 0.0)) fail(ErrorCode::DegenerateStats, "reference mean instance extent is zero");
  GroupingParams out = reference_params;
  out.radius = reference_params.radius * (target.mean_instance_extent / reference.mean_instance_extent);
  if (!(out.radius > 0.0)) fail(ErrorCode::DegenerateStats, "target mean instance extent is zero");
  for (auto& [c, n] : out.min_points) {
    const auto t = target.instance_classes.find(c);
    const auto r = reference.instance_classes.find(c);
    if (t == target.instance_classes.end() || r == reference.instance_classes.end()) {
      fail(ErrorCode::DegenerateStats, "class " + std::to_string(c) + " is missing from the statistics");
    }
    if (!(r->second.mean_points > 0.0)) {
      fail(ErrorCode::DegenerateStats, "reference class " + std::to_string(c) + " has no points per instance");
    }
    const double scaled = static_cast<double>(n) * (t->second.mean_points / r->second.mean_points);
    n = static_cast<std::size_t>(std::max(1.0, std::round(scaled)));
  }
  return out;
}

ModelOutput oracle_output(const LabeledCloud& cloud, std::size_t n_classes, double noise_sigma, std::uint64_t seed) {
  if (!(noise_sigma >= 0.0)) fail(ErrorCode::InvalidArgument, "noise sigma must be non-negative");
  std::map<int, std::pair<Vec3, std::size_t>> centroid;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (cloud.semantic[i] < 0 || cloud.instance[i] < 0) {
      fail(ErrorCode::InvalidInput, "point " + std::to_string(i) + " has no instance label");
    }
    if (static_cast<std::size_t>(cloud.semantic[i]) >= n_classes) {
      fail(ErrorCode::InvalidInput, "class id " + std::to_string(cloud.semantic[i]) + " exceeds the class count");
    }
    auto& [sum, count] = centroid.try_emplace(cloud.instance[i], Vec3::Zero(), 0).first->second;
    sum += cloud.points[i].cast<double>();
    ++count;
  }
  for (auto& [id, c] : centroid) c.first /= static_cast<double>(c.second);

  ModelOutput out;
  out.n_classes = n_classes;
  out.scores.assign(cloud.size() * n_classes, 0.0f);
  out.offsets.resize(cloud.size());
  Rng rng(derive_seed(seed, hash_name("oracle-output")));
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    out.scores[i * n_classes + static_cast<std::size_t>(cloud.semantic[i])] = 1.0f;
    Vec3 off = centroid.at(cloud.instance[i]).first - cloud.points[i].cast<double>();
    if (noise_sigma > 0.0) {
      for (int d = 0; d < 3; ++d) off[d] += noise_sigma * rng.normal();
    }
    out.offsets[i] = off.cast<float>();
  }
  return out;
}

void write_model_output(const ModelOutput& output, const std::filesystem::path& dir, const std::string& sample_id) {
  std::filesystem::create_directories(dir);
  std::string scores(output.scores.size() * 4, '\0');
  for (std::size_t i = 0; i < output.scores.size(); ++i) {
    const float v = io::to_little(output.scores[i]);
    std::memcpy(scores.data() + 4 * i, &v, 4);
  }
  std::string offsets(output.offsets.size() * 12, '\0');
  for (std::size_t i = 0; i < output.offsets.size(); ++i) {
    for (int d = 0; d < 3; ++d) {
      const float v = io::to_little(output.offsets[i][d]);
      std::memcpy(offsets.data() + 12 * i + 4 * static_cast<std::size_t>(d), &v, 4);
    }
  }
  io::write_file_bytes(dir / (sample_id + ".scores"), scores);
  io::write_file_bytes(dir / (sample_id + ".offsets"), offsets);
}

ModelOutput read_model_output(const std::filesystem::path& scores, const std::filesystem::path& offsets,
                              std::size_t n_points, std::size_t n_classes) {
  const std::string s = io::read_file_bytes(scores);
  const std::string o = io::read_file_bytes(offsets);
  if (s.size() != n_points * n_classes * 4) {
    fail(ErrorCode::ShapeError, scores.string() + ": expected " + std::to_string(n_points) + " x " +
                                    std::to_string(n_classes) + " float32 scores");
  }
  if (o.size() != n_points * 12) fail(ErrorCode::ShapeError, offsets.string() + ": expected one offset per point");
  ModelOutput out;
  out.n_classes = n_classes;
  out.scores.resize(n_points * n_classes);
  out.offsets.resize(n_points);
  for (std::size_t i = 0; i < out.scores.size(); ++i) {
    float v;
    std::memcpy(&v, s.data() + 4 * i, 4);
    out.scores[i] = io::from_little(v);
  }
  for (std::size_t i = 0; i < n_points; ++i) {
    for (int d = 0; d < 3; ++d) {
      float v;
      std::memcpy(&v, o.data() + 12 * i + 4 * static_cast<std::size_t>(d), 4);
      out.offsets[i][d] = io::from_little(v);
    }
  }
  out.validate(n_points);
  return out;
}

nlohmann::ordered_json predictions_to_json(const std::vector<InstancePrediction>& preds) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& p : preds) {
    j.push_back({{"class_id", p.class_id}, {"confidence", p.confidence}, {"point_indices", p.point_indices}});
  }
  return j;
}

std::vector<InstancePrediction> predictions_from_json(const nlohmann::json& j) {
  if (!j.is_array()) fail(ErrorCode::SchemaError, "predictions must be a JSON array");
  std::vector<InstancePrediction> out;
  try {
    for (const auto& e : j) {
      InstancePrediction p;
      p.class_id = e.at("class_id").get<int>();
      p.confidence = e.at("confidence").get<double>();
      p.point_indices = e.at("point_indices").get<std::vector<std::uint32_t>>();
      out.push_back(std::move(p));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::SchemaError, std::string("prediction: ") + e.what());
  }
  return out;
}

}  // namespace forge::instgroup
