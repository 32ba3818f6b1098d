#include "common.hpp"

#include "forge/io/standard_format.hpp"

#include <fstream>
#include <sstream>

namespace forge::cli {

void Logger::write(const char* level, const std::string& stage, const std::string& message,
                   nlohmann::ordered_json fields) {
  nlohmann::ordered_json j;
  j["level"] = level;
  j["stage"] = stage;
  j["msg"] = message;
  j["elapsed_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  if (fields.is_object()) {
    for (auto& [k, v] : fields.items()) j[k] = v;
  }
  sink_ << j.dump() << '\n';
  sink_.flush();
}

std::vector<SampleRef> manifest_samples(const io::DatasetManifest& manifest, const std::string& split) {
  const auto ids = split.empty() ? manifest.sample_ids() : manifest.split(split);
  std::vector<SampleRef> refs;
  for (const auto& id : ids) {
    auto [dir, stem] = manifest.sample_location(id);
    refs.push_back({id, dir, stem});
  }
  return refs;
}

SampleRef sample_ref(const fs::path& prefix) {
  auto [dir, stem] = io::split_sample_prefix(prefix);
  return {stem, dir, stem};
}

LabeledCloud load_sample(const SampleRef& ref) {
  if (!io::sample_exists(ref.dir, ref.stem)) {
    fail(ErrorCode::IoError, "sample " + (ref.dir / ref.stem).string() + " not found");
  }
  return io::load_standard(ref.dir, ref.stem);
}

void require_exists(const fs::path& path, const std::string& what) {
  if (!fs::exists(path)) fail(ErrorCode::IoError, what + " " + path.string() + " does not exist");
}

nlohmann::json read_json(const fs::path& path) {
  require_exists(path, "file");
  std::ifstream in(path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::SchemaError, path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const nlohmann::ordered_json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::string relative_to(const fs::path& target, const fs::path& base) {
  const auto t = fs::absolute(target).lexically_normal();
  const auto b = fs::absolute(base).lexically_normal();
  return t.lexically_relative(b).generic_string();
}

io::DatasetManifest local_manifest(const std::string& name, const std::map<int, std::string>& classes,
                                   const std::vector<int>& instance_classes, const fs::path& dir,
                                   const std::vector<std::string>& ids, const std::string& split) {
  io::DatasetManifest m;
  m.name = name;
  m.classes = classes;
  m.instance_classes = instance_classes;
  m.root = dir;
  for (const auto& id : ids) m.samples[id] = id;
  m.splits[split] = ids;
  return m;
}

std::map<int, std::string> tree_classes() { return {{0, "trunk"}, {1, "branch"}}; }

namespace {

template <typename T>
std::vector<T> parse_list(const std::string& text) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size() || (std::is_unsigned_v<T> && v < 0)) throw std::invalid_argument(item);
      out.push_back(static_cast<T>(v));
    } catch (const std::exception&) {
      fail(ErrorCode::SchemaError, "bad list entry '" + item + "'");
    }
  }
  return out;
}

}  // namespace

std::vector<int> parse_int_list(const std::string& text) { return parse_list<int>(text); }
std::vector<std::size_t> parse_size_list(const std::string& text) { return parse_list<std::size_t>(text); }

}  // namespace forge::cli
