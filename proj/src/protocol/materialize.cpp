#include "forge/core/error.hpp"
#include "forge/core/rng.hpp"
#include "forge/deform/deform.hpp"
#include "forge/io/standard_format.hpp"
#include "forge/protocol/protocol.hpp"
#include "forge/treegen/treegen.hpp"
#include "forge/vls/scanner.hpp"

#include <cstdio>
#include <fstream>

namespace forge::protocol {

namespace fs = std::filesystem;

SyntheticMethod parse_method(const std::string& name) {
  if (name == "tg") return SyntheticMethod::tg;
  if (name == "tg+vls" || name == "tg_vls") return SyntheticMethod::tg_vls;
  if (name == "deform") return SyntheticMethod::deform;
  fail(ErrorCode::SchemaError, "unknown synthetic method '" + name + "' (tg, tg+vls, deform)");
}

std::string to_string(SyntheticMethod method) {
  switch (method) {
    case SyntheticMethod::tg: return "tg";
    case SyntheticMethod::tg_vls: return "tg+vls";
    case SyntheticMethod::deform: return "deform";
  }
  return "?";
}

nlohmann::ordered_json SyntheticConfig::to_json() const {
  nlohmann::ordered_json j;
  j["method"] = to_string(method);
  j["count"] = count;
  j["max_order"] = max_order;
  j["surface_density"] = surface_density;
  j["angular_resolution_deg"] = angular_resolution_deg;
  j["scanner_positions"] = scanner_positions;
  j["scanner_standoff"] = scanner_standoff;
  j["range_noise_sigma"] = range_noise_sigma;
  j["voxel_size"] = voxel_size;
  j["force_bound"] = force_bound;
  if (!materials.is_null()) j["materials"] = materials;
  return j;
}

SyntheticConfig SyntheticConfig::from_json(const nlohmann::json& j) {
  SyntheticConfig c;
  try {
    c.method = parse_method(j.value("method", to_string(c.method)));
    c.count = j.value("count", c.count);
    c.max_order = j.value("max_order", c.max_order);
    c.surface_density = j.value("surface_density", c.surface_density);
    c.angular_resolution_deg = j.value("angular_resolution_deg", c.angular_resolution_deg);
    c.scanner_positions = j.value("scanner_positions", c.scanner_positions);
    c.scanner_standoff = j.value("scanner_standoff", c.scanner_standoff);
    c.range_noise_sigma = j.value("range_noise_sigma", c.range_noise_sigma);
    c.voxel_size = j.value("voxel_size", c.voxel_size);
    c.force_bound = j.value("force_bound", c.force_bound);
    if (j.contains("materials")) c.materials = j.at("materials");
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::SchemaError, std::string("synthetic config: ") + e.what());
  }
  return c;
}

namespace {

LabeledCloud load_sample(const io::DatasetManifest& manifest, const std::string& id) {
  const auto [dir, stem] = manifest.sample_location(id);
  return io::load_standard(dir, stem);
}

}  // namespace

std::vector<LabeledCloud> synthesize(const io::DatasetManifest& manifest, const std::vector<std::string>& base_trees,
                                     const SyntheticConfig& config, std::uint64_t seed) {
  if (base_trees.empty()) fail(ErrorCode::InvalidProtocol, "no base trees");
  std::vector<LabeledCloud> out;
  if (config.method == SyntheticMethod::deform) {
    const auto materials = config.materials.is_null()
                               ? deform::default_materials(static_cast<int>(manifest.classes.size()))
                               : deform::materials_from_json(config.materials);
    // variants spread as evenly as possible over the base trees
    for (std::size_t b = 0; b < base_trees.size(); ++b) {
      const std::size_t n = config.count / base_trees.size() + (b < config.count % base_trees.size() ? 1 : 0);
      if (n == 0) continue;
      auto variants = deform::augment(load_sample(manifest, base_trees[b]), n, config.voxel_size, materials,
                                      config.force_bound, derive_seed(seed, hash_name("protocol-deform"), b));
      for (auto& v : variants) out.push_back(std::move(v));
    }
    return out;
  }

  std::vector<treegen::TreeStats> bases;
  for (const auto& id : base_trees) bases.push_back(treegen::extract_stats(load_sample(manifest, id)));
  const auto trees = treegen::generate_population(bases, config.count, derive_seed(seed, hash_name("protocol-tg")),
                                                  config.max_order);
  for (std::size_t i = 0; i < trees.size(); ++i) {
    const auto& model = trees[i].model;
    if (config.method == SyntheticMethod::tg) {
      out.push_back(vls::sample_surface(model.mesh, config.surface_density,
                                        derive_seed(seed, hash_name("protocol-surface"), i)));
    } else {
      vls::ScannerConfig scanner;
      scanner.angular_resolution_deg = config.angular_resolution_deg;
      scanner.positions = vls::default_tls_positions(model, config.scanner_positions, config.scanner_standoff);
      scanner.range_noise_sigma = config.range_noise_sigma;
      scanner.seed = derive_seed(seed, hash_name("protocol-scan"), i);
      out.push_back(vls::scan(model.mesh, scanner));
    }
  }
  return out;
}

namespace {

std::string relative_to(const fs::path& target, const fs::path& base) {
  const auto t = fs::absolute(target).lexically_normal();
  const auto b = fs::absolute(base).lexically_normal();
  return t.lexically_relative(b).generic_string();
}

std::string fold_name(std::size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "fold_%02zu", index);
  return buf;
}

/// Manifest in `dir` referencing real samples of `source` plus local synthetic ids.
io::DatasetManifest derived_manifest(const io::DatasetManifest& source, const fs::path& dir, const std::string& name) {
  io::DatasetManifest m;
  m.name = name;
  m.classes = source.classes;
  m.instance_classes = source.instance_classes;
  m.root = dir;
  return m;
}

void add_real(io::DatasetManifest& m, const io::DatasetManifest& source, const std::vector<std::string>& ids,
              const std::string& split, const fs::path& dir) {
  auto& list = m.splits[split];
  for (const auto& id : ids) {
    m.samples[id] = relative_to(source.root / source.samples.at(id), dir);
    if (source.sample_meta.count(id)) m.sample_meta[id] = source.sample_meta.at(id);
    list.push_back(id);
  }
}

void write_set(const io::DatasetManifest& source, const std::vector<std::string>& base_trees,
               const std::vector<std::string>& test, const fs::path& dir, const std::string& label,
               const std::optional<SyntheticConfig>& corpus, std::uint64_t seed) {
  fs::create_directories(dir);
  auto base = derived_manifest(source, dir, source.name + "/" + label + "/base");
  add_real(base, source, base_trees, "finetune", dir);
  add_real(base, source, test, "test", dir);
  base.save(dir / "base.json");
  if (!corpus) return;

  const auto clouds = synthesize(source, base_trees, *corpus, seed);
  auto zero = derived_manifest(source, dir, source.name + "/" + label + "/zero_shot");
  auto& syn = zero.splits["train"];
  for (std::size_t i = 0; i < clouds.size(); ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "syn_%04zu", i);
    io::write_standard(clouds[i], dir / "synthetic", id);
    zero.samples[id] = std::string("synthetic/") + id;
    zero.sample_meta[id] = {{"method", to_string(corpus->method)}};
    syn.push_back(id);
  }
  add_real(zero, source, test, "test", dir);
  zero.save(dir / "zero_shot.json");

  auto kb = zero;
  kb.name = source.name + "/" + label + "/kb_shot";
  kb.splits["pretrain"] = std::move(kb.splits["train"]);
  kb.splits.erase("train");
  add_real(kb, source, base_trees, "finetune", dir);
  kb.save(dir / "kb_shot.json");

  std::ofstream(dir / "synthetic_config.json") << corpus->to_json().dump(2) << '\n';
}

}  // namespace

void materialize(const io::DatasetManifest& manifest, const ProtocolPlan& plan, const fs::path& out,
                 const std::optional<SyntheticConfig>& corpus, std::uint64_t seed) {
  fs::create_directories(out);
  std::ofstream(out / "plan.json") << plan.to_json().dump(2) << '\n';

  const auto& train = manifest.split(plan.train_split);
  const auto& test = manifest.split(plan.test_split);
  auto vanilla = derived_manifest(manifest, out, manifest.name + "/vanilla");
  add_real(vanilla, manifest, train, "train", out);
  add_real(vanilla, manifest, test, "test", out);
  vanilla.save(out / "vanilla.json");

  for (const auto& f : plan.folds) {
    write_set(manifest, f.base_trees, test, out / "folds" / fold_name(f.index), fold_name(f.index), corpus,
              derive_seed(seed, hash_name("protocol-fold"), f.index));
  }
  for (const auto& s : plan.subsets) {
    write_set(manifest, s.base_trees, test, out / "subsets" / s.name(), s.name(), corpus,
              derive_seed(seed, hash_name(s.name())));
  }
}

}  // namespace forge::protocol
