#include "commands.hpp"

#include "forge/cli/cli.hpp"
#include "forge/core/rng.hpp"
#include "forge/deform/deform.hpp"
#include "forge/instgroup/instgroup.hpp"
#include "forge/io/binary.hpp"
#include "forge/io/convert.hpp"
#include "forge/io/dataset_stats.hpp"
#include "forge/io/standard_format.hpp"
#include "forge/metrics/metrics.hpp"
#include "forge/protocol/protocol.hpp"
#include "forge/treegen/treegen.hpp"
#include "forge/vls/scanner.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace forge::cli {

namespace {

std::vector<fs::path> files_with_extension(const fs::path& dir, const std::string& ext) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ext) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

fs::path require_out(const Context& ctx, const std::string& stage) {
  if (ctx.out.empty()) fail(ErrorCode::SchemaError, stage + " needs --out");
  return ctx.out;
}

/// Samples named by --sample or by --manifest/--split.
std::vector<SampleRef> select_samples(const std::string& sample, const std::string& manifest_path,
                                      const std::string& split, std::optional<io::DatasetManifest>& manifest) {
  if (!sample.empty() == !manifest_path.empty()) fail(ErrorCode::SchemaError, "give exactly one of --sample/--manifest");
  if (!sample.empty()) return {sample_ref(sample)};
  require_exists(manifest_path, "manifest");
  manifest = io::DatasetManifest::load(manifest_path);
  return manifest_samples(*manifest, split);
}

int class_count(const LabeledCloud& cloud) {
  int n = 0;
  for (int s : cloud.semantic) n = std::max(n, s + 1);
  return n;
}

void write_int32(const fs::path& path, const std::vector<int>& values) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  for (int v : values) io::write_le<std::int32_t>(out, v);
}

std::vector<int> read_int32(const fs::path& path) {
  const auto bytes = io::read_file_bytes(path);
  if (bytes.size() % 4 != 0) fail(ErrorCode::CorruptSample, path.string() + " is not a whole number of int32");
  std::istringstream in(bytes);
  std::vector<int> values(bytes.size() / 4);
  for (auto& v : values) {
    std::int32_t x;
    io::read_le(in, x);
    v = x;
  }
  return values;
}

std::vector<int> argmax_classes(const instgroup::ModelOutput& out, std::size_t n) {
  std::vector<int> labels(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    float best = -std::numeric_limits<float>::infinity();
    for (std::size_t c = 0; c < out.n_classes; ++c) {
      if (out.scores[i * out.n_classes + c] > best) {
        best = out.scores[i * out.n_classes + c];
        labels[i] = static_cast<int>(c);
      }
    }
  }
  return labels;
}

std::string fmt(const std::optional<double>& v) {
  if (!v) return "-";
  std::ostringstream s;
  s << std::fixed << std::setprecision(4) << *v;
  return s.str();
}

io::DatasetStats load_stats(const fs::path& path, const std::string& split) {
  const auto j = read_json(path);
  if (j.contains("mean_instance_extent")) return io::DatasetStats::from_json(j);
  if (j.contains("stats")) return io::DatasetStats::from_json(j.at("stats"));
  const auto m = io::DatasetManifest::load(path);
  return io::compute_stats(m, split.empty() ? std::nullopt : std::optional<std::string>(split));
}

// ---------------------------------------------------------------- convert

void add_convert(CLI::App& root, std::vector<Command>& commands) {
  struct Args {
    std::string input, format, columns, id;
  };
  auto a = std::make_shared<Args>();
  auto* app = root.add_subcommand("convert", "Convert a text or PLY point file to the standard sample format");
  app->add_option("--input", a->input, "Input point file")->required();
  app->add_option("--format", a->format, "ascii-xyz, csv or ply (default: from the extension)");
  app->add_option("--columns", a->columns, "Column map, e.g. x=0,y=1,z=2,semantic=3,instance=4");
  app->add_option("--id", a->id, "Sample id (default: input file stem)");
  commands.push_back({"convert", app, [a](Context& ctx) {
                        const auto out = require_out(ctx, "convert");
                        require_exists(a->input, "input");
                        std::string format = a->format;
                        if (format.empty()) {
                          const auto ext = fs::path(a->input).extension().string();
                          format = ext == ".ply" ? "ply" : ext == ".csv" ? "csv" : "ascii-xyz";
                        }
                        const auto f = io::parse_input_format(format);
                        const auto columns = a->columns.empty() ? io::ColumnMap::defaults(f) : io::ColumnMap::parse(a->columns);
                        const auto cloud = io::convert(a->input, f, columns);
                        const std::string id = a->id.empty() ? fs::path(a->input).stem().string() : a->id;
                        io::write_standard(cloud, out, id);
                        ctx.log.info("convert", "wrote sample", {{"id", id}, {"points", cloud.size()}});
                      }});
}

// ---------------------------------------------------------------- split

void add_split(CLI::App& root, std::vector<Command>& commands) {
  struct Args {
    std::string manifest, stratify;
    std::vector<std::string> ratios;
    bool balanced = false;
  };
  auto a = std::make_shared<Args>();
  auto* app = root.add_subcommand("split", "Reassign the samples of a manifest to splits");
  app->add_option("--manifest", a->manifest, "Input manifest")->required();
  app->add_option("--ratio", a->ratios, "split=fraction, repeatable")->required();
  app->add_option("--stratify-by", a->stratify, "sample_meta key defining groups");
  app->add_flag("--balanced", a->balanced, "Equal share of every group in each split");
  commands.push_back({"split", app, [a](Context& ctx) {
                        const auto out = require_out(ctx, "split");
                        require_exists(a->manifest, "manifest");
                        const auto m = io::DatasetManifest::load(a->manifest);
                        io::SplitOptions opt;
                        for (const auto& r : a->ratios) {
                          const auto eq = r.find('=');
                          if (eq == std::string::npos) fail(ErrorCode::SchemaError, "ratio '" + r + "' is not split=fraction");
                          try {
                            opt.ratios[r.substr(0, eq)] = std::stod(r.substr(eq + 1));
                          } catch (const std::exception&) {
                            fail(ErrorCode::SchemaError, "ratio '" + r + "' has no number");
                          }
                        }
                        if (!a->stratify.empty()) opt.stratify_by = a->stratify;
                        opt.balanced = a->balanced;
                        opt.seed = derive_seed(ctx.seed, hash_name("split"));
                        auto result = io::make_splits(m, opt);
                        const auto dir = out.has_parent_path() ? out.parent_path() : fs::path(".");
                        for (auto& [id, path] : result.samples) path = relative_to(m.root / path, dir);
                        result.root = dir;
                        result.save(out);
                        nlohmann::ordered_json sizes;
                        for (const auto& [name, ids] : result.splits) {
                          sizes[name] = ids.size();
                          ctx.stdout_ << name << '\t' << ids.size() << '\n';
                        }
                        ctx.log.info("split", "wrote manifest", {{"path", out.string()}, {"sizes", sizes}});
                      }});
}

// ---------------------------------------------------------------- stats

void add_stats(CLI::App& root, std::vector<Command>& commands) {
  struct Args {
    std::string manifest, split;
  };
  auto a = std::make_shared<Args>();
  auto* app = root.add_subcommand("stats", "Per-class point and instance distributions of a dataset");
  app->add_option("--manifest", a->manifest, "Manifest")->required();
  app->add_option("--split", a->split, "Restrict to one split");
  commands.push_back({"stats", app, [a](Context& ctx) {
                        require_exists(a->manifest, "manifest");
                        const auto m = io::DatasetManifest::load(a->manifest);
                        const auto stats =
                            io::compute_stats(m, a->split.empty() ? std::nullopt : std::optional<std::string>(a->split));
                        ctx.stdout_ << stats_table(stats);
                        if (!ctx.out.empty()) {
                          auto j = stats_report(stats);
                          j["stats"] = stats.to_json();
                          write_json(ctx.out, j);
                        }
                        ctx.log.info("stats", "computed", {{"samples", stats.samples.size()}});
                      }});
}

// ---------------------------------------------------------------- gen-tree

void add_gen_tree(CLI::App& root, std::vector<Command>& commands) {
  struct Args {
    std::string bases, split;
    std::size_t count = 150;
    int max_order = 3;
  };
  auto a = std::make_shared<Args>();
  auto* app = root.add_subcommand("gen-tree", "Generate tree models from base-tree statistics");
  app->add_option("--bases", a->bases, "Directory of labeled base samples, or a manifest")->required();
  app->add_option("--split", a->split, "Manifest split holding the base trees");
  app->add_option("--count", a->count, "Trees to generate")->capture_default_str();
  app->add_option("--max-order", a->max_order, "Deepest branch order")->capture_default_str();
  commands.push_back({"gen-tree", app, [a](Context& ctx) {
                        const auto out = require_out(ctx, "gen-tree");
                        require_exists(a->bases, "bases");
                        std::vector<SampleRef> refs;
                        if (fs::is_directory(a->bases)) {
                          for (const auto& p : files_with_extension(a->bases, ".points")) refs.push_back(sample_ref(p.parent_path() / p.stem()));
                        } else {
                          refs = manifest_samples(io::DatasetManifest::load(a->bases), a->split);
                        }
                        if (refs.empty()) fail(ErrorCode::EmptyInput, "no base trees in " + a->bases);
                        std::vector<treegen::TreeStats> stats;
                        nlohmann::ordered_json bases_j = nlohmann::ordered_json::object();
                        for (const auto& r : refs) {
                          stats.push_back(treegen::extract_stats(load_sample(r)));
                          bases_j[r.id] = stats.back().to_json();
                        }
                        const auto trees = treegen::generate_population(stats, a->count, derive_seed(ctx.seed, hash_name("gen-tree")),
                                                                        a->max_order);
                        fs::create_directories(out);
                        nlohmann::ordered_json pop = nlohmann::ordered_json::array();
                        for (std::size_t i = 0; i < trees.size(); ++i) {
                          char name[32];
                          std::snprintf(name, sizeof name, "tree_%04zu", i);
                          treegen::save_model(trees[i].model, out / (std::string(name) + ".ply"));
                          pop.push_back({{"id", name},
                                         {"base_a", refs[trees[i].base_a].id},
                                         {"base_b", refs[trees[i].base_b].id},
                                         {"t", trees[i].t},
                                         {"instances", trees[i].model.instance_count()},
                                         {"stats", trees[i].stats.to_json()}});
                        }
                        write_json(out / "population.json", pop);
                        write_json(out / "bases.json", bases_j);
                        ctx.log.info("gen-tree", "generated", {{"trees", trees.size()}, {"bases", refs.size()}});
                      }});
}

// ---------------------------------------------------------------- scan

void add_scan(CLI::App& root, std::vector<Command>& commands) {
  struct Args {
    std::string model;
    double resolution = 0.06, standoff = 2.0, sigma = 0.002, max_range = 100.0;
    double elevation_min = -60.0, elevation_max = 90.0;
    std::size_t positions = 4;
  };
  auto a = std::make_shared<Args>();
  auto* app = root.add_subcommand("scan", "Virtual terrestrial laser scan of tree meshes");
  app->add_option("--model", a->model, "Tree mesh PLY, or a directory of them")->required();
  app->add_option("--resolution-deg", a->resolution, "Angular step")->capture_default_str();
  app->add_option("--positions", a->positions, "Scanner positions around the tree")->capture_default_str();
  app->add_option("--standoff", a->standoff, "Distance beyond the crown edge, m")->capture_default_str();
  app->add_option("--noise-sigma", a->sigma, "Range noise, m")->capture_default_str();
  app->add_option("--max-range", a->max_range, "m")->capture_default_str();
  app->add_option("--elevation-min", a->elevation_min, "deg")->capture_default_str();
  app->add_option("--elevation-max", a->elevation_max, "deg")->capture_default_str();
  commands.push_back({"scan", app, [a](Context& ctx) {
                        const auto out = require_out(ctx, "scan");
                        require_exists(a->model, "model");
                        const bool batch = fs::is_directory(a->model);
                        const auto models = batch ? files_with_extension(a->model, ".ply") : std::vector<fs::path>{a->model};
                        std::vector<std::string> ids;
                        for (const auto& path : models) {
                          const auto model = treegen::load_model(path);
                          vls::ScannerConfig cfg;
                          cfg.angular_resolution_deg = a->resolution;
                          cfg.range_noise_sigma = a->sigma;
                          cfg.max_range = a->max_range;
                          cfg.elevation_min_deg = a->elevation_min;
                          cfg.elevation_max_deg = a->elevation_max;
                          cfg.positions = vls::default_tls_positions(model, a->positions, a->standoff);
                          const std::string stem = path.stem().string();
                          cfg.seed = derive_seed(ctx.seed, hash_name("scan"), hash_name(stem));
                          const auto cloud = vls::scan(model.mesh, cfg);
                          const auto ref = batch ? SampleRef{stem, out, stem} : sample_ref(out);
                          fs::create_directories(ref.dir);
                          io::write_standard(cloud, ref.dir, ref.stem);
                          ids.push_back(ref.stem);
                          ctx.log.info("scan", "scanned", {{"model", stem}, {"points", cloud.size()}});
                        }
                        if (batch) local_manifest("scan", tree_classes(), {1}, out, ids).save(out / "manifest.json");
                      }});
}

// ---------------------------------------------------------------- deform

void add_deform(CLI::App& root, std::vector<Command>& commands) {
  struct Args {
    std::string sample, manifest, split, materials;
    std::size_t variants = 10;
    double voxel = 0.001, bound = 5.0;
  };
  auto a = std::make_shared<Args>();
  auto* app = root.add_subcommand("deform", "Elastic deformation variants of labeled samples");
  app->add_option("--in,--sample", a->sample, "Sample prefix dir/id");
  app->add_option("--manifest", a->manifest, "Deform every sample of a manifest instead");
  app->add_option("--split", a->split, "Manifest split");
  app->add_option("--variants", a->variants, "Variants per sample")->capture_default_str();
  app->add_option("--voxel-size", a->voxel, "Lattice voxel size, m")->capture_default_str();
  app->add_option("--force-bound", a->bound, "Force component bound, N")->capture_default_str();
  app->add_option("--materials", a->materials, "JSON class id -> {E, nu}");
  commands.push_back({"deform", app, [a](Context& ctx) {
                        const auto out = require_out(ctx, "deform");
                        std::optional<io::DatasetManifest> m;
                        const auto refs = select_samples(a->sample, a->manifest, a->split, m);
                        std::optional<deform::MaterialMap> materials;
                        if (!a->materials.empty()) materials = deform::materials_from_json(read_json(a->materials));
                        fs::create_directories(out);
                        std::vector<std::string> ids;
                        for (const auto& r : refs) {
                          const auto cloud = load_sample(r);
                          const int n_classes = m ? static_cast<int>(m->classes.size()) : class_count(cloud);
                          const auto mat = materials ? *materials : deform::default_materials(n_classes);
                          const auto variants = deform::augment(cloud, a->variants, a->voxel, mat, a->bound,
                                                                derive_seed(ctx.seed, hash_name("deform"), hash_name(r.id)));
                          for (std::size_t k = 0; k < variants.size(); ++k) {
                            char suffix[16];
                            std::snprintf(suffix, sizeof suffix, "_d%02zu", k);
                            const std::string id = r.id + suffix;
                            io::write_standard(variants[k], out, id);
                            ids.push_back(id);
                          }
                          ctx.log.info("deform", "deformed", {{"sample", r.id}, {"variants", variants.size()}});
                        }
                        if (m) local_manifest(m->name + "-deform", m->classes, m->instance_classes, out, ids).save(out / "manifest.json");
                      }});
}

// ---------------------------------------------------------------- oracle-output

void add_oracle_output(CLI::App& root, std::vector<Command>& commands) {
  struct Args {
    std::string sample, manifest, split;
    int n_classes = 0;
    double sigma = 0.0;
  };
  auto a = std::make_shared<Args>();
  auto* app = root.add_subcommand("oracle-output", "Perfect model output from ground truth, with optional noise");
  app->add_option("--sample", a->sample, "Sample prefix dir/id");
  app->add_option("--manifest", a->manifest, "Every sample of a manifest instead");
  app->add_option("--split", a->split, "Manifest split");
  app->add_option("--n-classes", a->n_classes, "Score columns (default: manifest classes)");
  app->add_option("--sigma", a->sigma, "Offset noise, m")->capture_default_str();
  commands.push_back({"oracle-output", app, [a](Context& ctx) {
                        const auto out = require_out(ctx, "oracle-output");
                        std::optional<io::DatasetManifest> m;
                        const auto refs = select_samples(a->sample, a->manifest, a->split, m);
                        for (const auto& r : refs) {
                          const auto cloud = load_sample(r);
                          const int n = a->n_classes > 0 ? a->n_classes : m ? static_cast<int>(m->classes.size()) : class_count(cloud);
                          const auto o = instgroup::oracle_output(cloud, static_cast<std::size_t>(n), a->sigma,
                                                                  derive_seed(ctx.seed, hash_name("oracle-output"), hash_name(r.id)));
                          instgroup::write_model_output(o, out, r.id);
                        }
                        ctx.log.info("oracle-output", "wrote model outputs", {{"samples", refs.size()}});
                      }});
}

// ---------------------------------------------------------------- group

void add_group(CLI::App& root, std::vector<Command>& commands) {
  struct Args {
    std::string sample, manifest, split, scores, offsets, model_dir, params, classes, mode = "shifted";
  };
  auto a = std::make_shared<Args>();
  auto* app = root.add_subcommand("group", "Instance grouping from per-point scores and offsets");
  app->add_option("--sample", a->sample, "Sample prefix dir/id");
  app->add_option("--manifest", a->manifest, "Group every sample of a manifest instead");
  app->add_option("--split", a->split, "Manifest split");
  app->add_option("--scores", a->scores, "Scores file (single sample)");
  app->add_option("--offsets", a->offsets, "Offsets file (single sample)");
  app->add_option("--model-dir", a->model_dir, "Directory of <id>.scores / <id>.offsets");
  app->add_option("--params", a->params, "Grouping parameters JSON")->required();
  app->add_option("--instance-classes", a->classes, "Comma-separated class ids (default: manifest)");
  app->add_option("--mode", a->mode, "shifted or dual")->capture_default_str();
  commands.push_back({"group", app, [a](Context& ctx) {
                        const auto out = require_out(ctx, "group");
                        std::optional<io::DatasetManifest> m;
                        const auto refs = select_samples(a->sample, a->manifest, a->split, m);
                        const auto params = instgroup::GroupingParams::from_json(read_json(a->params));
                        instgroup::GroupingMode mode;
                        if (a->mode == "shifted") {
                          mode = instgroup::GroupingMode::shifted;
                        } else if (a->mode == "dual") {
                          mode = instgroup::GroupingMode::dual;
                        } else {
                          fail(ErrorCode::SchemaError, "unknown grouping mode '" + a->mode + "'");
                        }
                        std::vector<int> classes;
                        if (!a->classes.empty()) {
                          classes = parse_int_list(a->classes);
                        } else if (m) {
                          classes = m->instance_classes;
                        } else {
                          for (const auto& [c, n] : params.min_points) classes.push_back(c);
                        }
                        const bool single = !a->sample.empty();
                        for (const auto& r : refs) {
                          const auto cloud = load_sample(r);
                          fs::path scores = a->scores, offsets = a->offsets;
                          if (!single || scores.empty()) {
                            if (a->model_dir.empty()) fail(ErrorCode::SchemaError, "group needs --scores/--offsets or --model-dir");
                            scores = fs::path(a->model_dir) / (r.id + ".scores");
                            offsets = fs::path(a->model_dir) / (r.id + ".offsets");
                          }
                          require_exists(scores, "scores");
                          require_exists(offsets, "offsets");
                          const auto bytes = fs::file_size(scores);
                          if (cloud.empty() || bytes % (4 * cloud.size()) != 0) {
                            fail(ErrorCode::ShapeError, scores.string() + " does not hold a whole score row per point");
                          }
                          const auto n_classes = static_cast<std::size_t>(bytes / (4 * cloud.size()));
                          const auto output = instgroup::read_model_output(scores, offsets, cloud.size(), n_classes);
                          const auto preds = instgroup::group(cloud, output, params, classes, mode);
                          const fs::path pred_path = single ? out : out / (r.id + ".json");
                          auto sem_path = pred_path;
                          sem_path.replace_extension(".sem");
                          if (pred_path.has_parent_path()) fs::create_directories(pred_path.parent_path());
                          std::ofstream(pred_path, std::ios::trunc) << instgroup::predictions_to_json(preds).dump() << '\n';
                          write_int32(sem_path, argmax_classes(output, cloud.size()));
                          ctx.log.info("group", "grouped", {{"sample", r.id}, {"instances", preds.size()}});
                        }
                      }});
}

// ---------------------------------------------------------------- eval

void add_eval(CLI::App& root, std::vector<Command>& commands) {
  struct Args {
    std::string manifest, split = "test", pred_dir, csv;
    bool timing = false;
  };
  auto a = std::make_shared<Args>();
  auto* app = root.add_subcommand("eval", "Semantic and instance metrics of predictions against a split");
  app->add_option("--manifest", a->manifest, "Ground-truth manifest")->required();
  app->add_option("--split", a->split, "Split to evaluate")->capture_default_str();
  app->add_option("--pred-dir", a->pred_dir, "Directory of <id>.json (+ optional <id>.sem)")->required();
  app->add_option("--csv", a->csv, "Also write per-class rows as CSV");
  app->add_flag("--timing", a->timing, "Record wall time and throughput in the report");
  commands.push_back({"eval", app, [a](Context& ctx) {
                        const auto start = std::chrono::steady_clock::now();
                        require_exists(a->manifest, "manifest");
                        require_exists(a->pred_dir, "prediction directory");
                        const auto m = io::DatasetManifest::load(a->manifest);
                        const auto refs = manifest_samples(m, a->split);
                        const fs::path dir = a->pred_dir;
                        std::size_t with_sem = 0;
                        for (const auto& r : refs) with_sem += fs::exists(dir / (r.id + ".sem")) ? 1 : 0;
                        if (with_sem != 0 && with_sem != refs.size()) {
                          fail(ErrorCode::InvalidPrediction, "semantic predictions exist for only " + std::to_string(with_sem) +
                                                                 " of " + std::to_string(refs.size()) + " samples");
                        }
                        metrics::ConfusionMatrix cm(m.classes.size());
                        metrics::InstanceEvaluator ev(m.instance_classes);
                        for (const auto& r : refs) {
                          const auto gt = load_sample(r);
                          const auto pred_path = dir / (r.id + ".json");
                          if (!fs::exists(pred_path)) fail(ErrorCode::InvalidPrediction, "no prediction for sample " + r.id);
                          ev.add(gt, instgroup::predictions_from_json(read_json(pred_path)));
                          if (with_sem) {
                            const auto sem = read_int32(dir / (r.id + ".sem"));
                            if (sem.size() != gt.size()) {
                              fail(ErrorCode::ShapeError, "semantic prediction of " + r.id + " has " + std::to_string(sem.size()) +
                                                              " labels for " + std::to_string(gt.size()) + " points");
                            }
                            cm.add(gt.semantic, sem);
                          }
                        }
                        std::optional<metrics::SemanticResult> sem;
                        if (with_sem) sem = metrics::semantic_scores(cm);
                        auto report = metrics::make_report(m.classes, m.instance_classes, refs.size(), sem, ev.result());
                        if (a->timing) {
                          const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
                          report.wall_seconds = secs;
                          if (secs > 0) report.throughput = static_cast<double>(refs.size()) / secs;
                        }
                        if (!ctx.out.empty()) write_json(ctx.out, report.to_json());
                        if (!a->csv.empty()) {
                          std::ofstream csv(a->csv, std::ios::trunc);
                          if (!csv) fail(ErrorCode::IoError, "cannot write " + a->csv);
                          csv << report.to_csv();
                        }
                        ctx.stdout_ << "samples " << refs.size() << "  mIoU " << fmt(report.miou) << "  AP25 " << fmt(report.ap25)
                                    << "  AP50 " << fmt(report.ap50) << "  AP " << fmt(report.ap) << '\n';
                        ctx.log.info("eval", "evaluated", {{"samples", refs.size()}});
                      }});
}

// ---------------------------------------------------------------- protocol

void add_protocol(CLI::App& root, std::vector<Command>& commands) {
  struct Args {
    std::string manifest, train = "train", test = "test", group_key = "orchard", levels = "6,12,18,24", scores, method = "tg",
                          materials;
    std::size_t kb = 6, folds = 0, count = 150, positions = 4;
    int max_order = 3;
    double density = 20000.0, resolution = 0.06, sigma = 0.002, voxel = 0.001, bound = 5.0;
    bool materialize = false;
  };
  auto a = std::make_shared<Args>();
  auto* app = root.add_subcommand("protocol", "Assemble 0-shot / K_b-shot / vanilla experiment data");
  app->add_option("--manifest", a->manifest, "Real dataset manifest")->required();
  app->add_option("--train-split", a->train, "Base-tree pool")->capture_default_str();
  app->add_option("--test-split", a->test, "Real test set")->capture_default_str();
  app->add_option("--group-key", a->group_key, "sample_meta key of the orchard")->capture_default_str();
  app->add_option("--kb", a->kb, "Base trees per fold")->capture_default_str();
  app->add_option("--folds", a->folds, "Folds (0: as many as fit)")->capture_default_str();
  app->add_option("--kb-levels", a->levels, "K_b values for ratios and bound subsets")->capture_default_str();
  app->add_option("--fold-scores", a->scores, "JSON array of per-fold scores for ranking");
  app->add_flag("--materialize", a->materialize, "Generate the synthetic corpus of every fold and subset");
  app->add_option("--method", a->method, "tg, tg+vls or deform")->capture_default_str();
  app->add_option("--count", a->count, "Synthetic trees per fold")->capture_default_str();
  app->add_option("--max-order", a->max_order, "")->capture_default_str();
  app->add_option("--surface-density", a->density, "Points per m^2 (tg)")->capture_default_str();
  app->add_option("--resolution-deg", a->resolution, "Scanner step (tg+vls)")->capture_default_str();
  app->add_option("--positions", a->positions, "Scanner positions (tg+vls)")->capture_default_str();
  app->add_option("--noise-sigma", a->sigma, "Range noise (tg+vls)")->capture_default_str();
  app->add_option("--voxel-size", a->voxel, "Lattice voxel (deform)")->capture_default_str();
  app->add_option("--force-bound", a->bound, "Force bound (deform)")->capture_default_str();
  app->add_option("--materials", a->materials, "Materials JSON (deform)");
  commands.push_back({"protocol", app, [a](Context& ctx) {
                        const auto out = require_out(ctx, "protocol");
                        require_exists(a->manifest, "manifest");
                        const auto m = io::DatasetManifest::load(a->manifest);
                        protocol::ProtocolConfig cfg;
                        cfg.train_split = a->train;
                        cfg.test_split = a->test;
                        cfg.group_key = a->group_key;
                        cfg.kb = a->kb;
                        cfg.folds = a->folds;
                        cfg.kb_levels = parse_size_list(a->levels);
                        if (!a->scores.empty()) cfg.fold_scores = read_json(a->scores).get<std::vector<double>>();
                        cfg.seed = derive_seed(ctx.seed, hash_name("protocol"));
                        const auto plan = protocol::plan_protocol(m, cfg);
                        std::optional<protocol::SyntheticConfig> syn;
                        if (a->materialize) {
                          syn.emplace();
                          syn->method = protocol::parse_method(a->method);
                          syn->count = a->count;
                          syn->max_order = a->max_order;
                          syn->surface_density = a->density;
                          syn->angular_resolution_deg = a->resolution;
                          syn->scanner_positions = a->positions;
                          syn->range_noise_sigma = a->sigma;
                          syn->voxel_size = a->voxel;
                          syn->force_bound = a->bound;
                          if (!a->materials.empty()) syn->materials = read_json(a->materials);
                        }
                        protocol::materialize(m, plan, out, syn, derive_seed(ctx.seed, hash_name("protocol-data")));
                        ctx.stdout_ << "folds " << plan.folds.size() << " x K_b " << a->kb << " from " << plan.pool_size
                                    << " base trees; test set " << plan.test_size << '\n';
                        for (const auto& r : plan.ratios) {
                          ctx.stdout_ << "K_b " << r.kb << "  ratio " << std::fixed << std::setprecision(2) << r.ratio << '\n';
                        }
                        ctx.stdout_.unsetf(std::ios::floatfield);
                        ctx.log.info("protocol", "materialized",
                                     {{"folds", plan.folds.size()}, {"subsets", plan.subsets.size()}, {"corpus", a->materialize}});
                      }});
}

// ---------------------------------------------------------------- infer-params

void add_infer_params(CLI::App& root, std::vector<Command>& commands) {
  struct Args {
    std::string target, reference, params, target_split, reference_split;
  };
  auto a = std::make_shared<Args>();
  auto* app = root.add_subcommand("infer-params", "Scale grouping parameters to a new dataset");
  app->add_option("--target", a->target, "Target manifest or stats JSON")->required();
  app->add_option("--reference", a->reference, "Reference manifest or stats JSON")->required();
  app->add_option("--params", a->params, "Reference grouping parameters")->required();
  app->add_option("--target-split", a->target_split, "");
  app->add_option("--reference-split", a->reference_split, "");
  commands.push_back({"infer-params", app, [a](Context& ctx) {
                        const auto params = instgroup::infer_params(load_stats(a->target, a->target_split),
                                                                    load_stats(a->reference, a->reference_split),
                                                                    instgroup::GroupingParams::from_json(read_json(a->params)));
                        if (ctx.out.empty()) {
                          ctx.stdout_ << params.to_json().dump(2) << '\n';
                        } else {
                          write_json(ctx.out, params.to_json());
                        }
                        ctx.log.info("infer-params", "scaled", {{"radius", params.radius}});
                      }});
}

}  // namespace

void add_commands(CLI::App& root, std::vector<Command>& commands) {
  add_convert(root, commands);
  add_split(root, commands);
  add_stats(root, commands);
  add_gen_tree(root, commands);
  add_scan(root, commands);
  add_deform(root, commands);
  add_oracle_output(root, commands);
  add_group(root, commands);
  add_eval(root, commands);
  add_protocol(root, commands);
  add_infer_params(root, commands);
}

// ---------------------------------------------------------------- stats report

namespace {

nlohmann::ordered_json summary_json(const io::Summary& s) {
  return {{"count", s.count}, {"min", s.min}, {"q1", s.q1}, {"median", s.median},
          {"q3", s.q3},       {"max", s.max}, {"mean", s.mean}};
}

std::map<int, io::Summary> distributions(const io::DatasetStats& stats, bool instances) {
  std::map<int, io::Summary> out;
  if (stats.samples.empty()) return out;
  for (const auto& [c, name] : stats.classes) {
    if (instances && !stats.instance_classes.count(c)) continue;
    std::vector<double> v;
    for (const auto& s : stats.samples) {
      const auto& counts = instances ? s.class_instances : s.class_points;
      const auto it = counts.find(c);
      v.push_back(it == counts.end() ? 0.0 : static_cast<double>(it->second));
    }
    out[c] = io::summarize(std::move(v));
  }
  return out;
}

}  // namespace

nlohmann::ordered_json stats_report(const io::DatasetStats& stats) {
  nlohmann::ordered_json j;
  j["samples"] = stats.samples.size();
  nlohmann::ordered_json points = nlohmann::ordered_json::object();
  for (const auto& [c, s] : distributions(stats, false)) points[stats.classes.at(c)] = summary_json(s);
  nlohmann::ordered_json inst = nlohmann::ordered_json::object();
  for (const auto& [c, s] : distributions(stats, true)) inst[stats.classes.at(c)] = summary_json(s);
  j["points_per_sample"] = points;
  j["instances_per_sample"] = inst;
  j["mean_instance_extent"] = stats.mean_instance_extent;
  return j;
}

std::string stats_table(const io::DatasetStats& stats) {
  std::ostringstream s;
  s << "samples: " << stats.samples.size() << '\n';
  const auto row = [&](const std::string& what, const std::string& name, const io::Summary& v) {
    s << std::left << std::setw(10) << what << std::setw(12) << name << std::right << std::setw(12) << v.min
      << std::setw(12) << v.q1 << std::setw(12) << v.median << std::setw(12) << v.q3 << std::setw(12) << v.max << '\n';
  };
  s << std::left << std::setw(10) << "table" << std::setw(12) << "class" << std::right << std::setw(12) << "min"
    << std::setw(12) << "q1" << std::setw(12) << "median" << std::setw(12) << "q3" << std::setw(12) << "max" << '\n';
  for (const auto& [c, v] : distributions(stats, false)) row("points", stats.classes.at(c), v);
  for (const auto& [c, v] : distributions(stats, true)) row("instances", stats.classes.at(c), v);
  if (stats.total_instances > 0) s << "mean instance extent: " << stats.mean_instance_extent << " m\n";
  return s.str();
}

}  // namespace forge::cli
