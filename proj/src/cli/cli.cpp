#include "forge/cli/cli.hpp"

#include "commands.hpp"
#include "forge/core/parallel.hpp"
#include "forge/core/rng.hpp"

#include <CLI11.hpp>

namespace forge::cli {

namespace {

std::string substitute(std::string text, const fs::path& out, const fs::path& config_dir) {
  const std::pair<std::string, std::string> vars[] = {{"${out}", out.generic_string()},
                                                      {"${config_dir}", config_dir.generic_string()}};
  for (const auto& [key, value] : vars) {
    for (auto pos = text.find(key); pos != std::string::npos; pos = text.find(key, pos + value.size())) {
      text.replace(pos, key.size(), value);
    }
  }
  return text;
}

std::vector<std::string> stage_args(const nlohmann::json& stage, const fs::path& out, const fs::path& config_dir) {
  const auto name = stage.contains("stage") ? stage.at("stage") : stage.at("cmd");
  std::vector<std::string> args{name.get<std::string>()};
  if (!stage.contains("args")) return args;
  for (const auto& [key, value] : stage.at("args").items()) {
    const std::string flag = "--" + key;
    const auto scalar = [&](const nlohmann::json& v) {
      return v.is_string() ? substitute(v.get<std::string>(), out, config_dir) : v.dump();
    };
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back(flag);
    } else if (value.is_array()) {
      for (const auto& v : value) {
        args.push_back(flag);
        args.push_back(scalar(v));
      }
    } else if (key == "out") {
      fs::path p = scalar(value);
      if (p.is_relative()) p = out / p;
      args.push_back(flag);
      args.push_back(p.generic_string());
    } else {
      args.push_back(flag);
      args.push_back(scalar(value));
    }
  }
  return args;
}

int run_pipeline(const fs::path& config_path, const std::optional<std::uint64_t>& seed_override,
                 const std::string& out_override, int threads, std::ostream& out, std::ostream& err, Logger& log) {
  const auto config = read_json(config_path);
  const fs::path config_dir = config_path.has_parent_path() ? config_path.parent_path() : fs::path(".");
  std::uint64_t seed = 0;
  if (seed_override) {
    seed = *seed_override;
  } else if (config.contains("seed")) {
    seed = config.at("seed").get<std::uint64_t>();
  } else {
    fail(ErrorCode::SchemaError, "pipeline config has no seed");
  }
  fs::path root;
  if (!out_override.empty()) {
    root = out_override;
  } else if (config.contains("out")) {
    root = config.at("out").get<std::string>();
    if (root.is_relative()) root = config_dir / root;
  } else {
    fail(ErrorCode::SchemaError, "pipeline config has no output root");
  }
  if (config.contains("threads") && threads == 0) threads = config.at("threads").get<int>();
  if (!config.contains("stages") || !config.at("stages").is_array()) {
    fail(ErrorCode::SchemaError, "pipeline config needs a 'stages' array");
  }
  fs::create_directories(root);
  std::size_t index = 0;
  for (const auto& stage : config.at("stages")) {
    auto args = stage_args(stage, root, config_dir);
    args.push_back("--seed");
    args.push_back(std::to_string(seed));
    if (threads > 0) {
      args.push_back("--threads");
      args.push_back(std::to_string(threads));
    }
    log.info("run", "stage start", {{"index", index}, {"stage", args.front()}});
    const int code = run_cli(args, out, err);
    if (code != 0) {
      log.error("run", "stage failed", {{"index", index}, {"stage", args.front()}, {"exit", code}});
      return code;
    }
    ++index;
  }
  log.info("run", "pipeline done", {{"stages", index}});
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Logger log(err);
  CLI::App app{"Synthetic plant point clouds, instance grouping and segmentation metrics", "forge"};
  app.fallthrough();
  app.require_subcommand(0, 1);
  std::uint64_t seed = 0;
  int threads = 0;
  std::string out_path, config;
  auto* seed_opt = app.add_option("--seed", seed, "Root seed of every random stream")->capture_default_str();
  app.add_option("--threads", threads, "Worker threads (0: OpenMP default)");
  app.add_option("--out", out_path, "Output file or directory of the stage");
  app.add_option("--config", config, "Pipeline JSON; runs its stages in order");

  std::vector<Command> commands;
  add_commands(app, commands);
  std::string run_config;
  auto* run = app.add_subcommand("run", "Run the stages of a pipeline config");
  run->add_option("config", run_config, "Pipeline JSON")->required();

  std::string stage = "forge";
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (threads > 0) set_thread_count(threads);
    const std::optional<std::uint64_t> seed_given = seed_opt->count() ? std::optional<std::uint64_t>(seed) : std::nullopt;
    if (run->parsed() || (!config.empty() && app.get_subcommands().empty())) {
      stage = "run";
      return run_pipeline(run->parsed() ? run_config : config, seed_given, out_path, threads, out, err, log);
    }
    for (auto& c : commands) {
      if (!c.app->parsed()) continue;
      stage = c.name;
      Context ctx{seed, out_path, out, log};
      c.run(ctx);
      return 0;
    }
    out << app.help();
    return 2;
  } catch (const Error& e) {
    log.error(stage, e.what(), {{"code", std::string(to_string(e.code()))}});
    return exit_code_for(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    log.error(stage, e.what(), {{"code", "IoError"}});
    return 3;
  } catch (const nlohmann::json::exception& e) {
    log.error(stage, e.what(), {{"code", "SchemaError"}});
    return 2;
  } catch (const std::exception& e) {
    log.error(stage, e.what());
    return 1;
  }
}

}  // namespace forge::cli
