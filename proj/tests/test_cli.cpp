#include "doctest.h"
#include "fixtures.hpp"
#include "test_support.hpp"

#include "forge/cli/cli.hpp"
#include "forge/io/dataset_stats.hpp"
#include "forge/metrics/metrics.hpp"

#include <fstream>
#include <sstream>

using namespace forge;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run forge_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<nlohmann::json> log_lines(const std::string& err) {
  std::vector<nlohmann::json> lines;
  std::istringstream in(err);
  std::string line;
  while (std::getline(in, line)) lines.push_back(nlohmann::json::parse(line));
  return lines;
}

}  // namespace

TEST_CASE("cli: help, unknown flags, exit codes and JSON logs") {
  CHECK(forge_cli({"--help"}).code == 0);
  CHECK(forge_cli({"scan", "--bogus"}).code == 2);
  CHECK(forge_cli({}).code == 2);

  const auto dir = test::scratch_dir("cli_errors");
  const auto missing = forge_cli({"stats", "--manifest", (dir / "nope.json").string()});
  CHECK(missing.code == 3);
  const auto lines = log_lines(missing.err);
  REQUIRE(lines.size() == 1);
  CHECK(lines[0].at("level") == "error");
  CHECK(lines[0].at("stage") == "stats");
  CHECK(lines[0].at("code") == "IoError");

  std::ofstream(dir / "bad.json") << R"({"classes": {"0": "a", "2": "b"}, "samples": {}, "splits": {}})";
  CHECK(forge_cli({"stats", "--manifest", (dir / "bad.json").string()}).code == 2);

  // truncated labels file
  io::write_standard(test::random_cloud(10, 1), dir, "s");
  std::ofstream(dir / "s.sem", std::ios::binary | std::ios::trunc) << "abc";
  CHECK(forge_cli({"oracle-output", "--sample", (dir / "s").string(), "--out", (dir / "o").string()}).code == 3);
}

TEST_CASE("cli: convert, split and stats") {
  const auto dir = test::scratch_dir("cli_convert");
  std::ofstream(dir / "a.csv") << "x,y,z,sem,inst\n0,0,0,0,-1\n1,1,1,1,0\n2,2,2,1,0\n";
  REQUIRE(forge_cli({"convert", "--input", (dir / "a.csv").string(), "--columns", "x=0,y=1,z=2,semantic=3,instance=4",
                     "--out", (dir / "data").string()})
              .code == 0);
  const auto c = io::load_standard(dir / "data", "a");
  CHECK(c.semantic == std::vector<int>{0, 1, 1});

  const auto m = test::write_tree_dataset(dir / "ds", {4, 4}, {4, 4}, 4, 800.0);
  const auto split = forge_cli({"--seed", "3", "split", "--manifest", (dir / "ds" / "manifest.json").string(), "--ratio",
                                "train=0.5", "--ratio", "test=0.5", "--stratify-by", "orchard", "--out",
                                (dir / "other" / "m.json").string()});
  REQUIRE(split.code == 0);
  const auto resplit = io::DatasetManifest::load(dir / "other" / "m.json");
  CHECK(resplit.split("train").size() == 4);
  CHECK(io::load_standard(resplit.sample_location("tree000").first, "tree000").size() > 0);

  const auto stats = forge_cli({"stats", "--manifest", (dir / "ds" / "manifest.json").string(), "--out",
                                (dir / "stats.json").string()});
  REQUIRE(stats.code == 0);
  CHECK(stats.out.find("points") != std::string::npos);
  std::ifstream in(dir / "stats.json");
  const auto j = nlohmann::json::parse(in);
  CHECK(j.at("samples") == 8);
  // recount of branch points per sample
  std::vector<double> branch;
  for (const auto& id : m.sample_ids()) {
    const auto cloud = io::load_standard(dir / "ds" / "data", id);
    branch.push_back(static_cast<double>(std::count(cloud.semantic.begin(), cloud.semantic.end(), 1)));
  }
  std::sort(branch.begin(), branch.end());
  CHECK(j.at("points_per_sample").at("branch").at("min") == branch.front());
  CHECK(j.at("points_per_sample").at("branch").at("max") == branch.back());

  auto empty = m;
  empty.splits["none"] = {};
  empty.save(dir / "ds" / "empty.json");
  const auto none = forge_cli({"stats", "--manifest", (dir / "ds" / "empty.json").string(), "--split", "none", "--out",
                               (dir / "none.json").string()});
  REQUIRE(none.code == 0);
  std::ifstream in2(dir / "none.json");
  const auto jn = nlohmann::json::parse(in2);
  CHECK(jn.at("points_per_sample").empty());
  CHECK(jn.at("instances_per_sample").empty());
}

TEST_CASE("cli: miniature pipeline is reproducible and scores a perfect oracle") {
  const auto dir = test::scratch_dir("cli_pipeline");
  const auto config = test::write_mini_pipeline(dir, 17);
  const auto a = forge_cli({"run", config.string(), "--out", (dir / "run_a").string()});
  REQUIRE(a.code == 0);
  const auto b = forge_cli({"--config", config.string(), "--out", (dir / "run_b").string()});
  REQUIRE(b.code == 0);
  CHECK(test::tree_snapshot(dir / "run_a") == test::tree_snapshot(dir / "run_b"));

  const auto deformed = io::DatasetManifest::load(dir / "run_a" / "deformed" / "manifest.json");
  CHECK(deformed.sample_ids().size() == 12);
  std::ifstream in(dir / "run_a" / "report.json");
  const auto report = metrics::EvalReport::from_json(nlohmann::json::parse(in));
  CHECK(report.samples == 12);
  CHECK(*report.miou == 1.0);
  CHECK(*report.ap50 == 1.0);
  for (const auto& line : log_lines(a.err)) CHECK(line.contains("stage"));

  const auto c = forge_cli({"--seed", "18", "run", config.string(), "--out", (dir / "run_c").string()});
  REQUIRE(c.code == 0);
  CHECK(test::tree_snapshot(dir / "run_a") != test::tree_snapshot(dir / "run_c"));
}

TEST_CASE("cli: protocol and infer-params") {
  const auto dir = test::scratch_dir("cli_protocol");
  auto m = test::cos_layout();
  m.root = dir;
  m.save(dir / "cos.json");
  const auto r = forge_cli({"protocol", "--manifest", (dir / "cos.json").string(), "--out", (dir / "exp").string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("folds 12") != std::string::npos);
  CHECK(r.out.find("ratio 0.92") != std::string::npos);
  std::ifstream in(dir / "exp" / "plan.json");
  CHECK(nlohmann::json::parse(in).at("folds").size() == 12);
  CHECK(forge_cli({"protocol", "--manifest", (dir / "cos.json").string(), "--folds", "13", "--out",
                   (dir / "exp2").string()})
            .code == 2);

  io::DatasetStats ref;
  ref.classes = {{0, "trunk"}, {1, "branch"}};
  ref.mean_instance_extent = 0.5;
  ref.instance_classes[1] = {10, 0.5, 400.0};
  auto target = ref;
  target.mean_instance_extent = 1.0;
  target.instance_classes[1].mean_points = 200.0;
  std::ofstream(dir / "ref.json") << ref.to_json().dump();
  std::ofstream(dir / "target.json") << target.to_json().dump();
  std::ofstream(dir / "params.json") << R"({"radius": 0.04, "score_threshold": 0.2, "min_points": {"1": 100}})";
  const auto p = forge_cli({"infer-params", "--target", (dir / "target.json").string(), "--reference",
                            (dir / "ref.json").string(), "--params", (dir / "params.json").string()});
  REQUIRE(p.code == 0);
  const auto j = nlohmann::json::parse(p.out);
  CHECK(j.at("radius").get<double>() == doctest::Approx(0.08));
  CHECK(j.at("min_points").at("1") == 50);
}
