#include "doctest.h"
#include "oracles.hpp"

#include "forge/core/error.hpp"
#include "forge/metrics/metrics.hpp"

using namespace forge;
using namespace forge::metrics;
using instgroup::InstancePrediction;

namespace {

LabeledCloud labels(const std::vector<int>& sem, const std::vector<int>& inst = {}) {
  LabeledCloud c;
  for (std::size_t i = 0; i < sem.size(); ++i) c.push_back(Vec3f::Zero(), sem[i], inst.empty() ? -1 : inst[i]);
  return c;
}

}  // namespace

TEST_CASE("semantic_eval: worked example") {
  const auto gt = labels({0, 1, 1, 1});
  const std::vector<int> pred{0, 0, 1, 1};
  const auto r = semantic_eval(gt, pred, 2);
  CHECK(*r.per_class.at(0).iou == doctest::Approx(0.5));
  CHECK(*r.per_class.at(1).iou == doctest::Approx(2.0 / 3.0));
  CHECK(*r.miou == doctest::Approx(7.0 / 12.0));
  CHECK(*r.per_class.at(0).precision == doctest::Approx(0.5));
  CHECK(*r.per_class.at(0).recall == 1.0);
  CHECK(*r.per_class.at(1).precision == 1.0);
  CHECK(*r.per_class.at(1).f1 == doctest::Approx(0.8));
}

TEST_CASE("semantic_eval: perfect, absent classes, unlabeled, shape") {
  const auto gt = labels({0, 0, 2, -1});
  const std::vector<int> perfect{0, 0, 2, 1};
  const auto r = semantic_eval(gt, perfect, 4);
  CHECK(*r.miou == 1.0);
  CHECK(!r.per_class.at(3).iou);
  CHECK(!r.per_class.at(3).precision);
  CHECK(!r.per_class.at(1).iou);  // the only class-1 prediction sits on an unlabeled point
  CHECK(*r.per_class.at(2).f1 == 1.0);
  const std::vector<int> short_pred{0};
  try {
    semantic_eval(gt, short_pred, 4);
    FAIL("expected ShapeError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ShapeError);
  }
}

TEST_CASE("semantic_eval equals the per-class tally on random scenes") {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = oracle::random_scene(rng);
    const auto r = semantic_eval(s.gt, s.pred_semantic, static_cast<std::size_t>(s.n_classes));
    const auto counts = oracle::semantic_counts(s.gt.semantic, s.pred_semantic, s.n_classes);
    double sum = 0.0;
    int present = 0;
    for (const auto& [c, k] : counts) {
      const auto& got = r.per_class.at(c);
      const double tp = static_cast<double>(k.tp), fp = static_cast<double>(k.fp), fn = static_cast<double>(k.fn);
      if (tp + fp + fn > 0) {
        CHECK(*got.iou == tp / (tp + fp + fn));
      } else {
        CHECK(!got.iou);
      }
      if (tp + fn > 0) {
        sum += tp / (tp + fp + fn);
        ++present;
      }
    }
    if (present) CHECK(*r.miou == sum / present);
  }
}

TEST_CASE("instance_eval: perfect match and empty predictions") {
  const auto gt = labels({1, 1, 1, 0}, {5, 5, 5, -1});
  const std::vector<int> classes{1};
  const std::vector<InstancePrediction> perfect{{1, {2, 0, 1}, 0.9}};
  const auto r = instance_eval(gt, perfect, classes);
  CHECK(*r.ap25 == 1.0);
  CHECK(*r.ap50 == 1.0);
  CHECK(*r.ap == 1.0);
  const auto none = instance_eval(gt, {}, classes);
  CHECK(*none.ap == 0.0);
  CHECK(*none.ap25 == 0.0);
  const std::vector<InstancePrediction> dup{{1, {0, 0}, 0.5}};
  try {
    instance_eval(gt, dup, classes);
    FAIL("expected InvalidPrediction");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidPrediction);
  }
  const auto no_gt = instance_eval(labels({0, 0}), perfect.empty() ? perfect : std::vector<InstancePrediction>{}, classes);
  CHECK(!no_gt.ap);
}

TEST_CASE("instance_eval: hand-computed precision envelope") {
  // two gt instances; ranked FP, TP, TP. The envelope lifts the first recall step to 2/3.
  const std::vector<int> classes{1};
  const std::vector<InstancePrediction> preds{{1, {0, 1}, 0.5}, {1, {2, 3}, 0.6}, {1, {0, 2, 4}, 0.9}};
  const auto gt2 = labels({1, 1, 1, 1, 0, 0}, {0, 0, 1, 1, -1, -1});
  const auto r = instance_eval(gt2, preds, classes);
  CHECK(*r.ap50 == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(*r.ap25 == 1.0);  // IoU 1/3 counts at 0.25, the later {0, 1} becomes the duplicate
}

TEST_CASE("instance_eval equals the brute-force greedy oracle; AP falls with the threshold") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const auto s = oracle::random_scene(rng);
    std::vector<int> classes(static_cast<std::size_t>(s.n_classes));
    std::iota(classes.begin(), classes.end(), 0);
    const auto r = instance_eval(s.gt, s.preds, classes);
    for (const auto& [c, sc] : r.per_class) {
      for (std::size_t t = 0; t < r.thresholds.size(); ++t) {
        const auto want = oracle::greedy_ap(s.gt, s.preds, c, r.thresholds[t]);
        REQUIRE(want);
        CHECK(std::abs(sc.ap_by_threshold[t] - *want) <= 1e-12);
      }
      CHECK(sc.ap50 <= sc.ap25);
      for (std::size_t t = 2; t < r.thresholds.size(); ++t) CHECK(sc.ap_by_threshold[t] <= sc.ap_by_threshold[t - 1]);
      CHECK(sc.ap >= 0.0);
      CHECK(sc.ap <= 1.0);
    }
    auto shuffled = s.preds;
    rng.shuffle(std::span<InstancePrediction>(shuffled));
    const auto again = instance_eval(s.gt, shuffled, classes);
    CHECK(again.per_class == r.per_class);
  }
}

TEST_CASE("InstanceEvaluator pools predictions across samples") {
  const auto gt = labels({1, 1, 1, 1}, {0, 0, 1, 1});
  const std::vector<int> classes{1};
  InstanceEvaluator ev(classes);
  ev.add(gt, {{1, {0, 1}, 0.9}});
  ev.add(gt, {{1, {2, 3}, 0.3}, {1, {0}, 0.95}});
  const auto r = ev.result();
  // {0} overlaps its instance with IoU exactly 0.5: a hit at 0.50, a miss at 0.55
  CHECK(r.per_class.at(1).gt_instances == 4);
  CHECK(*r.ap50 == doctest::Approx(0.75).epsilon(1e-15));
  REQUIRE(r.thresholds[2] == doctest::Approx(0.55));
  CHECK(r.per_class.at(1).ap_by_threshold[2] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("aggregate: identity, means, class-map mismatch, json") {
  EvalReport a;
  a.classes = {{0, "trunk"}, {1, "branch"}};
  a.instance_classes = {1};
  a.samples = 3;
  a.miou = 0.8;
  a.semantic[0] = {0.9, 0.95, 0.9, 0.92, 100};
  a.semantic[1] = {0.7, std::nullopt, std::nullopt, std::nullopt, 50};
  a.instance[1] = {4, 5, 0.9, 0.8, 0.6, std::vector<double>(11, 0.5)};
  a.ap25 = 0.9;
  a.ap50 = 0.8;
  a.ap = 0.6;
  CHECK(aggregate({a}).to_json() == a.to_json());
  CHECK(EvalReport::from_json(nlohmann::json::parse(a.to_json().dump())).to_json() == a.to_json());

  EvalReport b = a;
  b.miou = 0.6;
  b.ap = 0.2;
  EvalReport c = a;
  c.ap = 0.1;
  c.miou.reset();
  const auto m = aggregate({a, b, c});
  CHECK(*m.miou == doctest::Approx(0.7));
  CHECK(*m.ap == doctest::Approx((0.6 + 0.2 + 0.1) / 3.0));
  CHECK(m.samples == 9);
  CHECK(m.semantic.at(0).support == 300);

  EvalReport other = a;
  other.classes[2] = "leaf";
  try {
    aggregate({a, other});
    FAIL("expected SchemaError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SchemaError);
  }
  a.wall_seconds = 2.0;
  b.wall_seconds = 1.0;
  CHECK(*aggregate({a, b}).throughput == doctest::Approx(2.0));
  CHECK(a.to_csv().find("1,branch,0.700000,,,,0.900000,0.800000,0.600000") != std::string::npos);
}
