#pragma once

#include "forge/core/cloud.hpp"
#include "forge/instgroup/instgroup.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace forge::metrics {

/// Rows are ground truth, columns predictions. Points whose ground truth is
/// -1 are skipped; a prediction outside [0, n) only counts as a miss.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t n_classes = 0) : n_(n_classes), counts_(n_classes * n_classes, 0) {}

  void add(std::span<const int> gt, std::span<const int> pred);
  void merge(const ConfusionMatrix& other);

  std::size_t classes() const { return n_; }
  std::uint64_t at(std::size_t gt, std::size_t pred) const { return counts_[gt * n_ + pred]; }
  std::uint64_t total() const { return total_; }
  std::uint64_t true_positive(std::size_t c) const { return at(c, c); }
  std::uint64_t false_positive(std::size_t c) const;
  std::uint64_t false_negative(std::size_t c) const;

 private:
  std::size_t n_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
  std::vector<std::uint64_t> misses_;  // gt class with an out-of-range prediction
};

/// Ratios with a zero denominator are left empty.
struct ClassScores {
  std::optional<double> iou, precision, recall, f1;
  std::uint64_t support = 0;  // ground-truth points
  bool operator==(const ClassScores&) const = default;
};

struct SemanticResult {
  std::map<int, ClassScores> per_class;
  std::optional<double> miou;  // over classes present in the ground truth
};

SemanticResult semantic_scores(const ConfusionMatrix& cm);
/// Throws ShapeError on a length mismatch.
SemanticResult semantic_eval(const LabeledCloud& gt, std::span<const int> pred_semantic, std::size_t n_classes);

/// (50 + 5i) / 100 for i = 0..9.
std::vector<double> coco_thresholds();

struct InstanceClassScores {
  std::size_t gt_instances = 0;
  std::size_t predictions = 0;
  double ap25 = 0.0;
  double ap50 = 0.0;
  double ap = 0.0;                  // mean over coco_thresholds()
  std::vector<double> ap_by_threshold;  // aligned with InstanceResult::thresholds
  bool operator==(const InstanceClassScores&) const = default;
};

struct InstanceResult {
  std::vector<double> thresholds;
  std::map<int, InstanceClassScores> per_class;  // classes with >= 1 gt instance
  std::optional<double> ap25, ap50, ap;
};

/// Greedy ScanNet-style matching pooled over any number of samples. Within a
/// sample, predictions are visited by descending confidence (ties: smallest
/// point index) and each takes the unmatched ground-truth instance of its
/// class with the highest mask IoU, if that IoU reaches the threshold. AP is
/// the area under the all-point precision envelope.
class InstanceEvaluator {
 public:
  /// `thresholds` beyond 0.25 and the COCO range may be added for reporting.
  explicit InstanceEvaluator(std::vector<int> instance_classes, std::vector<double> extra_thresholds = {});

  /// Throws InvalidPrediction for duplicate or out-of-range point indices.
  void add(const LabeledCloud& gt, const std::vector<instgroup::InstancePrediction>& preds);
  InstanceResult result() const;

 private:
  struct Record {
    double confidence;
    std::uint32_t sample;
    std::uint32_t rank;
    std::vector<std::uint8_t> tp;  // per threshold
  };
  std::vector<int> classes_;
  std::vector<double> thresholds_;
  std::map<int, std::size_t> gt_count_;
  std::map<int, std::vector<Record>> records_;
  std::uint32_t samples_ = 0;
};

InstanceResult instance_eval(const LabeledCloud& gt, const std::vector<instgroup::InstancePrediction>& preds,
                             std::span<const int> instance_classes, std::span<const double> iou_thresholds = {});

/// Area under the all-point precision envelope of a ranked TP/FP list.
double average_precision(std::span<const std::uint8_t> ranked_tp, std::size_t gt_count);

struct EvalReport {
  std::map<int, std::string> classes;
  std::vector<int> instance_classes;
  std::size_t samples = 0;
  std::map<int, ClassScores> semantic;
  std::optional<double> miou;
  std::map<int, InstanceClassScores> instance;
  std::optional<double> ap25, ap50, ap;
  std::optional<double> wall_seconds;  // only filled when timing is requested
  std::optional<double> throughput;    // samples per second

  nlohmann::ordered_json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
  /// One row per class: name, IoU, precision, recall, F1, AP25, AP50, AP.
  std::string to_csv() const;
};

/// Report over evaluated samples; either result may be absent.
EvalReport make_report(const std::map<int, std::string>& classes, const std::vector<int>& instance_classes,
                       std::size_t samples, const std::optional<SemanticResult>& semantic,
                       const std::optional<InstanceResult>& instance);

/// Dataset-level means: each per-class score and each summary is averaged over
/// the reports that define it. Throws SchemaError for mismatched class maps.
EvalReport aggregate(const std::vector<EvalReport>& reports);

}  // namespace forge::metrics
