#include "forge/core/error.hpp"
#include "forge/metrics/metrics.hpp"

namespace forge::metrics {

void ConfusionMatrix::add(std::span<const int> gt, std::span<const int> pred) {
  if (gt.size() != pred.size()) {
    fail(ErrorCode::ShapeError, "prediction has " + std::to_string(pred.size()) + " labels for " +
                                    std::to_string(gt.size()) + " points");
  }
  if (misses_.empty()) misses_.assign(n_, 0);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const int g = gt[i];
    if (g < 0) continue;
    if (static_cast<std::size_t>(g) >= n_) fail(ErrorCode::ShapeError, "ground-truth class " + std::to_string(g) + " out of range");
    const int p = pred[i];
    if (p < 0 || static_cast<std::size_t>(p) >= n_) {
      ++misses_[static_cast<std::size_t>(g)];
    } else {
      ++counts_[static_cast<std::size_t>(g) * n_ + static_cast<std::size_t>(p)];
    }
    ++total_;
  }
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.n_ != n_) fail(ErrorCode::SchemaError, "confusion matrices differ in class count");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  if (misses_.empty()) misses_.assign(n_, 0);
  for (std::size_t i = 0; i < other.misses_.size(); ++i) misses_[i] += other.misses_[i];
  total_ += other.total_;
}

std::uint64_t ConfusionMatrix::false_positive(std::size_t c) const {
  std::uint64_t s = 0;
  for (std::size_t g = 0; g < n_; ++g) {
    if (g != c) s += at(g, c);
  }
  return s;
}

std::uint64_t ConfusionMatrix::false_negative(std::size_t c) const {
  std::uint64_t s = misses_.empty() ? 0 : misses_[c];
  for (std::size_t p = 0; p < n_; ++p) {
    if (p != c) s += at(c, p);
  }
  return s;
}

SemanticResult semantic_scores(const ConfusionMatrix& cm) {
  SemanticResult r;
  double sum = 0.0;
  int present = 0;
  for (std::size_t c = 0; c < cm.classes(); ++c) {
    const auto tp = static_cast<double>(cm.true_positive(c));
    const auto fp = static_cast<double>(cm.false_positive(c));
    const auto fn = static_cast<double>(cm.false_negative(c));
    ClassScores s;
    s.support = cm.true_positive(c) + cm.false_negative(c);
    if (tp + fp + fn > 0) s.iou = tp / (tp + fp + fn);
    if (tp + fp > 0) s.precision = tp / (tp + fp);
    if (tp + fn > 0) s.recall = tp / (tp + fn);
    if (s.precision && s.recall) {
      const double d = *s.precision + *s.recall;
      s.f1 = d > 0 ? 2.0 * *s.precision * *s.recall / d : 0.0;
    }
    if (s.support > 0) {
      sum += *s.iou;
      ++present;
    }
    r.per_class[static_cast<int>(c)] = s;
  }
  if (present > 0) r.miou = sum / present;
  return r;
}

SemanticResult semantic_eval(const LabeledCloud& gt, std::span<const int> pred_semantic, std::size_t n_classes) {
  ConfusionMatrix cm(n_classes);
  cm.add(gt.semantic, pred_semantic);
  return semantic_scores(cm);
}

}  // namespace forge::metrics
