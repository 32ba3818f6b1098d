#include "forge/core/error.hpp"
#include "forge/metrics/metrics.hpp"

#include <algorithm>
#include <numeric>

namespace forge::metrics {

std::vector<double> coco_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back((50.0 + 5.0 * i) / 100.0);
  return t;
}

double average_precision(std::span<const std::uint8_t> ranked_tp, std::size_t gt_count) {
  if (gt_count == 0) return 0.0;
  const std::size_t n = ranked_tp.size();
  std::vector<double> precision(n);
  std::size_t tp = 0;
  for (std::size_t k = 0; k < n; ++k) {
    tp += ranked_tp[k];
    precision[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
  }
  for (std::size_t k = n; k-- > 1;) precision[k - 1] = std::max(precision[k - 1], precision[k]);
  double ap = 0.0;
  double prev_recall = 0.0;
  tp = 0;
  for (std::size_t k = 0; k < n; ++k) {
    tp += ranked_tp[k];
    const double recall = static_cast<double>(tp) / static_cast<double>(gt_count);
    ap += (recall - prev_recall) * precision[k];
    prev_recall = recall;
  }
  return ap;
}

InstanceEvaluator::InstanceEvaluator(std::vector<int> instance_classes, std::vector<double> extra_thresholds)
    : classes_(std::move(instance_classes)) {
  std::sort(classes_.begin(), classes_.end());
  classes_.erase(std::unique(classes_.begin(), classes_.end()), classes_.end());
  thresholds_.push_back(0.25);
  for (double t : coco_thresholds()) thresholds_.push_back(t);
  for (double t : extra_thresholds) {
    if (!(t > 0.0 && t <= 1.0)) fail(ErrorCode::InvalidArgument, "IoU threshold outside (0, 1]");
    if (std::find(thresholds_.begin(), thresholds_.end(), t) == thresholds_.end()) thresholds_.push_back(t);
  }
  for (int c : classes_) {
    gt_count_[c] = 0;
    records_[c];
  }
}

void InstanceEvaluator::add(const LabeledCloud& gt, const std::vector<instgroup::InstancePrediction>& preds) {
  const std::size_t n = gt.size();
  for (const auto& p : preds) {
    std::vector<std::uint32_t> idx = p.point_indices;
    std::sort(idx.begin(), idx.end());
    if (std::adjacent_find(idx.begin(), idx.end()) != idx.end()) {
      fail(ErrorCode::InvalidPrediction, "duplicate point index inside one prediction");
    }
    if (idx.empty()) fail(ErrorCode::InvalidPrediction, "empty prediction");
    if (idx.back() >= n) fail(ErrorCode::InvalidPrediction, "point index out of range");
  }

  for (int c : classes_) {
    // ground-truth instances of this class, by ascending instance id
    std::map<int, std::uint32_t> slot;
    for (std::size_t i = 0; i < n; ++i) {
      if (gt.semantic[i] == c && gt.instance[i] >= 0) slot.try_emplace(gt.instance[i], 0);
    }
    std::uint32_t next = 0;
    for (auto& [id, s] : slot) s = next++;
    std::vector<std::int32_t> owner(n, -1);
    std::vector<std::size_t> gt_size(slot.size(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      if (gt.semantic[i] == c && gt.instance[i] >= 0) {
        owner[i] = static_cast<std::int32_t>(slot.at(gt.instance[i]));
        ++gt_size[static_cast<std::size_t>(owner[i])];
      }
    }
    gt_count_[c] += slot.size();

    std::vector<const instgroup::InstancePrediction*> mine;
    for (const auto& p : preds) {
      if (p.class_id == c) mine.push_back(&p);
    }
    std::vector<std::uint32_t> min_index(mine.size());
    for (std::size_t k = 0; k < mine.size(); ++k) {
      min_index[k] = *std::min_element(mine[k]->point_indices.begin(), mine[k]->point_indices.end());
    }
    std::vector<std::size_t> order(mine.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (mine[a]->confidence != mine[b]->confidence) return mine[a]->confidence > mine[b]->confidence;
      if (min_index[a] != min_index[b]) return min_index[a] < min_index[b];
      auto sa = mine[a]->point_indices, sb = mine[b]->point_indices;
      std::sort(sa.begin(), sa.end());
      std::sort(sb.begin(), sb.end());
      return sa < sb;
    });

    // IoU of every prediction with every gt instance; unlabeled points are ignored
    std::vector<std::vector<double>> iou(mine.size(), std::vector<double>(slot.size(), 0.0));
    for (std::size_t k = 0; k < mine.size(); ++k) {
      std::vector<std::size_t> inter(slot.size(), 0);
      std::size_t size = 0;
      for (auto i : mine[k]->point_indices) {
        if (gt.semantic[i] < 0) continue;
        ++size;
        if (owner[i] >= 0) ++inter[static_cast<std::size_t>(owner[i])];
      }
      for (std::size_t g = 0; g < slot.size(); ++g) {
        if (inter[g] > 0) iou[k][g] = static_cast<double>(inter[g]) / static_cast<double>(size + gt_size[g] - inter[g]);
      }
    }

    std::vector<Record> recs(mine.size());
    for (std::size_t r = 0; r < order.size(); ++r) {
      recs[r].confidence = mine[order[r]]->confidence;
      recs[r].sample = samples_;
      recs[r].rank = static_cast<std::uint32_t>(r);
      recs[r].tp.assign(thresholds_.size(), 0);
    }
    for (std::size_t t = 0; t < thresholds_.size(); ++t) {
      std::vector<std::uint8_t> taken(slot.size(), 0);
      for (std::size_t r = 0; r < order.size(); ++r) {
        const auto& row = iou[order[r]];
        std::ptrdiff_t best = -1;
        for (std::size_t g = 0; g < slot.size(); ++g) {
          if (taken[g] || row[g] < thresholds_[t]) continue;
          if (best < 0 || row[g] > row[static_cast<std::size_t>(best)]) best = static_cast<std::ptrdiff_t>(g);
        }
        if (best >= 0) {
          taken[static_cast<std::size_t>(best)] = 1;
          recs[r].tp[t] = 1;
        }
      }
    }
    auto& all = records_[c];
    all.insert(all.end(), std::make_move_iterator(recs.begin()), std::make_move_iterator(recs.end()));
  }
  ++samples_;
}

InstanceResult InstanceEvaluator::result() const {
  InstanceResult res;
  res.thresholds = thresholds_;
  double s25 = 0.0, s50 = 0.0, sap = 0.0;
  int present = 0;
  for (int c : classes_) {
    const std::size_t g = gt_count_.at(c);
    if (g == 0) continue;
    auto recs = records_.at(c);
    std::sort(recs.begin(), recs.end(), [](const Record& a, const Record& b) {
      if (a.confidence != b.confidence) return a.confidence > b.confidence;
      if (a.sample != b.sample) return a.sample < b.sample;
      return a.rank < b.rank;
    });
    InstanceClassScores s;
    s.gt_instances = g;
    s.predictions = recs.size();
    std::vector<std::uint8_t> ranked(recs.size());
    for (std::size_t t = 0; t < thresholds_.size(); ++t) {
      for (std::size_t k = 0; k < recs.size(); ++k) ranked[k] = recs[k].tp[t];
      s.ap_by_threshold.push_back(average_precision(ranked, g));
    }
    s.ap25 = s.ap_by_threshold[0];
    s.ap50 = s.ap_by_threshold[1];
    double mean = 0.0;
    for (std::size_t t = 1; t <= 10; ++t) mean += s.ap_by_threshold[t];
    s.ap = mean / 10.0;
    s25 += s.ap25;
    s50 += s.ap50;
    sap += s.ap;
    ++present;
    res.per_class[c] = std::move(s);
  }
  if (present > 0) {
    res.ap25 = s25 / present;
    res.ap50 = s50 / present;
    res.ap = sap / present;
  }
  return res;
}

InstanceResult instance_eval(const LabeledCloud& gt, const std::vector<instgroup::InstancePrediction>& preds,
                             std::span<const int> instance_classes, std::span<const double> iou_thresholds) {
  InstanceEvaluator ev(std::vector<int>(instance_classes.begin(), instance_classes.end()),
                       std::vector<double>(iou_thresholds.begin(), iou_thresholds.end()));
  ev.add(gt, preds);
  return ev.result();
}

}  // namespace forge::metrics
