#include "efos/classifier/evaluation.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace efos {

ConfusionMetrics confusion_metrics(std::int64_t tp, std::int64_t fp, std::int64_t fn, std::int64_t tn) {
  if (tp < 0 || fp < 0 || fn < 0 || tn < 0) throw std::invalid_argument("confusion counts must be non-negative");
  const std::int64_t total = tp + fp + fn + tn;
  if (total == 0) throw Error("all_zero", "confusion matrix has no observations");
  ConfusionMetrics m{tp, fp, fn, tn, {}, {}, {}, static_cast<double>(fp + fn) / static_cast<double>(total)};
  if (tp + fp > 0) m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (m.precision && m.recall && *m.precision + *m.recall > 0)
    m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
  return m;
}

ConfusionMetrics confusion_at(std::span<const double> scores, std::span<const int> classes, double threshold) {
  if (scores.size() != classes.size()) throw std::invalid_argument("scores/classes size mismatch");
  std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    const bool actual = classes[i] != 0;
    if (predicted) (actual ? tp : fp) += 1;
    else (actual ? fn : tn) += 1;
  }
  return confusion_metrics(tp, fp, fn, tn);
}

RocCurve roc_auc(std::span<const double> scores, std::span<const int> classes) {
  if (scores.size() != classes.size()) throw std::invalid_argument("scores/classes size mismatch");
  const auto pos = static_cast<double>(std::count_if(classes.begin(), classes.end(), [](int c) { return c != 0; }));
  const double neg = static_cast<double>(classes.size()) - pos;
  if (pos == 0 || neg == 0) throw Error("single_class", "ROC needs both classes");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve roc;
  roc.points.emplace_back(0.0, 0.0);
  double tp = 0, fp = 0, area = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    const double tp0 = tp, fp0 = fp;
    for (; i < order.size() && scores[order[i]] == s; ++i) (classes[order[i]] != 0 ? tp : fp) += 1;
    // trapezoid in count space keeps the area exact up to the final division
    area += (fp - fp0) * (tp + tp0) / 2.0;
    roc.points.emplace_back(fp / neg, tp / pos);
  }
  roc.auc = area / (pos * neg);
  return roc;
}

std::set<TaxpayerId> classify_yearly(const YearlyProbas& probas, double threshold) {
  std::set<TaxpayerId> out;
  for (auto it = probas.begin(); it != probas.end();) {
    const TaxpayerId& id = it->first.first;
    bool all = true;
    for (; it != probas.end() && it->first.first == id; ++it) all = all && it->second >= threshold;
    if (all) out.insert(id);
  }
  return out;
}

std::vector<HistogramBin> probability_histogram(std::span<const double> probas, std::size_t bins) {
  if (bins == 0) throw std::invalid_argument("histogram needs at least one bin");
  std::vector<HistogramBin> out(bins);
  const double width = 1.0 / static_cast<double>(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    out[b].lo = static_cast<double>(b) * width;
    out[b].hi = b + 1 == bins ? 1.0 : static_cast<double>(b + 1) * width;
  }
  if (probas.empty()) return out;
  for (double p : probas) {
    auto b = static_cast<std::size_t>(std::clamp(p, 0.0, 1.0) * static_cast<double>(bins));
    out[std::min(b, bins - 1)].fraction += 1.0;
  }
  for (auto& bin : out) bin.fraction /= static_cast<double>(probas.size());
  return out;
}

}  // namespace efos
