#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "efos/types.hpp"

namespace efos {

struct ConfusionMetrics {
  std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::optional<double> precision;  // absent when tp + fp == 0
  std::optional<double> recall;     // absent when tp + fn == 0
  std::optional<double> f1;         // absent when precision or recall is, or both are 0
  double error = 0.0;               // (fp + fn) / total
};

/// Throws Error{"all_zero"} when every count is zero, std::invalid_argument
/// on negative counts.
ConfusionMetrics confusion_metrics(std::int64_t tp, std::int64_t fp, std::int64_t fn, std::int64_t tn);

/// Hard decisions `score >= threshold` against classes (nonzero = positive).
ConfusionMetrics confusion_at(std::span<const double> scores, std::span<const int> classes, double threshold = 0.5);

struct RocCurve {
  std::vector<std::pair<double, double>> points;  // (fpr, tpr), from (0,0) to (1,1)
  double auc = 0.0;
};

/// Threshold sweep over distinct scores in descending order; equal scores
/// form one step. Throws Error{"single_class"}.
RocCurve roc_auc(std::span<const double> scores, std::span<const int> classes);

using YearlyProbas = std::map<std::pair<TaxpayerId, int>, double>;

/// Taxpayers whose probability is >= threshold in every year they appear.
std::set<TaxpayerId> classify_yearly(const YearlyProbas& probas, double threshold = 0.8);

struct HistogramBin {
  double lo = 0, hi = 0;
  double fraction = 0;
};

/// `bins` equal-width bins over [0, 1]; the last bin is closed. Empty input
/// gives zero fractions.
std::vector<HistogramBin> probability_histogram(std::span<const double> probas, std::size_t bins = 20);

}  // namespace efos
