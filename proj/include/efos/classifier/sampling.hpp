#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "efos/classifier/features.hpp"

namespace efos {

/// Role of a feature row when assembling a training set.
enum class SampleClass : std::uint8_t { positive, unlabeled, excluded };

/// Which labels count as the positive class.
enum class PositiveLabels { definitive, any_labeled };

struct TrainingSet {
  std::vector<FeatureRow> rows;
  std::vector<int> classes;  // 1 = EFOS, 0 = unlabeled
};

std::vector<SampleClass> sample_classes(const Dataset& ds, std::span<const FeatureRow> rows,
                                        PositiveLabels positives = PositiveLabels::definitive);

/// All positive rows plus an equal-size uniform draw (without replacement)
/// of unlabeled rows. Throws Error{"insufficient_unlabeled"}.
TrainingSet undersample(std::span<const FeatureRow> rows, std::span<const SampleClass> classes, std::uint64_t seed);

/// Input rows followed by minority rows drawn with replacement until both
/// classes have equal counts. Throws Error{"empty_class"}.
TrainingSet resample_minority(std::span<const FeatureRow> rows, std::span<const int> classes, std::uint64_t seed);

}  // namespace efos
