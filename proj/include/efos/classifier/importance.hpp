#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "efos/classifier/forest.hpp"

namespace efos {

struct FeatureImportance {
  std::size_t feature = 0;
  std::string name;
  double score = 0.0;
  friend bool operator==(const FeatureImportance&, const FeatureImportance&) = default;
};

/// For each feature alone, adds N(0, (noise_scale * column mean)^2) noise to
/// the sample and scores the root-mean-square change in predicted
/// probability. Sorted by score descending, then feature index.
std::vector<FeatureImportance> perturbation_importance(const ForestModel& model, const FeatureMatrix& sample,
                                                       double noise_scale, std::uint64_t seed, unsigned threads = 1);

/// |loading| of each feature on the first principal component, descending.
std::vector<FeatureImportance> pca_importance(const PcaModel& model, const std::vector<std::string>& names = {});

}  // namespace efos
