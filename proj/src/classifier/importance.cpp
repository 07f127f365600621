#include "efos/classifier/importance.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "efos/parallel.hpp"
#include "efos/rng.hpp"
#include "efos/stats.hpp"
#include "efos/types.hpp"

namespace efos {

namespace {

void rank(std::vector<FeatureImportance>& out) {
  std::stable_sort(out.begin(), out.end(),
                   [](const FeatureImportance& a, const FeatureImportance& b) { return a.score > b.score; });
}

std::string name_of(const std::vector<std::string>& names, std::size_t j) {
  return j < names.size() ? names[j] : "f" + std::to_string(j);
}

}  // namespace

std::vector<FeatureImportance> perturbation_importance(const ForestModel& model, const FeatureMatrix& sample,
                                                       double noise_scale, std::uint64_t seed, unsigned threads) {
  if (sample.cols() != model.n_features)
    throw Error("arity_mismatch", "sample has " + std::to_string(sample.cols()) + " features, model expects " +
                                      std::to_string(model.n_features));
  const std::size_t p = sample.cols();
  std::vector<FeatureImportance> out(p);
  if (sample.rows() == 0) {
    for (std::size_t j = 0; j < p; ++j) out[j] = {j, name_of(model.feature_names, j), 0.0};
    return out;
  }
  const auto baseline = model.predict_proba(sample, 1);

  parallel_for(p, threads, [&](std::size_t j) {
    const auto column = sample.column(j);
    const double sd = std::abs(noise_scale * stats::mean(column));
    Rng rng(derive_seed(seed, j));
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<double> row(p);
    double sum_sq = 0.0;
    for (std::size_t r = 0; r < sample.rows(); ++r) {
      auto src = sample.row(r);
      std::copy(src.begin(), src.end(), row.begin());
      row[j] += sd * noise(rng);
      const double d = model.predict_proba(row) - baseline[r];
      sum_sq += d * d;
    }
    out[j] = {j, name_of(model.feature_names, j), std::sqrt(sum_sq / static_cast<double>(sample.rows()))};
  });
  rank(out);
  return out;
}

std::vector<FeatureImportance> pca_importance(const PcaModel& model, const std::vector<std::string>& names) {
  if (model.components.empty()) throw Error("degenerate_matrix", "PCA model has no components");
  const auto& first = model.components.front();
  std::vector<FeatureImportance> out(first.size());
  for (std::size_t j = 0; j < first.size(); ++j) out[j] = {j, name_of(names, j), std::abs(first[j])};
  rank(out);
  return out;
}

}  // namespace efos
