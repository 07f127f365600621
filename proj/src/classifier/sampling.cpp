#include "efos/classifier/sampling.hpp"

#include <algorithm>
#include <numeric>

#include "efos/rng.hpp"

namespace efos {

std::vector<SampleClass> sample_classes(const Dataset& ds, std::span<const FeatureRow> rows, PositiveLabels positives) {
  std::vector<SampleClass> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    auto i = ds.find(r.id);
    auto label = i ? ds.label(*i) : std::nullopt;
    if (!label) out.push_back(SampleClass::unlabeled);
    else if (*label == LabelKind::definitive_efos || positives == PositiveLabels::any_labeled)
      out.push_back(SampleClass::positive);
    else out.push_back(SampleClass::excluded);
  }
  return out;
}

TrainingSet undersample(std::span<const FeatureRow> rows, std::span<const SampleClass> classes, std::uint64_t seed) {
  if (rows.size() != classes.size()) throw std::invalid_argument("undersample: rows/classes size mismatch");
  std::vector<std::size_t> pos, unl;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (classes[i] == SampleClass::positive) pos.push_back(i);
    else if (classes[i] == SampleClass::unlabeled) unl.push_back(i);
  }
  if (pos.empty() || unl.size() < pos.size())
    throw Error("insufficient_unlabeled", "undersample: " + std::to_string(pos.size()) + " positive rows but only " +
                                              std::to_string(unl.size()) + " unlabeled rows");
  Rng rng(seed);
  // partial Fisher-Yates: the first pos.size() slots become the draw
  for (std::size_t k = 0; k < pos.size(); ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, unl.size() - 1);
    std::swap(unl[k], unl[pick(rng)]);
  }
  unl.resize(pos.size());
  std::sort(unl.begin(), unl.end());

  TrainingSet out;
  for (auto i : pos) {
    out.rows.push_back(rows[i]);
    out.classes.push_back(1);
  }
  for (auto i : unl) {
    out.rows.push_back(rows[i]);
    out.classes.push_back(0);
  }
  return out;
}

TrainingSet resample_minority(std::span<const FeatureRow> rows, std::span<const int> classes, std::uint64_t seed) {
  if (rows.size() != classes.size()) throw std::invalid_argument("resample_minority: rows/classes size mismatch");
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < rows.size(); ++i) by_class[classes[i] != 0 ? 1 : 0].push_back(i);
  if (by_class[0].empty() || by_class[1].empty()) throw Error("empty_class", "resample_minority: a class is empty");

  TrainingSet out;
  out.rows.assign(rows.begin(), rows.end());
  for (auto c : classes) out.classes.push_back(c != 0 ? 1 : 0);
  const int minority = by_class[1].size() < by_class[0].size() ? 1 : 0;
  const auto& pool = by_class[minority];
  const std::size_t missing = by_class[1 - minority].size() - pool.size();
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  for (std::size_t k = 0; k < missing; ++k) {
    out.rows.push_back(rows[pool[pick(rng)]]);
    out.classes.push_back(minority);
  }
  return out;
}

}  // namespace efos
