#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "efos/classifier/matrix.hpp"
#include "efos/classifier/transforms.hpp"
#include "json.hpp"

namespace efos {

/// Feature preprocessing fitted on the training rows and applied inside
/// predict_proba.
enum class Transform { none, boxcox, pca };

std::string_view to_string(Transform t) noexcept;
Transform parse_transform(std::string_view token);

/// Probability at or above which a forest's vote fraction counts as EFOS
/// when a hard label is needed (OOB error, confusion matrices).
inline constexpr double kDecisionThreshold = 0.5;

struct ForestConfig {
  std::size_t n_trees = 100;
  std::size_t max_depth = 0;  // 0 = unlimited
  std::size_t min_samples_leaf = 1;
  std::size_t mtry = 0;  // 0 = ceil(sqrt(p))
  bool bootstrap = true;
  Transform transform = Transform::none;
  std::size_t pca_components = 0;  // 0 = all
};

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;     // go left when x[feature] <= threshold
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  std::int32_t vote = 0;  // leaf class
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

class DecisionTree {
 public:
  DecisionTree() = default;
  explicit DecisionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  int predict(std::span<const double> x) const { return nodes_[leaf_index(x)].vote; }
  std::size_t leaf_index(std::span<const double> x) const;
  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  std::size_t depth() const;
  bool uses_feature(std::size_t f) const;

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

 private:
  std::vector<TreeNode> nodes_;
};

/// CART tree with Gini splits over `sample` (row indices, duplicates allowed).
/// Ties on impurity go to the lowest feature, then the lowest threshold.
DecisionTree train_tree(const FeatureMatrix& x, std::span<const int> y, std::span<const std::uint32_t> sample,
                        const ForestConfig& config, std::uint64_t seed);

struct ForestModel {
  static constexpr int kFormatVersion = 1;

  ForestConfig config;
  std::uint64_t seed = 0;
  std::size_t n_features = 0;
  std::vector<std::string> feature_names;
  BoxCoxParams boxcox;
  PcaModel pca;
  std::vector<DecisionTree> trees;
  double oob_error = 0.0;
  std::vector<double> oob_proba;  // per training row; NaN when never out of bag

  /// Raw feature row -> model input space.
  std::vector<double> transform_row(std::span<const double> raw) const;
  /// Vote fraction of trees predicting EFOS. Throws Error{"arity_mismatch"}.
  double predict_proba(std::span<const double> raw) const;
  std::vector<double> predict_proba(const FeatureMatrix& raw, unsigned threads = 1) const;
};

/// Bootstrap-aggregated trees; per-tree randomness comes from (seed, tree
/// index), so results do not depend on `threads`. Throws
/// Error{"degenerate_input"} unless each class has at least two rows.
ForestModel train_forest(const FeatureMatrix& rows, std::span<const int> classes, const ForestConfig& config,
                         std::uint64_t seed, unsigned threads = 1, std::vector<std::string> feature_names = {});

nlohmann::ordered_json to_json(const ForestModel& model);
ForestModel forest_from_json(const nlohmann::json& j);

}  // namespace efos
