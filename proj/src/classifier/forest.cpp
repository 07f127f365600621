#include "efos/classifier/forest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "efos/parallel.hpp"
#include "efos/rng.hpp"
#include "efos/types.hpp"

namespace efos {

std::string_view to_string(Transform t) noexcept {
  switch (t) {
    case Transform::none: return "none";
    case Transform::boxcox: return "boxcox";
    case Transform::pca: break;
  }
  return "pca";
}

Transform parse_transform(std::string_view token) {
  if (token == "none" || token == "raw") return Transform::none;
  if (token == "boxcox" || token == "box-cox") return Transform::boxcox;
  if (token == "pca") return Transform::pca;
  throw Error("bad_flag", "unknown transform '" + std::string(token) + "'");
}

std::size_t DecisionTree::leaf_index(std::span<const double> x) const {
  std::size_t k = 0;
  while (nodes_[k].feature >= 0)
    k = x[static_cast<std::size_t>(nodes_[k].feature)] <= nodes_[k].threshold ? nodes_[k].left : nodes_[k].right;
  return k;
}

std::size_t DecisionTree::depth() const {
  if (nodes_.empty()) return 0;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
  std::size_t best = 0;
  while (!stack.empty()) {
    auto [k, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    if (nodes_[k].feature >= 0) {
      stack.emplace_back(nodes_[k].left, d + 1);
      stack.emplace_back(nodes_[k].right, d + 1);
    }
  }
  return best;
}

bool DecisionTree::uses_feature(std::size_t f) const {
  return std::any_of(nodes_.begin(), nodes_.end(),
                     [&](const TreeNode& n) { return n.feature == static_cast<std::int32_t>(f); });
}

namespace {

struct Split {
  std::int32_t feature = -1;
  double threshold = 0.0;
  double impurity = std::numeric_limits<double>::infinity();  // n_left*gini_left + n_right*gini_right
};

double weighted_gini(double n0, double n1) {
  const double n = n0 + n1;
  return n > 0 ? n - (n0 * n0 + n1 * n1) / n : 0.0;
}

Split best_split(const FeatureMatrix& x, std::span<const int> y, std::span<const std::uint32_t> rows,
                 std::span<const std::size_t> features, std::size_t min_leaf) {
  Split best;
  std::vector<std::pair<double, int>> column(rows.size());
  double total1 = 0;
  for (auto r : rows) total1 += y[r];
  const double total = static_cast<double>(rows.size());
  for (auto f : features) {
    for (std::size_t k = 0; k < rows.size(); ++k) column[k] = {x(rows[k], f), y[rows[k]]};
    std::sort(column.begin(), column.end());
    double left0 = 0, left1 = 0;
    for (std::size_t k = 0; k + 1 < column.size(); ++k) {
      (column[k].second ? left1 : left0) += 1;
      if (column[k].first == column[k + 1].first) continue;
      const double nl = static_cast<double>(k + 1);
      if (nl < static_cast<double>(min_leaf) || total - nl < static_cast<double>(min_leaf)) continue;
      const double impurity = weighted_gini(left0, left1) + weighted_gini(total - nl - (total1 - left1), total1 - left1);
      if (impurity < best.impurity) {
        double t = column[k].first + (column[k + 1].first - column[k].first) / 2.0;
        if (!(t < column[k + 1].first)) t = column[k].first;
        best = {static_cast<std::int32_t>(f), t, impurity};
      }
    }
  }
  return best;
}

}  // namespace

DecisionTree train_tree(const FeatureMatrix& x, std::span<const int> y, std::span<const std::uint32_t> sample,
                        const ForestConfig& config, std::uint64_t seed) {
  const std::size_t p = x.cols();
  const std::size_t mtry =
      std::clamp<std::size_t>(config.mtry ? config.mtry : static_cast<std::size_t>(std::ceil(std::sqrt(p))), 1, p);
  const std::size_t min_leaf = std::max<std::size_t>(1, config.min_samples_leaf);
  Rng rng(seed);

  std::vector<TreeNode> nodes;
  struct Pending {
    std::size_t node;
    std::vector<std::uint32_t> rows;
    std::size_t depth;
  };
  std::vector<Pending> stack;
  nodes.emplace_back();
  stack.push_back({0, std::vector<std::uint32_t>(sample.begin(), sample.end()), 0});
  std::vector<std::size_t> features(p);

  while (!stack.empty()) {
    Pending item = std::move(stack.back());
    stack.pop_back();
    std::size_t n1 = 0;
    for (auto r : item.rows) n1 += static_cast<std::size_t>(y[r] != 0);
    const std::size_t n0 = item.rows.size() - n1;
    nodes[item.node].vote = n1 > n0 ? 1 : 0;

    const bool pure = n0 == 0 || n1 == 0;
    const bool depth_capped = config.max_depth != 0 && item.depth >= config.max_depth;
    if (pure || depth_capped || item.rows.size() < 2 * min_leaf) continue;

    std::iota(features.begin(), features.end(), std::size_t{0});
    for (std::size_t k = 0; k < mtry; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, p - 1);
      std::swap(features[k], features[pick(rng)]);
    }
    std::vector<std::size_t> chosen(features.begin(), features.begin() + static_cast<std::ptrdiff_t>(mtry));
    std::sort(chosen.begin(), chosen.end());

    const Split split = best_split(x, y, item.rows, chosen, min_leaf);
    const double parent = weighted_gini(static_cast<double>(n0), static_cast<double>(n1));
    if (split.feature < 0 || !(split.impurity < parent - 1e-12 * parent)) continue;

    Pending left{nodes.size(), {}, item.depth + 1};
    Pending right{nodes.size() + 1, {}, item.depth + 1};
    for (auto r : item.rows)
      (x(r, static_cast<std::size_t>(split.feature)) <= split.threshold ? left.rows : right.rows).push_back(r);
    nodes[item.node].feature = split.feature;
    nodes[item.node].threshold = split.threshold;
    nodes[item.node].left = static_cast<std::uint32_t>(left.node);
    nodes[item.node].right = static_cast<std::uint32_t>(right.node);
    nodes.emplace_back();
    nodes.emplace_back();
    // right first so the left subtree is expanded next (pre-order growth)
    stack.push_back(std::move(right));
    stack.push_back(std::move(left));
  }
  return DecisionTree(std::move(nodes));
}

std::vector<double> ForestModel::transform_row(std::span<const double> raw) const {
  if (raw.size() != n_features)
    throw Error("arity_mismatch", "expected " + std::to_string(n_features) + " features, got " +
                                      std::to_string(raw.size()));
  std::vector<double> row(raw.begin(), raw.end());
  switch (config.transform) {
    case Transform::none: break;
    case Transform::boxcox: box_cox_apply_row(boxcox, row); break;
    case Transform::pca: row = pca_apply_row(pca, row, config.pca_components); break;
  }
  return row;
}

double ForestModel::predict_proba(std::span<const double> raw) const {
  if (trees.empty()) throw Error("empty_model", "forest has no trees");
  const auto row = transform_row(raw);
  std::size_t votes = 0;
  for (const auto& t : trees) votes += static_cast<std::size_t>(t.predict(row) != 0);
  return static_cast<double>(votes) / static_cast<double>(trees.size());
}

std::vector<double> ForestModel::predict_proba(const FeatureMatrix& raw, unsigned threads) const {
  std::vector<double> out(raw.rows());
  parallel_for(raw.rows(), threads, [&](std::size_t r) { out[r] = predict_proba(raw.row(r)); });
  return out;
}

ForestModel train_forest(const FeatureMatrix& rows, std::span<const int> classes, const ForestConfig& config,
                         std::uint64_t seed, unsigned threads, std::vector<std::string> feature_names) {
  if (rows.rows() != classes.size()) throw std::invalid_argument("train_forest: rows/classes size mismatch");
  if (config.n_trees == 0) throw Error("degenerate_input", "train_forest: n_trees must be positive");
  const auto n1 = static_cast<std::size_t>(std::count_if(classes.begin(), classes.end(), [](int c) { return c != 0; }));
  if (n1 < 2 || rows.rows() - n1 < 2 || rows.cols() == 0)
    throw Error("degenerate_input", "train_forest needs at least two rows per class");

  ForestModel model;
  model.config = config;
  model.seed = seed;
  model.n_features = rows.cols();
  model.feature_names = std::move(feature_names);

  FeatureMatrix x;
  switch (config.transform) {
    case Transform::none: x = rows; break;
    case Transform::boxcox:
      model.boxcox = box_cox_fit(rows);
      x = box_cox_apply(model.boxcox, rows);
      break;
    case Transform::pca:
      model.pca = pca_fit(rows);
      x = pca_apply(model.pca, rows, config.pca_components);
      break;
  }
  std::vector<int> y(classes.begin(), classes.end());
  for (auto& c : y) c = c != 0 ? 1 : 0;

  const std::size_t n = rows.rows();
  model.trees.resize(config.n_trees);
  std::vector<std::vector<char>> in_bag(config.n_trees);
  parallel_for(config.n_trees, threads, [&](std::size_t t) {
    Rng rng(derive_seed(seed, t));
    std::vector<std::uint32_t> sample(n);
    in_bag[t].assign(n, 0);
    if (config.bootstrap) {
      std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(n - 1));
      for (auto& s : sample) {
        s = pick(rng);
        in_bag[t][s] = 1;
      }
    } else {
      std::iota(sample.begin(), sample.end(), 0u);
      std::fill(in_bag[t].begin(), in_bag[t].end(), 1);
    }
    model.trees[t] = train_tree(x, y, sample, config, rng());
  });

  std::vector<std::size_t> votes(n, 0), seen(n, 0);
  for (std::size_t t = 0; t < config.n_trees; ++t)
    for (std::size_t r = 0; r < n; ++r)
      if (!in_bag[t][r]) {
        ++seen[r];
        votes[r] += static_cast<std::size_t>(model.trees[t].predict(x.row(r)) != 0);
      }
  model.oob_proba.assign(n, std::numeric_limits<double>::quiet_NaN());
  std::size_t errors = 0, counted = 0;
  for (std::size_t r = 0; r < n; ++r) {
    if (!seen[r]) continue;
    model.oob_proba[r] = static_cast<double>(votes[r]) / static_cast<double>(seen[r]);
    ++counted;
    errors += static_cast<std::size_t>((model.oob_proba[r] >= kDecisionThreshold ? 1 : 0) != y[r]);
  }
  model.oob_error = counted ? static_cast<double>(errors) / static_cast<double>(counted) : 0.0;
  return model;
}

nlohmann::ordered_json to_json(const ForestModel& m) {
  nlohmann::ordered_json j;
  j["format"] = "efos-forest";
  j["version"] = ForestModel::kFormatVersion;
  j["seed"] = m.seed;
  j["n_features"] = m.n_features;
  j["feature_names"] = m.feature_names;
  j["config"] = {{"n_trees", m.config.n_trees},
                 {"max_depth", m.config.max_depth},
                 {"min_samples_leaf", m.config.min_samples_leaf},
                 {"mtry", m.config.mtry},
                 {"bootstrap", m.config.bootstrap},
                 {"transform", to_string(m.config.transform)},
                 {"pca_components", m.config.pca_components}};
  nlohmann::ordered_json transform = nlohmann::ordered_json::object();
  if (m.config.transform == Transform::boxcox) {
    transform["lambda"] = m.boxcox.lambda;
    transform["shift"] = m.boxcox.shift;
  } else if (m.config.transform == Transform::pca) {
    transform["mean"] = m.pca.mean;
    transform["components"] = m.pca.components;
    transform["variances"] = m.pca.variances;
  }
  j["transform"] = transform;
  j["oob_error"] = m.oob_error;
  nlohmann::ordered_json trees = nlohmann::ordered_json::array();
  for (const auto& t : m.trees) {
    nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
    for (const auto& n : t.nodes()) {
      if (n.feature < 0) nodes.push_back({{"leaf", n.vote}});
      else nodes.push_back({{"f", n.feature}, {"t", n.threshold}, {"l", n.left}, {"r", n.right}, {"v", n.vote}});
    }
    trees.push_back(std::move(nodes));
  }
  j["trees"] = std::move(trees);
  return j;
}

ForestModel forest_from_json(const nlohmann::json& j) {
  if (j.value("format", std::string{}) != "efos-forest") throw Error("bad_model", "not a forest model file");
  if (j.at("version").get<int>() != ForestModel::kFormatVersion)
    throw Error("bad_model", "unsupported forest model version " + j.at("version").dump());
  ForestModel m;
  m.seed = j.at("seed").get<std::uint64_t>();
  m.n_features = j.at("n_features").get<std::size_t>();
  m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  const auto& c = j.at("config");
  m.config.n_trees = c.at("n_trees").get<std::size_t>();
  m.config.max_depth = c.at("max_depth").get<std::size_t>();
  m.config.min_samples_leaf = c.at("min_samples_leaf").get<std::size_t>();
  m.config.mtry = c.at("mtry").get<std::size_t>();
  m.config.bootstrap = c.at("bootstrap").get<bool>();
  m.config.transform = parse_transform(c.at("transform").get<std::string>());
  m.config.pca_components = c.at("pca_components").get<std::size_t>();
  const auto& t = j.at("transform");
  if (m.config.transform == Transform::boxcox) {
    m.boxcox.lambda = t.at("lambda").get<std::vector<double>>();
    m.boxcox.shift = t.at("shift").get<std::vector<double>>();
  } else if (m.config.transform == Transform::pca) {
    m.pca.mean = t.at("mean").get<std::vector<double>>();
    m.pca.components = t.at("components").get<std::vector<std::vector<double>>>();
    m.pca.variances = t.at("variances").get<std::vector<double>>();
  }
  m.oob_error = j.at("oob_error").get<double>();
  for (const auto& tree : j.at("trees")) {
    std::vector<TreeNode> nodes;
    for (const auto& n : tree) {
      TreeNode node;
      if (n.contains("leaf")) {
        node.vote = n.at("leaf").get<int>();
      } else {
        node.feature = n.at("f").get<std::int32_t>();
        node.threshold = n.at("t").get<double>();
        node.left = n.at("l").get<std::uint32_t>();
        node.right = n.at("r").get<std::uint32_t>();
        node.vote = n.value("v", 0);
      }
      nodes.push_back(node);
    }
    m.trees.emplace_back(std::move(nodes));
  }
  return m;
}

}  // namespace efos
