#pragma once

// Brute-force reference implementations used to check the fast code paths.

#include <algorithm>
#include <cstdio>
#include <limits>
#include <random>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "efos/network.hpp"

namespace oracle {

inline constexpr int kInf = std::numeric_limits<int>::max() / 4;

using Edges = std::vector<std::pair<efos::NodeIndex, efos::NodeIndex>>;

/// Builds a graph over nodes "n000".."nNNN"; nodes listed in `efos` are
/// tagged definitive EFOS.
inline efos::TemporalGraph make_graph(std::size_t n, const Edges& edges, const std::set<efos::NodeIndex>& efos = {}) {
  std::vector<efos::TaxpayerId> ids;
  std::vector<efos::NodeClass> classes;
  for (std::size_t i = 0; i < n; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "n%03zu", i);
    ids.emplace_back(buf);
    classes.push_back(efos.contains(static_cast<efos::NodeIndex>(i)) ? efos::NodeClass::definitive_efos
                                                                     : efos::NodeClass::unclassified);
  }
  std::vector<efos::TemporalGraph::Edge> list;
  for (auto [a, b] : edges) list.push_back({a, b, 100, 1});
  return efos::TemporalGraph::from_edges(efos::Slice::of_year(2015),
                                         efos::TemporalGraph::make_node_table(std::move(ids), std::move(classes)),
                                         std::move(list));
}

inline Edges random_edges(std::size_t n, double density, std::mt19937_64& rng) {
  std::bernoulli_distribution keep(density);
  Edges edges;
  for (efos::NodeIndex a = 0; a < n; ++a)
    for (efos::NodeIndex b = 0; b < n; ++b)
      if (a != b && keep(rng)) edges.emplace_back(a, b);
  return edges;
}

/// All-pairs shortest directed path lengths (Floyd-Warshall), kInf if unreachable.
inline std::vector<std::vector<int>> distances(const efos::TemporalGraph& g) {
  const std::size_t n = g.node_count();
  std::vector<std::vector<int>> d(n, std::vector<int>(n, kInf));
  for (std::size_t i = 0; i < n; ++i) d[i][i] = 0;
  for (const auto& e : g.edges()) d[e.src][e.dst] = std::min(d[e.src][e.dst], 1);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i) {
      if (d[i][k] == kInf) continue;
      for (std::size_t j = 0; j < n; ++j)
        if (d[k][j] != kInf && d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];
    }
  return d;
}

/// Component label per node from mutual reachability; labels are the
/// smallest member index.
inline std::vector<std::size_t> mutual_reachability_components(const efos::TemporalGraph& g) {
  const auto d = distances(g);
  const std::size_t n = g.node_count();
  std::vector<std::size_t> label(n);
  for (std::size_t i = 0; i < n; ++i) {
    label[i] = i;
    for (std::size_t j = 0; j < i; ++j)
      if (d[i][j] != kInf && d[j][i] != kInf) {
        label[i] = label[j];
        break;
      }
  }
  return label;
}

/// P(score_pos > score_neg) + P(tie) / 2 over all pairs.
inline double concordance(std::span<const double> scores, std::span<const int> classes) {
  double wins = 0, pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!classes[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (classes[j]) continue;
      pairs += 1;
      if (scores[i] > scores[j]) wins += 1;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

}  // namespace oracle
