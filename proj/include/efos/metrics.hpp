#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "efos/network.hpp"

namespace efos {

/// r(d) for d = 1..d_max: share of the SCC within directed distance d of a
/// node, the node itself included.
struct ReachProfile {
  TaxpayerId node;
  std::size_t scc_size = 0;
  std::vector<double> values;  // values[d - 1]

  double at(int d) const { return values.at(static_cast<std::size_t>(d - 1)); }
};

/// BFS along out-edges of `g_scc` (expected to be a largest-SCC subgraph).
ReachProfile reach(const TemporalGraph& g_scc, NodeIndex node, int d_max = 10);
/// Throws Error{"node_not_in_scc"} when `node` is absent from g_scc.
ReachProfile reach(const TemporalGraph& g_scc, const TaxpayerId& node, int d_max = 10);

/// Mean of reach profiles over `nodes`, indexed [d - 1]. Throws
/// Error{"empty_set"} for an empty set.
std::vector<double> mean_reach(const TemporalGraph& g_scc, std::span<const NodeIndex> nodes, int d_max = 10,
                               unsigned threads = 1);

/// How "close" is measured: min of both directed distances, or only the
/// distance from the node to the EFOS.
enum class CloseMode { either_direction, out_only };

/// EFOS j != node with distance <= max_distance (default: d < 3).
std::size_t close_efos_count(const TemporalGraph& g, NodeIndex node, std::span<const NodeIndex> efos,
                             CloseMode mode = CloseMode::either_direction, int max_distance = 2);

/// Close EFOS of every node at once, each list sorted ascending. Runs one
/// bounded BFS per EFOS instead of one per node.
std::vector<std::vector<NodeIndex>> close_efos_sets(const TemporalGraph& g, std::span<const NodeIndex> efos,
                                                    CloseMode mode = CloseMode::either_direction,
                                                    int max_distance = 2);

/// Nodes whose class tag is definitive or alleged EFOS.
std::vector<NodeIndex> efos_nodes(const TemporalGraph& g);

/// Numerator of the proximity index: close EFOS counted again in every month
/// they are close, or each EFOS once per year.
enum class SigmaNumerator { per_month, distinct_yearly };

struct ProximityOptions {
  CloseMode close = CloseMode::either_direction;
  SigmaNumerator numerator = SigmaNumerator::per_month;
  int max_distance = 2;
};

struct ProximityIndex {
  TaxpayerId node;
  int year = 0;
  std::int64_t total_close_efos = 0;
  int months_close = 0;
  double sigma = 0;
  double sigma_hat = 0;
};

/// Proximity of one node over a year of monthly graphs. nullopt when the
/// node was never close to an EFOS (sigma undefined).
std::optional<ProximityIndex> proximity_index(std::span<const TemporalGraph> monthly, const TaxpayerId& node,
                                              const std::set<TaxpayerId>& efos, const ProximityOptions& opts = {});

/// Proximity of every node with defined sigma, sorted by id, sigma_hat
/// already normalized against the year maximum.
std::vector<ProximityIndex> proximity_indices(std::span<const TemporalGraph> monthly, const std::set<TaxpayerId>& efos,
                                              const ProximityOptions& opts = {}, unsigned threads = 1);

/// Sets sigma_hat = sigma / max(sigma). Throws Error{"empty_indices"}.
void normalize(std::span<ProximityIndex> indices);

/// Normalizes, then returns ids with sigma_hat >= theta.
std::set<TaxpayerId> normalize_and_select(std::span<ProximityIndex> indices, double theta);

/// Ids whose sigma is at or above the type-7 q-quantile of sigma.
std::set<TaxpayerId> quartile_cut(std::span<const ProximityIndex> indices, double q = 0.75);

}  // namespace efos
