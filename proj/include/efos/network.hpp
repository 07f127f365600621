#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "efos/ingest.hpp"

namespace efos {

using NodeIndex = std::uint32_t;

/// Time slice a graph was built for: a whole year or one month.
struct Slice {
  int year = 0;
  std::optional<int> month;

  static Slice of_year(int y) { return {y, std::nullopt}; }
  static Slice of_month(const MonthKey& m) { return {m.year, m.month}; }
  std::string label() const;  // "2015" or "2015-03"
  friend bool operator==(const Slice&, const Slice&) = default;
};

struct EdgePayload {
  Centavos subtotal = 0;
  std::int64_t tx_count = 0;
};

/// Directed graph of one time slice. Adjacency is stored twice (CSR out and
/// in), both sorted by neighbour index; at most one edge per ordered pair and
/// no self-loops.
class TemporalGraph {
 public:
  struct Edge {
    NodeIndex src = 0;
    NodeIndex dst = 0;
    Centavos subtotal = 0;
    std::int64_t tx_count = 0;
    friend bool operator==(const Edge&, const Edge&) = default;
  };

  struct NodeTable {
    std::vector<TaxpayerId> ids;
    std::vector<NodeClass> classes;
    std::unordered_map<TaxpayerId, NodeIndex> lookup;
  };

  TemporalGraph() : nodes_(std::make_shared<NodeTable>()) {}

  /// Aggregates parallel edges (summing payloads) and drops self-loops.
  static TemporalGraph from_edges(Slice slice, std::shared_ptr<const NodeTable> nodes, std::vector<Edge> edges);
  static std::shared_ptr<const NodeTable> make_node_table(std::vector<TaxpayerId> ids,
                                                          std::vector<NodeClass> classes);

  const Slice& slice() const noexcept { return slice_; }
  std::size_t node_count() const noexcept { return nodes_->ids.size(); }
  std::size_t edge_count() const noexcept { return out_targets_.size(); }

  const TaxpayerId& id(NodeIndex v) const { return nodes_->ids.at(v); }
  NodeClass node_class(NodeIndex v) const { return nodes_->classes.at(v); }
  bool is_efos(NodeIndex v) const { return node_class(v) != NodeClass::unclassified; }
  std::optional<NodeIndex> find(const TaxpayerId& id) const;
  const std::shared_ptr<const NodeTable>& node_table() const noexcept { return nodes_; }

  std::span<const NodeIndex> out_neighbors(NodeIndex v) const;
  std::span<const NodeIndex> in_neighbors(NodeIndex v) const;
  std::span<const EdgePayload> out_payloads(NodeIndex v) const;
  std::optional<EdgePayload> edge(NodeIndex src, NodeIndex dst) const;

  /// All edges ordered by (src, dst).
  std::vector<Edge> edges() const;

  /// Subgraph induced on `nodes` (any order); node order in the result
  /// follows ascending original index.
  TemporalGraph induced_subgraph(std::vector<NodeIndex> nodes) const;

 private:
  Slice slice_;
  std::shared_ptr<const NodeTable> nodes_;
  std::vector<std::uint32_t> out_offsets_, in_offsets_;
  std::vector<NodeIndex> out_targets_, in_sources_;
  std::vector<EdgePayload> out_payloads_;
};

/// Which record kinds become network edges. `income` is canonical; `all`
/// also admits outcome records for corpora that carry both sides.
enum class EdgeKinds { income, all };
/// Whether the yearly transaction minimum applies to each edge's yearly total
/// or to the EFOS endpoint's yearly total over all its edges.
enum class MinTxScope { edge, node };

struct YearlyNetworkOptions {
  std::int64_t min_tx = 10;
  MinTxScope scope = MinTxScope::edge;
  EdgeKinds kinds = EdgeKinds::income;
};

/// Edges incident to a labeled EFOS that pass the yearly transaction minimum.
/// Only endpoints of kept edges become nodes. A year without data yields an
/// empty graph.
TemporalGraph build_yearly_efos_network(const Dataset& ds, int year, const YearlyNetworkOptions& opts = {});

/// Interquartile interval of EFOS-emitted subtotals in one month (centavos;
/// fractional values come from type-7 interpolation).
struct AmountRegime {
  MonthKey period;
  double q1 = 0;
  double q3 = 0;
  std::size_t sample_size = 0;
  bool contains(Centavos amount) const noexcept {
    const auto a = static_cast<double>(amount);
    return q1 <= a && a <= q3;
  }
};

/// Throws Error{"no_efos_activity"} when no labeled EFOS emitted in `period`.
AmountRegime compute_activity_regime(const Dataset& ds, const MonthKey& period, EdgeKinds kinds = EdgeKinds::income);

/// Every taxpayer of `ds` is a node (node index == dataset index); edges are
/// the month's aggregated records whose subtotal lies in [q1, q3].
TemporalGraph build_monthly_network(const Dataset& ds, const AmountRegime& regime, const MonthKey& period,
                                    EdgeKinds kinds = EdgeKinds::income);

/// Monthly graphs for every month of `year` that has EFOS activity, sharing
/// one node table. Months without activity are skipped.
std::vector<TemporalGraph> build_monthly_networks(const Dataset& ds, int year, EdgeKinds kinds = EdgeKinds::income,
                                                  unsigned threads = 1);

struct SccPartition {
  std::vector<std::uint32_t> component;  // per node
  std::vector<std::size_t> sizes;        // per component
  std::uint32_t largest = 0;             // smallest id among the largest

  std::size_t count() const noexcept { return sizes.size(); }
  std::vector<NodeIndex> members(std::uint32_t c) const;
  std::size_t nontrivial_count() const;
};

/// Iterative Tarjan. Component ids are ordered by their smallest node index.
SccPartition strongly_connected_components(const TemporalGraph& g);

/// Throws Error{"empty_graph"} when g has no nodes.
TemporalGraph largest_scc_subgraph(const TemporalGraph& g, const SccPartition& p);

void write_edge_list(std::ostream& out, const TemporalGraph& g);
void write_node_classes(std::ostream& out, const TemporalGraph& g);

}  // namespace efos
