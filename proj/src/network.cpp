#include "efos/network.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <ostream>
#include <tuple>

#include "efos/parallel.hpp"
#include "efos/stats.hpp"

namespace efos {

std::string Slice::label() const {
  return month ? to_string(MonthKey{year, *month}) : std::to_string(year);
}

std::shared_ptr<const TemporalGraph::NodeTable> TemporalGraph::make_node_table(std::vector<TaxpayerId> ids,
                                                                               std::vector<NodeClass> classes) {
  if (ids.size() != classes.size()) throw std::invalid_argument("node table: ids/classes size mismatch");
  auto t = std::make_shared<NodeTable>();
  t->lookup.reserve(ids.size());
  for (NodeIndex i = 0; i < ids.size(); ++i) t->lookup.emplace(ids[i], i);
  t->ids = std::move(ids);
  t->classes = std::move(classes);
  return t;
}

TemporalGraph TemporalGraph::from_edges(Slice slice, std::shared_ptr<const NodeTable> nodes, std::vector<Edge> edges) {
  TemporalGraph g;
  g.slice_ = slice;
  g.nodes_ = std::move(nodes);
  const std::size_t n = g.nodes_->ids.size();

  std::erase_if(edges, [](const Edge& e) { return e.src == e.dst; });
  for (const auto& e : edges)
    if (e.src >= n || e.dst >= n) throw std::out_of_range("edge endpoint outside node table");
  std::sort(edges.begin(), edges.end(),
            [](const Edge& a, const Edge& b) { return std::tie(a.src, a.dst) < std::tie(b.src, b.dst); });
  std::vector<Edge> merged;
  merged.reserve(edges.size());
  for (const auto& e : edges) {
    if (!merged.empty() && merged.back().src == e.src && merged.back().dst == e.dst) {
      merged.back().subtotal += e.subtotal;
      merged.back().tx_count += e.tx_count;
    } else {
      merged.push_back(e);
    }
  }

  g.out_offsets_.assign(n + 1, 0);
  g.in_offsets_.assign(n + 1, 0);
  for (const auto& e : merged) {
    ++g.out_offsets_[e.src + 1];
    ++g.in_offsets_[e.dst + 1];
  }
  std::partial_sum(g.out_offsets_.begin(), g.out_offsets_.end(), g.out_offsets_.begin());
  std::partial_sum(g.in_offsets_.begin(), g.in_offsets_.end(), g.in_offsets_.begin());
  g.out_targets_.resize(merged.size());
  g.out_payloads_.resize(merged.size());
  g.in_sources_.resize(merged.size());
  // merged is sorted by (src, dst): out lists fill in order.
  for (std::size_t k = 0; k < merged.size(); ++k) {
    g.out_targets_[k] = merged[k].dst;
    g.out_payloads_[k] = {merged[k].subtotal, merged[k].tx_count};
  }
  // Filling in-lists in src order keeps each in-list sorted too.
  std::vector<std::uint32_t> cursor(g.in_offsets_.begin(), g.in_offsets_.end() - 1);
  for (const auto& e : merged) g.in_sources_[cursor[e.dst]++] = e.src;
  return g;
}

std::optional<NodeIndex> TemporalGraph::find(const TaxpayerId& id) const {
  auto it = nodes_->lookup.find(id);
  if (it == nodes_->lookup.end()) return std::nullopt;
  return it->second;
}

std::span<const NodeIndex> TemporalGraph::out_neighbors(NodeIndex v) const {
  return std::span<const NodeIndex>(out_targets_).subspan(out_offsets_.at(v), out_offsets_.at(v + 1) - out_offsets_[v]);
}

std::span<const NodeIndex> TemporalGraph::in_neighbors(NodeIndex v) const {
  return std::span<const NodeIndex>(in_sources_).subspan(in_offsets_.at(v), in_offsets_.at(v + 1) - in_offsets_[v]);
}

std::span<const EdgePayload> TemporalGraph::out_payloads(NodeIndex v) const {
  return std::span<const EdgePayload>(out_payloads_)
      .subspan(out_offsets_.at(v), out_offsets_.at(v + 1) - out_offsets_[v]);
}

std::optional<EdgePayload> TemporalGraph::edge(NodeIndex src, NodeIndex dst) const {
  auto nbrs = out_neighbors(src);
  auto it = std::lower_bound(nbrs.begin(), nbrs.end(), dst);
  if (it == nbrs.end() || *it != dst) return std::nullopt;
  return out_payloads(src)[static_cast<std::size_t>(it - nbrs.begin())];
}

std::vector<TemporalGraph::Edge> TemporalGraph::edges() const {
  std::vector<Edge> out;
  out.reserve(edge_count());
  for (NodeIndex v = 0; v < node_count(); ++v) {
    auto nbrs = out_neighbors(v);
    auto pay = out_payloads(v);
    for (std::size_t k = 0; k < nbrs.size(); ++k) out.push_back({v, nbrs[k], pay[k].subtotal, pay[k].tx_count});
  }
  return out;
}

TemporalGraph TemporalGraph::induced_subgraph(std::vector<NodeIndex> nodes) const {
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  std::vector<std::int64_t> remap(node_count(), -1);
  std::vector<TaxpayerId> ids;
  std::vector<NodeClass> classes;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    remap.at(nodes[k]) = static_cast<std::int64_t>(k);
    ids.push_back(id(nodes[k]));
    classes.push_back(node_class(nodes[k]));
  }
  std::vector<Edge> sub;
  for (auto v : nodes) {
    auto nbrs = out_neighbors(v);
    auto pay = out_payloads(v);
    for (std::size_t k = 0; k < nbrs.size(); ++k)
      if (remap[nbrs[k]] >= 0)
        sub.push_back({static_cast<NodeIndex>(remap[v]), static_cast<NodeIndex>(remap[nbrs[k]]), pay[k].subtotal,
                       pay[k].tx_count});
  }
  return from_edges(slice_, make_node_table(std::move(ids), std::move(classes)), std::move(sub));
}

namespace {

bool kind_admitted(TxKind k, EdgeKinds kinds) { return kinds == EdgeKinds::all || k == TxKind::income; }

std::shared_ptr<const TemporalGraph::NodeTable> full_node_table(const Dataset& ds) {
  std::vector<TaxpayerId> ids;
  std::vector<NodeClass> classes;
  ids.reserve(ds.taxpayer_count());
  classes.reserve(ds.taxpayer_count());
  for (TaxpayerIndex i = 0; i < ds.taxpayer_count(); ++i) {
    ids.push_back(ds.id(i));
    classes.push_back(ds.node_class(i));
  }
  return TemporalGraph::make_node_table(std::move(ids), std::move(classes));
}

}  // namespace

TemporalGraph build_yearly_efos_network(const Dataset& ds, int year, const YearlyNetworkOptions& opts) {
  const auto rows = ds.rows_in_year(year);
  const auto& tx = ds.transactions();

  std::map<std::pair<TaxpayerIndex, TaxpayerIndex>, EdgePayload> pairs;
  for (std::size_t r = rows.begin; r < rows.end; ++r) {
    if (!kind_admitted(tx.kind[r], opts.kinds) || tx.emitter[r] == tx.receiver[r]) continue;
    if (!ds.is_labeled_efos(tx.emitter[r]) && !ds.is_labeled_efos(tx.receiver[r])) continue;
    auto& p = pairs[{tx.emitter[r], tx.receiver[r]}];
    p.subtotal += tx.subtotal[r];
    p.tx_count += tx.tx_count[r];
  }

  std::map<TaxpayerIndex, std::int64_t> node_tx;
  if (opts.scope == MinTxScope::node) {
    for (const auto& [key, p] : pairs) {
      if (ds.is_labeled_efos(key.first)) node_tx[key.first] += p.tx_count;
      if (ds.is_labeled_efos(key.second)) node_tx[key.second] += p.tx_count;
    }
  }
  auto keep = [&](TaxpayerIndex a, TaxpayerIndex b, const EdgePayload& p) {
    if (opts.scope == MinTxScope::edge) return p.tx_count >= opts.min_tx;
    auto passes = [&](TaxpayerIndex v) { return ds.is_labeled_efos(v) && node_tx[v] >= opts.min_tx; };
    return passes(a) || passes(b);
  };

  std::vector<std::pair<std::pair<TaxpayerIndex, TaxpayerIndex>, EdgePayload>> kept;
  std::vector<TaxpayerIndex> nodes;
  for (const auto& [key, p] : pairs) {
    if (!keep(key.first, key.second, p)) continue;
    kept.emplace_back(key, p);
    nodes.push_back(key.first);
    nodes.push_back(key.second);
  }
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());

  std::vector<TaxpayerId> ids;
  std::vector<NodeClass> classes;
  for (auto v : nodes) {
    ids.push_back(ds.id(v));
    classes.push_back(ds.node_class(v));
  }
  auto local = [&](TaxpayerIndex v) {
    return static_cast<NodeIndex>(std::lower_bound(nodes.begin(), nodes.end(), v) - nodes.begin());
  };
  std::vector<TemporalGraph::Edge> edges;
  edges.reserve(kept.size());
  for (const auto& [key, p] : kept) edges.push_back({local(key.first), local(key.second), p.subtotal, p.tx_count});
  return TemporalGraph::from_edges(Slice::of_year(year),
                                   TemporalGraph::make_node_table(std::move(ids), std::move(classes)),
                                   std::move(edges));
}

AmountRegime compute_activity_regime(const Dataset& ds, const MonthKey& period, EdgeKinds kinds) {
  const auto rows = ds.rows_in_period(period);
  const auto& tx = ds.transactions();
  std::vector<double> amounts;
  for (std::size_t r = rows.begin; r < rows.end; ++r) {
    if (!kind_admitted(tx.kind[r], kinds) || tx.emitter[r] == tx.receiver[r]) continue;
    if (ds.is_labeled_efos(tx.emitter[r])) amounts.push_back(static_cast<double>(tx.subtotal[r]));
  }
  if (amounts.empty()) throw Error("no_efos_activity", "no EFOS emissions in " + to_string(period));
  std::sort(amounts.begin(), amounts.end());
  return {period, stats::percentile_sorted(amounts, 0.25), stats::percentile_sorted(amounts, 0.75), amounts.size()};
}

namespace {

TemporalGraph monthly_network(const Dataset& ds, std::shared_ptr<const TemporalGraph::NodeTable> table,
                              const AmountRegime& regime, const MonthKey& period, EdgeKinds kinds) {
  if (regime.period != period) throw std::invalid_argument("regime period does not match network period");
  const auto rows = ds.rows_in_period(period);
  const auto& tx = ds.transactions();
  std::vector<TemporalGraph::Edge> edges;
  for (std::size_t r = rows.begin; r < rows.end; ++r)
    if (kind_admitted(tx.kind[r], kinds))
      edges.push_back({tx.emitter[r], tx.receiver[r], tx.subtotal[r], tx.tx_count[r]});
  // from_edges aggregates parallel records; the amount filter applies afterwards.
  auto all = TemporalGraph::from_edges(Slice::of_month(period), table, std::move(edges));
  auto kept = all.edges();
  std::erase_if(kept, [&](const TemporalGraph::Edge& e) { return !regime.contains(e.subtotal); });
  return TemporalGraph::from_edges(Slice::of_month(period), std::move(table), std::move(kept));
}

}  // namespace

TemporalGraph build_monthly_network(const Dataset& ds, const AmountRegime& regime, const MonthKey& period,
                                    EdgeKinds kinds) {
  return monthly_network(ds, full_node_table(ds), regime, period, kinds);
}

std::vector<TemporalGraph> build_monthly_networks(const Dataset& ds, int year, EdgeKinds kinds, unsigned threads) {
  auto table = full_node_table(ds);
  std::vector<MonthKey> months;
  std::vector<AmountRegime> regimes;
  for (const auto& m : ds.periods_in_year(year)) {
    try {
      regimes.push_back(compute_activity_regime(ds, m, kinds));
      months.push_back(m);
    } catch (const Error& e) {
      if (e.code() != "no_efos_activity") throw;
    }
  }
  std::vector<TemporalGraph> out(months.size());
  parallel_for(months.size(), threads,
               [&](std::size_t k) { out[k] = monthly_network(ds, table, regimes[k], months[k], kinds); });
  return out;
}

std::vector<NodeIndex> SccPartition::members(std::uint32_t c) const {
  std::vector<NodeIndex> out;
  for (NodeIndex v = 0; v < component.size(); ++v)
    if (component[v] == c) out.push_back(v);
  return out;
}

std::size_t SccPartition::nontrivial_count() const {
  return static_cast<std::size_t>(std::count_if(sizes.begin(), sizes.end(), [](std::size_t s) { return s > 1; }));
}

SccPartition strongly_connected_components(const TemporalGraph& g) {
  constexpr std::uint32_t unset = UINT32_MAX;
  const std::size_t n = g.node_count();
  std::vector<std::uint32_t> index(n, unset), low(n, 0), raw(n, unset);
  std::vector<char> on_stack(n, 0);
  std::vector<NodeIndex> stack;
  struct Frame {
    NodeIndex v;
    std::size_t next;
  };
  std::vector<Frame> calls;
  std::uint32_t counter = 0, raw_count = 0;

  for (NodeIndex root = 0; root < n; ++root) {
    if (index[root] != unset) continue;
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = 1;
    calls.push_back({root, 0});
    while (!calls.empty()) {
      const NodeIndex v = calls.back().v;
      auto nbrs = g.out_neighbors(v);
      if (calls.back().next < nbrs.size()) {
        const NodeIndex w = nbrs[calls.back().next++];
        if (index[w] == unset) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = 1;
          calls.push_back({w, 0});
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      if (low[v] == index[v]) {
        NodeIndex w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          raw[w] = raw_count;
        } while (w != v);
        ++raw_count;
      }
      calls.pop_back();
      if (!calls.empty()) {
        const NodeIndex u = calls.back().v;
        low[u] = std::min(low[u], low[v]);
      }
    }
  }

  SccPartition p;
  p.component.assign(n, 0);
  std::vector<std::uint32_t> relabel(raw_count, unset);
  for (NodeIndex v = 0; v < n; ++v) {
    auto& id = relabel[raw[v]];
    if (id == unset) {
      id = static_cast<std::uint32_t>(p.sizes.size());
      p.sizes.push_back(0);
    }
    p.component[v] = id;
    ++p.sizes[id];
  }
  for (std::uint32_t c = 0; c < p.sizes.size(); ++c)
    if (p.sizes[c] > p.sizes[p.largest]) p.largest = c;
  return p;
}

TemporalGraph largest_scc_subgraph(const TemporalGraph& g, const SccPartition& p) {
  if (g.node_count() == 0) throw Error("empty_graph", "largest SCC of an empty graph");
  if (p.component.size() != g.node_count()) throw std::invalid_argument("partition does not match graph");
  return g.induced_subgraph(p.members(p.largest));
}

void write_edge_list(std::ostream& out, const TemporalGraph& g) {
  out << "src,dst,subtotal,tx_count\n";
  for (const auto& e : g.edges())
    out << g.id(e.src).str() << ',' << g.id(e.dst).str() << ',' << format_centavos(e.subtotal) << ',' << e.tx_count
        << '\n';
}

void write_node_classes(std::ostream& out, const TemporalGraph& g) {
  out << "id,class\n";
  for (NodeIndex v = 0; v < g.node_count(); ++v) out << g.id(v).str() << ',' << to_string(g.node_class(v)) << '\n';
}

}  // namespace efos
