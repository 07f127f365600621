#include "efos/metrics.hpp"

#include <algorithm>
#include <map>

#include "efos/parallel.hpp"
#include "efos/stats.hpp"

namespace efos {

namespace {

/// Bounded BFS; calls visit(v, depth) once per reached node (depth >= 1).
template <typename Neighbors, typename Visit>
void bounded_bfs(NodeIndex source, int max_depth, Neighbors&& neighbors, std::vector<std::uint32_t>& stamp,
                 std::uint32_t mark, std::vector<NodeIndex>& frontier, std::vector<NodeIndex>& next, Visit&& visit) {
  frontier.assign(1, source);
  stamp[source] = mark;
  for (int depth = 1; depth <= max_depth && !frontier.empty(); ++depth) {
    next.clear();
    for (auto u : frontier)
      for (auto w : neighbors(u))
        if (stamp[w] != mark) {
          stamp[w] = mark;
          next.push_back(w);
          visit(w, depth);
        }
    frontier.swap(next);
  }
}

}  // namespace

ReachProfile reach(const TemporalGraph& g, NodeIndex node, int d_max) {
  if (d_max < 1) throw std::invalid_argument("reach: d_max must be >= 1");
  if (node >= g.node_count()) throw Error("node_not_in_scc", "reach: node index outside graph");
  const std::size_t n = g.node_count();
  std::vector<std::size_t> at_depth(static_cast<std::size_t>(d_max) + 1, 0);
  std::vector<std::uint32_t> stamp(n, 0);
  std::vector<NodeIndex> frontier, next;
  bounded_bfs(
      node, d_max, [&](NodeIndex u) { return g.out_neighbors(u); }, stamp, 1, frontier, next,
      [&](NodeIndex, int depth) { ++at_depth[static_cast<std::size_t>(depth)]; });
  ReachProfile p;
  p.node = g.id(node);
  p.scc_size = n;
  std::size_t seen = 1;
  for (int d = 1; d <= d_max; ++d) {
    seen += at_depth[static_cast<std::size_t>(d)];
    p.values.push_back(static_cast<double>(seen) / static_cast<double>(n));
  }
  return p;
}

ReachProfile reach(const TemporalGraph& g, const TaxpayerId& node, int d_max) {
  auto v = g.find(node);
  if (!v) throw Error("node_not_in_scc", "reach: " + node.str() + " is not in the SCC");
  return reach(g, *v, d_max);
}

std::vector<double> mean_reach(const TemporalGraph& g, std::span<const NodeIndex> nodes, int d_max, unsigned threads) {
  if (nodes.empty()) throw Error("empty_set", "mean_reach over an empty node set");
  std::vector<std::vector<double>> profiles(nodes.size());
  parallel_for(nodes.size(), threads, [&](std::size_t k) { profiles[k] = reach(g, nodes[k], d_max).values; });
  std::vector<double> mean(static_cast<std::size_t>(d_max), 0.0);
  for (const auto& p : profiles)
    for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += p[d];
  for (auto& m : mean) m /= static_cast<double>(nodes.size());
  return mean;
}

std::vector<NodeIndex> efos_nodes(const TemporalGraph& g) {
  std::vector<NodeIndex> out;
  for (NodeIndex v = 0; v < g.node_count(); ++v)
    if (g.is_efos(v)) out.push_back(v);
  return out;
}

namespace {

/// EFOS within max_distance of `node` (either direction or out only).
std::vector<NodeIndex> close_efos_of(const TemporalGraph& g, NodeIndex node, const std::vector<char>& is_efos,
                                     CloseMode mode, int max_distance) {
  if (node >= g.node_count()) throw std::out_of_range("close_efos: node outside graph");
  std::vector<char> close(g.node_count(), 0);
  std::vector<std::uint32_t> stamp(g.node_count(), 0);
  std::vector<NodeIndex> frontier, next;
  auto mark = [&](NodeIndex v, int) {
    if (is_efos[v] && v != node) close[v] = 1;
  };
  bounded_bfs(
      node, max_distance, [&](NodeIndex u) { return g.out_neighbors(u); }, stamp, 1, frontier, next,
      mark);
  if (mode == CloseMode::either_direction)
    bounded_bfs(
        node, max_distance, [&](NodeIndex u) { return g.in_neighbors(u); }, stamp, 2, frontier, next,
        mark);
  std::vector<NodeIndex> out;
  for (NodeIndex v = 0; v < close.size(); ++v)
    if (close[v]) out.push_back(v);
  return out;
}

}  // namespace

std::size_t close_efos_count(const TemporalGraph& g, NodeIndex node, std::span<const NodeIndex> efos, CloseMode mode,
                             int max_distance) {
  std::vector<char> is_efos(g.node_count(), 0);
  for (auto e : efos) is_efos.at(e) = 1;
  return close_efos_of(g, node, is_efos, mode, max_distance).size();
}

std::vector<std::vector<NodeIndex>> close_efos_sets(const TemporalGraph& g, std::span<const NodeIndex> efos,
                                                    CloseMode mode, int max_distance) {
  const std::size_t n = g.node_count();
  std::vector<NodeIndex> sorted(efos.begin(), efos.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  std::vector<std::vector<NodeIndex>> out(n);
  std::vector<std::uint32_t> stamp(n, 0), seen_by(n, 0);
  std::vector<NodeIndex> frontier, next;
  std::uint32_t mark = 0;
  std::uint32_t owner = 0;
  for (auto j : sorted) {
    ++owner;
    // node i is close to j when d(i -> j) <= k: walk in-edges from j.
    auto record = [&](NodeIndex i, int) {
      if (seen_by[i] != owner) {
        seen_by[i] = owner;
        out[i].push_back(j);
      }
    };
    bounded_bfs(
        j, max_distance, [&](NodeIndex u) { return g.in_neighbors(u); }, stamp, ++mark, frontier, next, record);
    if (mode == CloseMode::either_direction)
      bounded_bfs(
          j, max_distance, [&](NodeIndex u) { return g.out_neighbors(u); }, stamp, ++mark, frontier, next, record);
  }
  return out;  // lists are ascending because EFOS are visited in ascending order
}

namespace {

struct Accumulator {
  std::int64_t total = 0;
  int months = 0;
  std::vector<NodeIndex> distinct;  // node indices of the shared table
};

std::vector<Accumulator> accumulate(std::span<const TemporalGraph> monthly, const std::set<TaxpayerId>& efos,
                                    const ProximityOptions& opts, unsigned threads) {
  if (monthly.empty()) return {};
  const auto& table = monthly.front().node_table();
  for (const auto& g : monthly)
    if (g.node_table() != table && g.node_table()->ids != table->ids)
      throw std::invalid_argument("proximity: monthly graphs must share one node table");
  const std::size_t n = table->ids.size();
  std::vector<NodeIndex> efos_idx;
  for (const auto& id : efos)
    if (auto it = table->lookup.find(id); it != table->lookup.end()) efos_idx.push_back(it->second);

  std::vector<std::vector<std::vector<NodeIndex>>> per_month(monthly.size());
  parallel_for(monthly.size(), threads, [&](std::size_t m) {
    per_month[m] = close_efos_sets(monthly[m], efos_idx, opts.close, opts.max_distance);
  });
  std::vector<Accumulator> acc(n);
  for (const auto& sets : per_month)
    for (std::size_t v = 0; v < n; ++v) {
      if (sets[v].empty()) continue;
      acc[v].total += static_cast<std::int64_t>(sets[v].size());
      acc[v].months += 1;
      if (opts.numerator == SigmaNumerator::distinct_yearly)
        acc[v].distinct.insert(acc[v].distinct.end(), sets[v].begin(), sets[v].end());
    }
  if (opts.numerator == SigmaNumerator::distinct_yearly)
    for (auto& a : acc) {
      std::sort(a.distinct.begin(), a.distinct.end());
      a.distinct.erase(std::unique(a.distinct.begin(), a.distinct.end()), a.distinct.end());
      a.total = static_cast<std::int64_t>(a.distinct.size());
    }
  return acc;
}

ProximityIndex make_index(const TaxpayerId& id, int year, const Accumulator& a) {
  return {id, year, a.total, a.months, static_cast<double>(a.total) / a.months, 0.0};
}

}  // namespace

std::optional<ProximityIndex> proximity_index(std::span<const TemporalGraph> monthly, const TaxpayerId& node,
                                              const std::set<TaxpayerId>& efos, const ProximityOptions& opts) {
  if (monthly.empty()) throw std::invalid_argument("proximity_index: no monthly graphs");
  std::int64_t total = 0;
  int months = 0;
  std::set<TaxpayerId> distinct;
  for (const auto& g : monthly) {
    auto v = g.find(node);
    if (!v) continue;
    std::vector<char> is_efos(g.node_count(), 0);
    for (const auto& id : efos)
      if (auto e = g.find(id)) is_efos[*e] = 1;
    const auto close = close_efos_of(g, *v, is_efos, opts.close, opts.max_distance);
    if (close.empty()) continue;
    total += static_cast<std::int64_t>(close.size());
    ++months;
    for (auto j : close) distinct.insert(g.id(j));
  }
  if (months == 0) return std::nullopt;
  if (opts.numerator == SigmaNumerator::distinct_yearly) total = static_cast<std::int64_t>(distinct.size());
  return ProximityIndex{node, monthly.front().slice().year, total, months, static_cast<double>(total) / months, 1.0};
}

std::vector<ProximityIndex> proximity_indices(std::span<const TemporalGraph> monthly, const std::set<TaxpayerId>& efos,
                                              const ProximityOptions& opts, unsigned threads) {
  auto acc = accumulate(monthly, efos, opts, threads);
  std::vector<ProximityIndex> out;
  if (acc.empty()) return out;
  const auto& table = *monthly.front().node_table();
  const int year = monthly.front().slice().year;
  for (std::size_t v = 0; v < acc.size(); ++v)
    if (acc[v].months > 0) out.push_back(make_index(table.ids[v], year, acc[v]));
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.node < b.node; });
  if (!out.empty()) normalize(out);
  return out;
}

void normalize(std::span<ProximityIndex> indices) {
  if (indices.empty()) throw Error("empty_indices", "normalize: no proximity indices");
  double max = 0.0;
  for (const auto& p : indices) max = std::max(max, p.sigma);
  for (auto& p : indices) p.sigma_hat = max > 0 ? p.sigma / max : 0.0;
}

std::set<TaxpayerId> normalize_and_select(std::span<ProximityIndex> indices, double theta) {
  if (!(theta >= 0.0 && theta <= 1.0)) throw std::invalid_argument("theta outside [0,1]");
  normalize(indices);
  std::set<TaxpayerId> out;
  for (const auto& p : indices)
    if (p.sigma_hat >= theta) out.insert(p.node);
  return out;
}

std::set<TaxpayerId> quartile_cut(std::span<const ProximityIndex> indices, double q) {
  if (indices.empty()) throw Error("empty_indices", "quartile_cut: no proximity indices");
  std::vector<double> sigmas;
  for (const auto& p : indices) sigmas.push_back(p.sigma);
  const double cut = stats::percentile(sigmas, q);
  std::set<TaxpayerId> out;
  for (const auto& p : indices)
    if (p.sigma >= cut) out.insert(p.node);
  return out;
}

}  // namespace efos
