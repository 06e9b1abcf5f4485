#include "adagcl/graph.hpp"

#include <cmath>
#include <unordered_set>

namespace adagcl {

namespace {

InteractionGraph build_from_sorted_edges(
    std::int32_t users, std::int32_t items,
    const std::vector<std::pair<std::int32_t, std::int32_t>>& edges) {
  InteractionGraph g;
  g.users = users;
  g.items = items;
  g.user_degree.assign(users, 0);
  g.item_degree.assign(items, 0);
  for (const auto& [u, v] : edges) {
    g.user_degree[u]++;
    g.item_degree[v]++;
  }

  g.norm.rows = users;
  g.norm.cols = items;
  g.norm.indptr.assign(static_cast<std::size_t>(users) + 1, 0);
  g.norm.indices.reserve(edges.size());
  g.norm.values.reserve(edges.size());
  g.edge_user.reserve(edges.size());
  for (const auto& [u, v] : edges) {
    g.norm.indptr[static_cast<std::size_t>(u) + 1]++;
    g.norm.indices.push_back(v);
    g.norm.values.push_back(
        1.0 / std::sqrt(static_cast<double>(g.user_degree[u]) *
                        static_cast<double>(g.item_degree[v])));
    g.edge_user.push_back(u);
  }
  for (std::int32_t u = 0; u < users; ++u)
    g.norm.indptr[u + 1] += g.norm.indptr[u];

  g.norm_t = g.norm.transposed(&g.t_edge_id);
  return g;
}

}  // namespace

InteractionGraph build_graph(const InteractionTable& train) {
  if (train.records.empty()) throw DataError("build_graph: empty table");
  return build_from_sorted_edges(train.user_count, train.item_count,
                                 train.records);
}

InteractionGraph graph_from_edges(
    std::int32_t users, std::int32_t items,
    std::vector<std::pair<std::int32_t, std::int32_t>> edges) {
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  if (edges.empty()) throw DataError("graph_from_edges: no edges");
  return build_from_sorted_edges(users, items, edges);
}

InteractionGraph inject_noise(const InteractionGraph& g, double ratio,
                              std::uint64_t seed) {
  if (ratio < 0.0 || ratio > 1.0)
    throw UsageError("inject_noise: ratio must be in [0,1]");
  const std::int64_t total = g.edge_count();
  const std::int64_t n_replace =
      static_cast<std::int64_t>(std::llround(ratio * static_cast<double>(total)));
  if (n_replace == 0) return g;

  const std::int64_t capacity =
      static_cast<std::int64_t>(g.users) * g.items - total;
  if (capacity < n_replace)
    throw DataError("inject_noise: graph too dense to place fake edges");

  RngStream rng(seed, "noise");

  // choose edges to drop via partial Fisher-Yates over edge ids
  std::vector<std::int64_t> ids(total);
  for (std::int64_t i = 0; i < total; ++i) ids[i] = i;
  for (std::int64_t i = 0; i < n_replace; ++i) {
    const std::int64_t j =
        i + static_cast<std::int64_t>(rng.next_below(total - i));
    std::swap(ids[i], ids[j]);
  }
  std::unordered_set<std::int64_t> dropped(ids.begin(),
                                           ids.begin() + n_replace);

  std::unordered_set<std::int64_t> occupied;
  occupied.reserve(static_cast<std::size_t>(total) * 2);
  const auto key = [&](std::int32_t u, std::int32_t v) {
    return static_cast<std::int64_t>(u) * g.items + v;
  };
  for (std::int64_t e = 0; e < total; ++e) {
    const auto [u, v] = g.edge(e);
    occupied.insert(key(u, v));
  }

  std::vector<std::pair<std::int32_t, std::int32_t>> edges;
  edges.reserve(total);
  for (std::int64_t e = 0; e < total; ++e)
    if (!dropped.count(e)) edges.push_back(g.edge(e));

  // rejection-sample fake edges against the original edge set and each other
  std::int64_t placed = 0;
  while (placed < n_replace) {
    const auto u = static_cast<std::int32_t>(rng.next_below(g.users));
    const auto v = static_cast<std::int32_t>(rng.next_below(g.items));
    if (occupied.insert(key(u, v)).second) {
      edges.emplace_back(u, v);
      ++placed;
    }
  }

  std::sort(edges.begin(), edges.end());
  return build_from_sorted_edges(g.users, g.items, edges);
}

InteractionGraph drop_edges(const InteractionGraph& g, double drop_ratio,
                            RngStream& rng) {
  if (drop_ratio < 0.0 || drop_ratio >= 1.0)
    throw UsageError("drop_edges: ratio must be in [0,1)");
  const std::int64_t total = g.edge_count();
  std::vector<char> keep(total, 1);
  std::int64_t kept = total;
  for (std::int64_t e = 0; e < total; ++e)
    if (rng.next_real() < drop_ratio) {
      keep[e] = 0;
      --kept;
    }
  if (kept == 0) return g;
  return subgraph_from_mask(g, keep);
}

std::vector<std::pair<std::int32_t, std::int32_t>> sample_non_edges(
    const InteractionGraph& g, std::int64_t count, RngStream& rng) {
  const std::int64_t capacity =
      static_cast<std::int64_t>(g.users) * g.items - g.edge_count();
  if (capacity < count)
    throw DataError("sample_non_edges: graph too dense");
  std::vector<std::pair<std::int32_t, std::int32_t>> out;
  out.reserve(static_cast<std::size_t>(count));
  while (static_cast<std::int64_t>(out.size()) < count) {
    const auto u = static_cast<std::int32_t>(rng.next_below(g.users));
    const auto v = static_cast<std::int32_t>(rng.next_below(g.items));
    if (!g.has_edge(u, v)) out.emplace_back(u, v);
  }
  return out;
}

InteractionGraph subgraph_from_mask(const InteractionGraph& g,
                                    const std::vector<char>& keep) {
  if (static_cast<std::int64_t>(keep.size()) != g.edge_count())
    throw UsageError("subgraph_from_mask: mask size mismatch");
  std::vector<std::pair<std::int32_t, std::int32_t>> edges;
  for (std::int64_t e = 0; e < g.edge_count(); ++e)
    if (keep[e]) edges.push_back(g.edge(e));
  if (edges.empty()) throw DataError("subgraph_from_mask: all edges removed");
  return build_from_sorted_edges(g.users, g.items, edges);
}

}  // namespace adagcl
