#pragma once

#include <algorithm>
#include <cstdint>
#include <utility>
#include <vector>

#include "adagcl/interactions.hpp"
#include "adagcl/rng.hpp"
#include "adagcl/sparse.hpp"

namespace adagcl {

// Bipartite user-item graph with the degree-normalized adjacency in both
// row-major (users x items) and column-major (items x users) compressed
// forms. Edge ids follow the user-major ordering; `t_edge_id` maps each
// entry of the transposed form back to its user-major edge id so that
// per-edge quantities (gates) can be shared between the two directions.
struct InteractionGraph {
  std::int32_t users = 0;
  std::int32_t items = 0;
  SparseMatrix<double> norm;    // users x items, value 1/sqrt(du*dv)
  SparseMatrix<double> norm_t;  // items x users
  std::vector<std::int32_t> t_edge_id;
  std::vector<std::int32_t> user_degree;
  std::vector<std::int32_t> item_degree;

  std::int64_t edge_count() const { return norm.nnz(); }

  std::pair<std::int32_t, std::int32_t> edge(std::int64_t e) const {
    return {edge_user[e], norm.indices[e]};
  }

  // user endpoint per edge id (norm.indices holds the item endpoint)
  std::vector<std::int32_t> edge_user;

  bool has_edge(std::int32_t u, std::int32_t v) const {
    const auto b = norm.indices.begin() + norm.indptr[u];
    const auto e = norm.indices.begin() + norm.indptr[u + 1];
    return std::binary_search(b, e, v);
  }
};

InteractionGraph build_graph(const InteractionTable& train);

InteractionGraph graph_from_edges(
    std::int32_t users, std::int32_t items,
    std::vector<std::pair<std::int32_t, std::int32_t>> edges);

// Replaces round(ratio * |edges|) uniformly chosen edges with uniformly
// sampled non-edges; edge count is preserved and the normalization rebuilt.
InteractionGraph inject_noise(const InteractionGraph& g, double ratio,
                              std::uint64_t seed);

// Keeps each edge independently with probability keep_prob; used by the
// random edge-drop baseline. Falls back to the input graph when every edge
// would be dropped.
InteractionGraph drop_edges(const InteractionGraph& g, double drop_ratio,
                            RngStream& rng);

// Subset view: keeps exactly the edges whose flag is nonzero.
InteractionGraph subgraph_from_mask(const InteractionGraph& g,
                                    const std::vector<char>& keep);

// Uniformly samples (user,item) pairs absent from the graph, by rejection.
std::vector<std::pair<std::int32_t, std::int32_t>> sample_non_edges(
    const InteractionGraph& g, std::int64_t count, RngStream& rng);

}  // namespace adagcl
