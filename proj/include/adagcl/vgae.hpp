#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "adagcl/encoder.hpp"
#include "adagcl/graph.hpp"
#include "adagcl/nn.hpp"
#include "adagcl/objectives.hpp"

namespace adagcl {

// Variational graph auto-encoder view generator: GCN encoder over its own
// embedding tables, mean/log-std MLP heads, reparameterized latent, and an
// MLP decoder over edge pairs. Node stacking order everywhere: users
// 0..I-1, items I..I+J-1.
template <class T>
struct Vgae {
  Tensor<T> user_table;
  Tensor<T> item_table;
  Mlp<T> mu_head;       // d -> d
  Mlp<T> logstd_head;   // d -> d
  Mlp<T> decoder;       // 2d -> d -> 1
  std::int32_t layers = 2;
  Propagation propagation = Propagation::Residual;

  Vgae() = default;
  Vgae(std::int32_t users, std::int32_t items, std::int32_t dim,
       std::int32_t L, Propagation prop, RngStream& rng)
      : layers(L), propagation(prop) {
    user_table = xavier_uniform<T>(users, dim, rng);
    item_table = xavier_uniform<T>(items, dim, rng);
    mu_head = Mlp<T>({dim, dim}, Activation::Identity, rng);
    logstd_head = Mlp<T>({dim, dim}, Activation::Identity, rng);
    decoder = Mlp<T>({2 * dim, dim, 1}, Activation::Tanh, rng);
  }

  std::vector<Tensor<T>> params() const {
    std::vector<Tensor<T>> p{user_table, item_table};
    for (const auto& t : mu_head.params()) p.push_back(t);
    for (const auto& t : logstd_head.params()) p.push_back(t);
    for (const auto& t : decoder.params()) p.push_back(t);
    return p;
  }
};

template <class T>
struct VgaeForward {
  Tensor<T> encoded;  // (I+J) x d stacked GCN output
  Tensor<T> mu;
  Tensor<T> log_std;
  Tensor<T> latent;
};

// Deterministic encoder pass: GCN propagation then row-wise heads.
template <class T>
VgaeForward<T> vgae_encode(const InteractionGraph& g, const Vgae<T>& v) {
  EmbeddingState<T> enc =
      propagate(g, v.user_table, v.item_table, v.layers, v.propagation);
  VgaeForward<T> f;
  f.encoded = concat_rows(enc.final_user, enc.final_item);
  f.mu = v.mu_head.forward(f.encoded);
  f.log_std = v.logstd_head.forward(f.encoded);
  return f;
}

template <class T>
Tensor<T> make_normal_noise(std::int32_t rows, std::int32_t cols,
                            RngStream& rng) {
  std::vector<T> v(static_cast<std::size_t>(rows) * cols);
  for (auto& x : v) x = static_cast<T>(rng.next_normal());
  return Tensor<T>::leaf(rows, cols, std::move(v), false);
}

// latent = mu + exp(log_std) * eps; gradient reaches mu and log_std only.
template <class T>
Tensor<T> reparameterize(const Tensor<T>& mu, const Tensor<T>& log_std,
                         const Tensor<T>& eps) {
  detail::check_same_shape(mu, log_std, "reparameterize");
  detail::check_same_shape(mu, eps, "reparameterize");
  return add(mu, mul(exp(log_std), eps));
}

// Canonicalizes each pair of global node indices to (user-row, item-row) so
// the decoded probability does not depend on the listing order.
template <class T>
Tensor<T> decode_edge_logits(
    const Tensor<T>& latent, std::int32_t users,
    const std::vector<std::pair<std::int32_t, std::int32_t>>& pairs,
    const Mlp<T>& decoder) {
  std::vector<std::int32_t> ui, vi;
  ui.reserve(pairs.size());
  vi.reserve(pairs.size());
  for (const auto& [a, b] : pairs) {
    const std::int32_t u = a < users ? a : b;
    const std::int32_t v = a < users ? b : a;
    if (u < 0 || u >= users || v < users || v >= latent.rows())
      throw Error("decode_edge_logits: pair is not (user, item)");
    ui.push_back(u);
    vi.push_back(v);
  }
  Tensor<T> input = concat_cols(gather_rows(latent, std::move(ui)),
                                gather_rows(latent, std::move(vi)));
  return decoder.forward(input);
}

template <class T>
Tensor<T> decode_edges(
    const Tensor<T>& latent, std::int32_t users,
    const std::vector<std::pair<std::int32_t, std::int32_t>>& pairs,
    const Mlp<T>& decoder) {
  return sigmoid(decode_edge_logits(latent, users, pairs, decoder));
}

struct ViewSample {
  InteractionGraph graph;
  bool fallback = false;  // every edge was dropped; original graph returned
};

// Keeps each observed edge independently with its decoded probability.
// The discrete sample carries no gradient.
template <class T>
ViewSample generate_view(const InteractionGraph& g,
                         const std::vector<T>& keep_probs, RngStream& rng) {
  if (static_cast<std::int64_t>(keep_probs.size()) != g.edge_count())
    throw Error("generate_view: one probability per observed edge required");
  std::vector<char> keep(keep_probs.size(), 0);
  std::int64_t kept = 0;
  for (std::size_t e = 0; e < keep_probs.size(); ++e)
    if (rng.next_real() < static_cast<double>(keep_probs[e])) {
      keep[e] = 1;
      ++kept;
    }
  ViewSample out;
  if (kept == 0) {
    out.graph = g;
    out.fallback = true;
    return out;
  }
  out.graph = subgraph_from_mask(g, keep);
  return out;
}

// Optional variant: additionally decodes `count` sampled non-edges and adds
// the ones whose Bernoulli draw succeeds (kept behind a config flag).
template <class T>
InteractionGraph add_generated_edges(const InteractionGraph& view,
                                     const InteractionGraph& original,
                                     const Vgae<T>& v, const Tensor<T>& latent,
                                     std::int64_t count, RngStream& rng) {
  auto candidates = sample_non_edges(original, count, rng);
  std::vector<std::pair<std::int32_t, std::int32_t>> pairs;
  pairs.reserve(candidates.size());
  for (const auto& [u, i] : candidates)
    pairs.emplace_back(u, i + original.users);
  NoGradGuard ng;
  Tensor<T> probs = decode_edges(latent, original.users, pairs, v.decoder);
  std::vector<std::pair<std::int32_t, std::int32_t>> edges;
  for (std::int64_t e = 0; e < view.edge_count(); ++e)
    edges.push_back(view.edge(e));
  for (std::size_t k = 0; k < candidates.size(); ++k)
    if (rng.next_real() < static_cast<double>(probs.value()[k]))
      edges.push_back(candidates[k]);
  return graph_from_edges(original.users, original.items, std::move(edges));
}

// KL(q(z|x) || N(0,I)) with diagonal Gaussians, mean over nodes:
// 0.5 * mean_rows sum_dims (mu^2 + sigma^2 - 1 - 2 log sigma).
template <class T>
Tensor<T> kl_to_standard_normal(const Tensor<T>& mu, const Tensor<T>& log_std) {
  Tensor<T> sigma_sq = exp(mul_scalar(log_std, T{2}));
  Tensor<T> per_dim = add_scalar(
      sub(add(mul(mu, mu), sigma_sq), mul_scalar(log_std, T{2})), T{-1});
  return mul_scalar(mean_all(row_sum(per_dim)), T{0.5});
}

// Mean binary cross-entropy: observed edges labelled 1, sampled non-edges
// labelled 0, both decoded through the shared decoder.
template <class T>
Tensor<T> reconstruction_loss(const Tensor<T>& pos_logits,
                              const Tensor<T>& neg_logits) {
  const auto n_pos = static_cast<T>(pos_logits.rows());
  const auto n_neg = static_cast<T>(neg_logits.rows());
  Tensor<T> total = add(sum_all(softplus(mul_scalar(pos_logits, T{-1}))),
                        sum_all(softplus(neg_logits)));
  return mul_scalar(total, T{1} / (n_pos + n_neg));
}

template <class T>
struct VgaeLossParts {
  Tensor<T> kl;
  Tensor<T> dis;
  Tensor<T> bpr;
  Tensor<T> total;
};

// L_gen = L_kl + L_dis + L_bpr(mu embeddings) + lambda2 ||Theta||_F^2.
// `include_task` off drops the BPR term (reconstruction-only training).
template <class T>
VgaeLossParts<T> vgae_loss(const InteractionGraph& g, const Vgae<T>& v,
                           const VgaeForward<T>& f, std::int32_t neg_ratio,
                           const TripletBatch& batch, double lambda2,
                           bool include_task, RngStream& neg_rng) {
  VgaeLossParts<T> parts;
  parts.kl = kl_to_standard_normal(f.mu, f.log_std);

  std::vector<std::pair<std::int32_t, std::int32_t>> pos_pairs;
  pos_pairs.reserve(static_cast<std::size_t>(g.edge_count()));
  for (std::int64_t e = 0; e < g.edge_count(); ++e) {
    const auto [u, i] = g.edge(e);
    pos_pairs.emplace_back(u, i + g.users);
  }
  Tensor<T> pos_logits =
      decode_edge_logits(f.latent, g.users, pos_pairs, v.decoder);

  const std::int64_t n_neg = neg_ratio * g.edge_count();
  auto negs = sample_non_edges(g, n_neg, neg_rng);
  std::vector<std::pair<std::int32_t, std::int32_t>> neg_pairs;
  neg_pairs.reserve(negs.size());
  for (const auto& [u, i] : negs) neg_pairs.emplace_back(u, i + g.users);
  Tensor<T> neg_logits =
      decode_edge_logits(f.latent, g.users, neg_pairs, v.decoder);

  parts.dis = reconstruction_loss(pos_logits, neg_logits);
  parts.total = add(parts.kl, parts.dis);

  if (include_task && !batch.empty()) {
    TripletBatch shifted = batch;
    for (auto& i : shifted.pos) i += g.users;
    for (auto& j : shifted.neg) j += g.users;
    parts.bpr = bpr_loss(f.mu, f.mu, shifted);
    parts.total = add(parts.total, parts.bpr);
  } else {
    parts.bpr = Tensor<T>::scalar(T{0});
  }
  if (lambda2 > 0)
    parts.total = add(
        parts.total, mul_scalar(l2_reg(v.params()), static_cast<T>(lambda2)));
  return parts;
}

}  // namespace adagcl
