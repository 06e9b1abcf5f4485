#pragma once

#include <cstdint>
#include <vector>

#include "adagcl/encoder.hpp"
#include "adagcl/graph.hpp"
#include "adagcl/nn.hpp"
#include "adagcl/objectives.hpp"

namespace adagcl {

// Stretched binary-concrete relaxation of Bernoulli edge masks with a hard
// sigmoid; the canonical constants for L0-style gating.
struct HardConcrete {
  double beta = 2.0 / 3.0;   // temperature, > 0
  double gamma = -0.1;       // stretch lower bound, < 0
  double zeta = 1.1;         // stretch upper bound, > 1

  void validate() const {
    if (!(beta > 0) || !(gamma < 0) || !(zeta > 1))
      throw UsageError("hard-concrete constants require beta>0, gamma<0, zeta>1");
  }
};

enum class GateMode { Train, Eval };

// Per-layer edge logits -> per-layer gate MLPs over concatenated endpoint
// embeddings from the previous propagation layer.
template <class T>
struct Denoiser {
  Tensor<T> user_table;
  Tensor<T> item_table;
  std::vector<Mlp<T>> gate_mlps;  // one per layer, 2d -> d -> 1
  HardConcrete hc;
  Propagation propagation = Propagation::Residual;

  Denoiser() = default;
  Denoiser(std::int32_t users, std::int32_t items, std::int32_t dim,
           std::int32_t L, Propagation prop, RngStream& rng)
      : propagation(prop) {
    user_table = xavier_uniform<T>(users, dim, rng);
    item_table = xavier_uniform<T>(items, dim, rng);
    for (std::int32_t l = 0; l < L; ++l)
      gate_mlps.emplace_back(std::vector<std::int32_t>{2 * dim, dim, 1},
                             Activation::Tanh, rng);
  }

  std::int32_t layers() const {
    return static_cast<std::int32_t>(gate_mlps.size());
  }

  std::vector<Tensor<T>> params() const {
    std::vector<Tensor<T>> p{user_table, item_table};
    for (const auto& m : gate_mlps)
      for (const auto& t : m.params()) p.push_back(t);
    return p;
  }
};

// alpha_e = Mlp(concat(e_u, e_v)) for each edge, differentiable into both
// endpoint rows.
template <class T>
Tensor<T> edge_score(const Tensor<T>& user_emb, const Tensor<T>& item_emb,
                     const InteractionGraph& g, const Mlp<T>& gate_mlp) {
  std::vector<std::int32_t> ui(g.edge_user.begin(), g.edge_user.end());
  std::vector<std::int32_t> vi(g.norm.indices.begin(), g.norm.indices.end());
  Tensor<T> input = concat_cols(gather_rows(user_emb, std::move(ui)),
                                gather_rows(item_emb, std::move(vi)));
  return gate_mlp.forward(input);
}

template <class T>
Tensor<T> uniform_noise_logits(std::int64_t count, RngStream& rng) {
  std::vector<T> v(static_cast<std::size_t>(count));
  for (auto& x : v) {
    const double u = rng.next_open_real();
    x = static_cast<T>(std::log(u) - std::log1p(-u));
  }
  return Tensor<T>::leaf(static_cast<std::int32_t>(count), 1, std::move(v),
                         false);
}

// Train mode: m = clamp(sigmoid((logit(u) + alpha)/beta) * (zeta-gamma) +
// gamma, 0, 1). Eval mode uses u = 0.5, i.e. zero noise logits.
template <class T>
Tensor<T> sample_gate(const Tensor<T>& alpha, const Tensor<T>& noise_logits,
                      const HardConcrete& hc) {
  hc.validate();
  detail::check_same_shape(alpha, noise_logits, "sample_gate");
  Tensor<T> s = sigmoid(
      mul_scalar(add(noise_logits, alpha), static_cast<T>(1.0 / hc.beta)));
  Tensor<T> stretched = add_scalar(
      mul_scalar(s, static_cast<T>(hc.zeta - hc.gamma)), static_cast<T>(hc.gamma));
  return clamp(stretched, T{0}, T{1});
}

// P(gate != 0) = sigmoid(alpha - beta * log(-gamma/zeta)), per edge.
template <class T>
Tensor<T> expected_l0(const Tensor<T>& alpha, const HardConcrete& hc) {
  hc.validate();
  const double shift = -hc.beta * std::log(-hc.gamma / hc.zeta);
  return sigmoid(add_scalar(alpha, static_cast<T>(shift)));
}

template <class T>
struct DenoiseForward {
  EmbeddingState<T> emb;
  Tensor<T> l0_sum;                   // sum over layers and edges
  std::vector<double> kept_fraction;  // mean gate per layer (diagnostic)
};

// Gated propagation: per layer, edge gates sampled from scores of the
// previous layer's embeddings multiply the normalized adjacency entries
// before message passing. Degrees are not recomputed per sample.
template <class T>
DenoiseForward<T> denoise_forward(const InteractionGraph& g,
                                  const Denoiser<T>& den, GateMode mode,
                                  RngStream& gate_rng) {
  const std::int32_t L = den.layers();
  const std::int64_t E = g.edge_count();

  DenoiseForward<T> f;
  f.emb.layer_user.push_back(den.user_table);
  f.emb.layer_item.push_back(den.item_table);
  f.l0_sum = Tensor<T>::scalar(T{0});

  for (std::int32_t l = 1; l <= L; ++l) {
    const Tensor<T>& pu = f.emb.layer_user.back();
    const Tensor<T>& pv = f.emb.layer_item.back();
    Tensor<T> alpha = edge_score(pu, pv, g, den.gate_mlps[l - 1]);
    Tensor<T> noise = mode == GateMode::Train
                          ? uniform_noise_logits<T>(E, gate_rng)
                          : Tensor<T>::zeros(static_cast<std::int32_t>(E), 1);
    Tensor<T> gate = sample_gate(alpha, noise, den.hc);
    f.l0_sum = add(f.l0_sum, sum_all(expected_l0(alpha, den.hc)));

    double kept = 0;
    for (T v : gate.value()) kept += static_cast<double>(v);
    f.kept_fraction.push_back(E > 0 ? kept / static_cast<double>(E) : 0.0);

    Tensor<T> zu = spmm_gated(g.norm, gate, pv);
    Tensor<T> zv = spmm_gated(g.norm_t, gate, pu, &g.t_edge_id);
    if (den.propagation == Propagation::Residual) {
      f.emb.layer_user.push_back(add(zu, pu));
      f.emb.layer_item.push_back(add(zv, pv));
    } else {
      f.emb.layer_user.push_back(zu);
      f.emb.layer_item.push_back(zv);
    }
  }

  Tensor<T> fu = f.emb.layer_user[0];
  Tensor<T> fv = f.emb.layer_item[0];
  for (std::int32_t l = 1; l <= L; ++l) {
    fu = add(fu, f.emb.layer_user[l]);
    fv = add(fv, f.emb.layer_item[l]);
  }
  if (den.propagation == Propagation::LightGcn) {
    fu = mul_scalar(fu, T{1} / static_cast<T>(L + 1));
    fv = mul_scalar(fv, T{1} / static_cast<T>(L + 1));
  }
  f.emb.final_user = fu;
  f.emb.final_item = fv;
  return f;
}

template <class T>
struct DenoiseLossParts {
  Tensor<T> l0;   // raw sum, before weighting
  Tensor<T> bpr;
  Tensor<T> total;
};

// L_den = lc_weight * L_c + L_bpr(denoised embeddings) + lambda2 reg.
template <class T>
DenoiseLossParts<T> denoise_loss(const DenoiseForward<T>& f,
                                 const Denoiser<T>& den,
                                 const TripletBatch& batch, double lc_weight,
                                 double lambda2, bool include_task) {
  DenoiseLossParts<T> parts;
  parts.l0 = f.l0_sum;
  parts.total = mul_scalar(f.l0_sum, static_cast<T>(lc_weight));
  if (include_task && !batch.empty()) {
    parts.bpr = bpr_loss(f.emb.final_user, f.emb.final_item, batch);
    parts.total = add(parts.total, parts.bpr);
  } else {
    parts.bpr = Tensor<T>::scalar(T{0});
  }
  if (lambda2 > 0)
    parts.total = add(parts.total,
                      mul_scalar(l2_reg(den.params()), static_cast<T>(lambda2)));
  return parts;
}

}  // namespace adagcl
