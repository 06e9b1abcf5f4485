#pragma once

#include <cstdint>
#include <vector>

#include "adagcl/encoder.hpp"
#include "adagcl/tensor.hpp"

namespace adagcl {

// (user, positive item, negative item) triples; positives are observed
// training interactions, negatives are not.
struct TripletBatch {
  std::vector<std::int32_t> user;
  std::vector<std::int32_t> pos;
  std::vector<std::int32_t> neg;

  std::size_t size() const { return user.size(); }
  bool empty() const { return user.empty(); }
};

struct ContrastiveConfig {
  double tau = 0.2;
  double lambda1 = 0.1;
  double lambda2 = 1e-5;
};

// Pairwise ranking loss, mean over the batch. Empty batch contributes 0.
template <class T>
Tensor<T> bpr_loss(const Tensor<T>& final_user, const Tensor<T>& final_item,
                   const TripletBatch& batch) {
  if (batch.empty()) return Tensor<T>::scalar(T{0});
  Tensor<T> u = gather_rows(final_user, batch.user);
  Tensor<T> i = gather_rows(final_item, batch.pos);
  Tensor<T> j = gather_rows(final_item, batch.neg);
  Tensor<T> diff = sub(row_sum(mul(u, i)), row_sum(mul(u, j)));
  // -log sigmoid(x) == softplus(-x)
  return mean_all(softplus(mul_scalar(diff, T{-1})));
}

// Node self-discrimination across two views of the same node batch, mean
// over anchors. Cosine similarities; the denominator includes the positive.
template <class T>
Tensor<T> infonce(const Tensor<T>& view1, const Tensor<T>& view2, double tau) {
  if (view1.rows() != view2.rows() || view1.cols() != view2.cols())
    throw Error("infonce: view shape mismatch");
  if (view1.rows() < 2) throw Error("infonce: need at least two anchors");
  if (!(tau > 0)) throw Error("infonce: temperature must be positive");
  Tensor<T> a = l2_normalize_rows(view1);
  Tensor<T> b = l2_normalize_rows(view2);
  Tensor<T> sim = mul_scalar(matmul_nt(a, b), static_cast<T>(1.0 / tau));
  Tensor<T> denom = log(row_sum(exp(sim)));  // cos/tau <= 1/tau, no overflow
  return mean_all(sub(denom, diag(sim)));
}

template <class T>
Tensor<T> l2_reg(const std::vector<Tensor<T>>& params) {
  Tensor<T> acc = Tensor<T>::scalar(T{0});
  for (const auto& p : params) acc = add(acc, frob_sq(p));
  return acc;
}

// L_bpr + lambda1 * (L_ssl^user + L_ssl^item) + lambda2 * ||Theta||_F^2.
// View embeddings must already be detached from generator parameters.
template <class T>
Tensor<T> upper_loss(const Tensor<T>& final_user, const Tensor<T>& final_item,
                     const Tensor<T>& view1_users, const Tensor<T>& view2_users,
                     const Tensor<T>& view1_items, const Tensor<T>& view2_items,
                     const TripletBatch& batch,
                     const std::vector<Tensor<T>>& main_params,
                     const ContrastiveConfig& cfg) {
  Tensor<T> loss = bpr_loss(final_user, final_item, batch);
  if (cfg.lambda1 > 0) {
    Tensor<T> ssl = add(infonce(view1_users, view2_users, cfg.tau),
                        infonce(view1_items, view2_items, cfg.tau));
    loss = add(loss, mul_scalar(ssl, static_cast<T>(cfg.lambda1)));
  }
  if (cfg.lambda2 > 0)
    loss = add(loss,
               mul_scalar(l2_reg(main_params), static_cast<T>(cfg.lambda2)));
  return loss;
}

// Generators' combined objective; gradients reach generator parameters only
// because the two component losses are built from generator tapes.
template <class T>
Tensor<T> lower_loss(const Tensor<T>& generative_loss,
                     const Tensor<T>& denoise_loss) {
  return add(generative_loss, denoise_loss);
}

}  // namespace adagcl
