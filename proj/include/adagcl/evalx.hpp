#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include "adagcl/interactions.hpp"
#include "adagcl/tensor.hpp"

namespace adagcl {

enum class EvalMode { Validation, Test };

inline std::string to_string(EvalMode m) {
  return m == EvalMode::Validation ? "validation" : "test";
}

struct EvalReport {
  std::vector<int> cutoffs;
  std::map<int, double> recall;  // macro average over evaluable users
  std::map<int, double> ndcg;
  std::map<int, std::vector<double>> per_user_recall;
  std::map<int, std::vector<double>> per_user_ndcg;
  std::vector<std::int32_t> users;  // evaluable users, ascending
  std::string mode;
};

// Descending score order, ties broken by ascending item index; masked items
// are excluded from the ranking entirely.
template <class T>
std::vector<std::int32_t> rank_items(const std::vector<T>& scores,
                                     const std::vector<char>& masked) {
  std::vector<std::int32_t> idx;
  idx.reserve(scores.size());
  for (std::int32_t j = 0; j < static_cast<std::int32_t>(scores.size()); ++j)
    if (masked.empty() || !masked[j]) idx.push_back(j);
  std::sort(idx.begin(), idx.end(), [&](std::int32_t a, std::int32_t b) {
    return scores[a] != scores[b] ? scores[a] > scores[b] : a < b;
  });
  return idx;
}

// Same ordering, but only the first k entries are materialized.
template <class T>
std::vector<std::int32_t> rank_items_topk(const std::vector<T>& scores,
                                          const std::vector<char>& masked,
                                          std::size_t k) {
  std::vector<std::int32_t> idx;
  idx.reserve(scores.size());
  for (std::int32_t j = 0; j < static_cast<std::int32_t>(scores.size()); ++j)
    if (masked.empty() || !masked[j]) idx.push_back(j);
  const auto cmp = [&](std::int32_t a, std::int32_t b) {
    return scores[a] != scores[b] ? scores[a] > scores[b] : a < b;
  };
  if (idx.size() > k) {
    std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), cmp);
    idx.resize(k);
  } else {
    std::sort(idx.begin(), idx.end(), cmp);
  }
  return idx;
}

inline double recall_at_n(const std::vector<std::int32_t>& ranked,
                          const std::vector<char>& relevant,
                          std::int64_t relevant_count, int n) {
  if (relevant_count < 1) throw UsageError("recall_at_n: empty relevant set");
  std::int64_t hits = 0;
  const std::size_t top = std::min<std::size_t>(n, ranked.size());
  for (std::size_t p = 0; p < top; ++p)
    if (relevant[ranked[p]]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(relevant_count);
}

inline double ndcg_at_n(const std::vector<std::int32_t>& ranked,
                        const std::vector<char>& relevant,
                        std::int64_t relevant_count, int n) {
  if (relevant_count < 1) throw UsageError("ndcg_at_n: empty relevant set");
  double dcg = 0;
  const std::size_t top = std::min<std::size_t>(n, ranked.size());
  for (std::size_t p = 0; p < top; ++p)
    if (relevant[ranked[p]])
      dcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
  double idcg = 0;
  const std::int64_t ideal = std::min<std::int64_t>(n, relevant_count);
  for (std::int64_t p = 1; p <= ideal; ++p)
    idcg += 1.0 / std::log2(static_cast<double>(p) + 1.0);
  return dcg / idcg;
}

namespace detail_eval {

inline std::vector<std::vector<std::int32_t>> items_by_user(
    const InteractionTable& t) {
  std::vector<std::vector<std::int32_t>> out(t.user_count);
  for (const auto& [u, v] : t.records) out[u].push_back(v);
  return out;
}

}  // namespace detail_eval

// All-rank protocol: for each user with >=1 relevant item in the target
// split, every non-masked item is ranked. Validation mode masks training
// items; test mode masks training and validation items. Per-user ranking is
// parallelized over a frozen snapshot with deterministic assembly.
template <class T>
EvalReport evaluate(const Tensor<T>& final_user, const Tensor<T>& final_item,
                    const SplitSet& splits, EvalMode mode,
                    std::vector<int> cutoffs = {20, 40}, int threads = 1,
                    const std::vector<char>* item_filter = nullptr) {
  if (cutoffs.empty()) throw UsageError("evaluate: need at least one cutoff");
  std::sort(cutoffs.begin(), cutoffs.end());
  const std::int32_t users = final_user.rows();
  const std::int32_t items = final_item.rows();
  const std::int32_t d = final_user.cols();

  const InteractionTable& target =
      mode == EvalMode::Validation ? splits.validation : splits.test;
  auto train_items = detail_eval::items_by_user(splits.train);
  auto val_items = detail_eval::items_by_user(splits.validation);
  auto rel_items = detail_eval::items_by_user(target);

  EvalReport rep;
  rep.cutoffs = cutoffs;
  rep.mode = to_string(mode);
  for (std::int32_t u = 0; u < users; ++u) {
    std::int64_t n_rel = 0;
    for (std::int32_t v : rel_items[u])
      if (!item_filter || (*item_filter)[v]) ++n_rel;
    if (n_rel > 0) rep.users.push_back(u);
  }
  if (rep.users.empty()) throw DataError("evaluate: no evaluable users");

  const std::size_t n_eval = rep.users.size();
  for (int n : cutoffs) {
    rep.per_user_recall[n].assign(n_eval, 0.0);
    rep.per_user_ndcg[n].assign(n_eval, 0.0);
  }
  const int max_n = cutoffs.back();

  const auto worker = [&](std::size_t begin, std::size_t end) {
    std::vector<T> scores(items);
    std::vector<char> masked(items), relevant(items);
    using EVec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
    detail::ECMap<T> V(final_item.value().data(), items, d);
    for (std::size_t k = begin; k < end; ++k) {
      const std::int32_t u = rep.users[k];
      Eigen::Map<const EVec> uvec(
          final_user.value().data() + static_cast<std::size_t>(u) * d, d);
      Eigen::Map<EVec>(scores.data(), items).noalias() = V * uvec;

      std::fill(masked.begin(), masked.end(), 0);
      std::fill(relevant.begin(), relevant.end(), 0);
      for (std::int32_t v : train_items[u]) masked[v] = 1;
      if (mode == EvalMode::Test)
        for (std::int32_t v : val_items[u]) masked[v] = 1;
      std::int64_t n_rel = 0;
      for (std::int32_t v : rel_items[u])
        if (!item_filter || (*item_filter)[v]) {
          relevant[v] = 1;
          ++n_rel;
        }
      auto ranked = rank_items_topk(scores, masked, max_n);
      for (int n : cutoffs) {
        rep.per_user_recall[n][k] = recall_at_n(ranked, relevant, n_rel, n);
        rep.per_user_ndcg[n][k] = ndcg_at_n(ranked, relevant, n_rel, n);
      }
    }
  };

  const int nthreads = std::max(1, threads);
  if (nthreads == 1 || n_eval < 64) {
    worker(0, n_eval);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (n_eval + nthreads - 1) / nthreads;
    for (int t = 0; t < nthreads; ++t) {
      const std::size_t b = std::min(n_eval, t * chunk);
      const std::size_t e = std::min(n_eval, b + chunk);
      if (b < e) pool.emplace_back(worker, b, e);
    }
    for (auto& th : pool) th.join();
  }

  for (int n : cutoffs) {
    const auto& pr = rep.per_user_recall[n];
    const auto& pn = rep.per_user_ndcg[n];
    rep.recall[n] = std::accumulate(pr.begin(), pr.end(), 0.0) / n_eval;
    rep.ndcg[n] = std::accumulate(pn.begin(), pn.end(), 0.0) / n_eval;
  }
  return rep;
}

}  // namespace adagcl
