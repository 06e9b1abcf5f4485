#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "adagcl/graph.hpp"
#include "adagcl/tensor.hpp"

namespace adagcl {

// Residual: e_l = z_l + e_{l-1}, node embedding = sum over layers 0..L.
// LightGcn: e_l = z_l, node embedding = mean over layers (reference variant
// for comparison runs).
enum class Propagation { Residual, LightGcn };

inline Propagation propagation_from_string(const std::string& s) {
  if (s == "residual") return Propagation::Residual;
  if (s == "lightgcn") return Propagation::LightGcn;
  throw UsageError("unknown propagation variant: " + s);
}

template <class T>
struct EmbeddingState {
  std::vector<Tensor<T>> layer_user;  // 0..L
  std::vector<Tensor<T>> layer_item;
  Tensor<T> final_user;
  Tensor<T> final_item;

  std::int32_t layers() const {
    return static_cast<std::int32_t>(layer_user.size()) - 1;
  }
  std::int32_t dim() const { return final_user.cols(); }
};

// Linear message passing over the normalized bipartite adjacency. Optional
// per-layer edge gates (one nnz x 1 tensor per layer, user-major edge order)
// scale the adjacency entries in both directions.
template <class T>
EmbeddingState<T> propagate(const InteractionGraph& g,
                            const Tensor<T>& user_table,
                            const Tensor<T>& item_table, std::int32_t L,
                            Propagation mode = Propagation::Residual,
                            const std::vector<Tensor<T>>* edge_gates = nullptr) {
  if (user_table.rows() != g.users || item_table.rows() != g.items)
    throw Error("propagate: table shape does not match graph");
  if (user_table.cols() != item_table.cols())
    throw Error("propagate: user/item dimension mismatch");
  if (L < 0) throw Error("propagate: negative layer count");
  if (edge_gates && static_cast<std::int32_t>(edge_gates->size()) != L)
    throw Error("propagate: need one gate tensor per layer");

  EmbeddingState<T> s;
  s.layer_user.push_back(user_table);
  s.layer_item.push_back(item_table);
  for (std::int32_t l = 1; l <= L; ++l) {
    const Tensor<T>& pu = s.layer_user.back();
    const Tensor<T>& pv = s.layer_item.back();
    Tensor<T> zu, zv;
    if (edge_gates) {
      const Tensor<T>& gate = (*edge_gates)[l - 1];
      zu = spmm_gated(g.norm, gate, pv);
      zv = spmm_gated(g.norm_t, gate, pu, &g.t_edge_id);
    } else {
      zu = spmm(g.norm, pv);
      zv = spmm(g.norm_t, pu);
    }
    if (mode == Propagation::Residual) {
      s.layer_user.push_back(add(zu, pu));
      s.layer_item.push_back(add(zv, pv));
    } else {
      s.layer_user.push_back(zu);
      s.layer_item.push_back(zv);
    }
  }

  Tensor<T> fu = s.layer_user[0];
  Tensor<T> fv = s.layer_item[0];
  for (std::int32_t l = 1; l <= L; ++l) {
    fu = add(fu, s.layer_user[l]);
    fv = add(fv, s.layer_item[l]);
  }
  if (mode == Propagation::LightGcn) {
    fu = mul_scalar(fu, T{1} / static_cast<T>(L + 1));
    fv = mul_scalar(fv, T{1} / static_cast<T>(L + 1));
  }
  s.final_user = fu;
  s.final_item = fv;
  return s;
}

template <class T>
T predict(const EmbeddingState<T>& s, std::int32_t user, std::int32_t item) {
  if (user < 0 || user >= s.final_user.rows())
    throw Error("predict: user out of range");
  if (item < 0 || item >= s.final_item.rows())
    throw Error("predict: item out of range");
  const std::int32_t d = s.dim();
  const T* u = s.final_user.value().data() + static_cast<std::size_t>(user) * d;
  const T* v = s.final_item.value().data() + static_cast<std::size_t>(item) * d;
  T acc{0};
  for (std::int32_t c = 0; c < d; ++c) acc += u[c] * v[c];
  return acc;
}

template <class T>
std::vector<T> score_all_items(const EmbeddingState<T>& s, std::int32_t user) {
  if (user < 0 || user >= s.final_user.rows())
    throw Error("score_all_items: user out of range");
  const std::int32_t d = s.dim();
  const std::int32_t J = s.final_item.rows();
  std::vector<T> out(J);
  const T* u = s.final_user.value().data() + static_cast<std::size_t>(user) * d;
  const T* items = s.final_item.value().data();
  for (std::int32_t j = 0; j < J; ++j) {
    const T* v = items + static_cast<std::size_t>(j) * d;
    T acc{0};
    for (std::int32_t c = 0; c < d; ++c) acc += u[c] * v[c];
    out[j] = acc;
  }
  return out;
}

// CSV export: entity_type,index,v0,...,v{d-1}; users first, then items.
template <class T>
void export_embeddings_csv(const Tensor<T>& users, const Tensor<T>& items,
                           const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write embeddings csv: " + path);
  const std::int32_t d = users.cols();
  out << "entity_type,index";
  for (std::int32_t c = 0; c < d; ++c) out << ",v" << c;
  out << '\n';
  const auto dump = [&](const char* kind, const Tensor<T>& t) {
    for (std::int32_t r = 0; r < t.rows(); ++r) {
      out << kind << ',' << r;
      for (std::int32_t c = 0; c < d; ++c) out << ',' << t.at(r, c);
      out << '\n';
    }
  };
  dump("user", users);
  dump("item", items);
}

}  // namespace adagcl
