#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <unordered_set>
#include <utility>
#include <vector>

#include "adagcl/common.hpp"
#include "adagcl/sparse.hpp"

namespace adagcl {

// Reverse-mode tape over 2-D dense buffers. Nodes are created in forward
// order; backward() walks the DAG in reverse topological order exactly once.
// A tape is confined to one thread; independent tapes may run in parallel.

inline bool& grad_enabled() {
  thread_local bool enabled = true;
  return enabled;
}

// RAII guard: disables gradient recording in scope (view sampling etc).
struct NoGradGuard {
  bool prev;
  NoGradGuard() : prev(grad_enabled()) { grad_enabled() = false; }
  ~NoGradGuard() { grad_enabled() = prev; }
};

template <class T>
struct TensorNode {
  std::int32_t rows = 0;
  std::int32_t cols = 0;
  std::vector<T> val;
  std::vector<T> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void()> backprop;

  std::size_t size() const { return val.size(); }
  void ensure_grad() {
    if (grad.size() != val.size()) grad.assign(val.size(), T{0});
  }
};

template <class T>
class Tensor {
 public:
  using Node = TensorNode<T>;

  Tensor() = default;

  static Tensor leaf(std::int32_t rows, std::int32_t cols, std::vector<T> v,
                     bool requires_grad = false) {
    if (static_cast<std::size_t>(rows) * cols != v.size())
      throw Error("tensor: buffer size does not match shape");
    Tensor t;
    t.n_ = std::make_shared<Node>();
    t.n_->rows = rows;
    t.n_->cols = cols;
    t.n_->val = std::move(v);
    t.n_->requires_grad = requires_grad;
    return t;
  }

  static Tensor zeros(std::int32_t rows, std::int32_t cols,
                      bool requires_grad = false) {
    return leaf(rows, cols,
                std::vector<T>(static_cast<std::size_t>(rows) * cols, T{0}),
                requires_grad);
  }

  static Tensor full(std::int32_t rows, std::int32_t cols, T fill) {
    return leaf(rows, cols,
                std::vector<T>(static_cast<std::size_t>(rows) * cols, fill));
  }

  static Tensor scalar(T v) { return leaf(1, 1, {v}); }

  bool defined() const { return n_ != nullptr; }
  std::int32_t rows() const { return n_->rows; }
  std::int32_t cols() const { return n_->cols; }
  std::size_t size() const { return n_->val.size(); }
  bool requires_grad() const { return n_->requires_grad; }

  std::vector<T>& value() { return n_->val; }
  const std::vector<T>& value() const { return n_->val; }
  const std::vector<T>& grad() const {
    n_->ensure_grad();
    return n_->grad;
  }

  T item() const {
    if (size() != 1) throw Error("item: tensor is not scalar");
    return n_->val[0];
  }

  T at(std::int32_t r, std::int32_t c) const {
    return n_->val[static_cast<std::size_t>(r) * cols() + c];
  }

  void zero_grad() {
    n_->grad.assign(n_->val.size(), T{0});
  }

  Node* node() const { return n_.get(); }
  const std::shared_ptr<Node>& handle() const { return n_; }

  static Tensor wrap(std::shared_ptr<Node> n) {
    Tensor t;
    t.n_ = std::move(n);
    return t;
  }

 private:
  std::shared_ptr<Node> n_;
};

namespace detail {

template <class T>
using EMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using EMap = Eigen::Map<EMat<T>>;
template <class T>
using ECMap = Eigen::Map<const EMat<T>>;

template <class T>
ECMap<T> cmap(const TensorNode<T>* n) {
  return ECMap<T>(n->val.data(), n->rows, n->cols);
}
template <class T>
EMap<T> gmap(TensorNode<T>* n) {
  return EMap<T>(n->grad.data(), n->rows, n->cols);
}

template <class T>
std::shared_ptr<TensorNode<T>> make_node(
    std::int32_t rows, std::int32_t cols,
    std::initializer_list<std::shared_ptr<TensorNode<T>>> parents) {
  auto n = std::make_shared<TensorNode<T>>();
  n->rows = rows;
  n->cols = cols;
  n->val.resize(static_cast<std::size_t>(rows) * cols);
  if (grad_enabled()) {
    for (const auto& p : parents)
      if (p->requires_grad) {
        n->requires_grad = true;
        break;
      }
    if (n->requires_grad)
      n->parents.assign(parents.begin(), parents.end());
  }
  return n;
}

template <class T>
void check_same_shape(const Tensor<T>& a, const Tensor<T>& b,
                      const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw Error(std::string(op) + ": shape mismatch");
}

template <class T>
inline T sigmoid_scalar(T x) {
  if (x >= T{0}) {
    T e = std::exp(-x);
    return T{1} / (T{1} + e);
  }
  T e = std::exp(x);
  return e / (T{1} + e);
}

template <class T>
inline T softplus_scalar(T x) {
  if (x > T{30}) return x;
  if (x < T{-30}) return std::exp(x);
  return std::log1p(std::exp(x));
}

}  // namespace detail

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape(a, b, "add");
  auto out = detail::make_node<T>(a.rows(), a.cols(), {a.handle(), b.handle()});
  for (std::size_t i = 0; i < out->val.size(); ++i)
    out->val[i] = a.value()[i] + b.value()[i];
  if (out->requires_grad) {
    auto* o = out.get();
    auto pa = a.handle();
    auto pb = b.handle();
    out->backprop = [o, pa, pb]() {
      if (pa->requires_grad) {
        pa->ensure_grad();
        for (std::size_t i = 0; i < o->grad.size(); ++i)
          pa->grad[i] += o->grad[i];
      }
      if (pb->requires_grad) {
        pb->ensure_grad();
        for (std::size_t i = 0; i < o->grad.size(); ++i)
          pb->grad[i] += o->grad[i];
      }
    };
  }
  return Tensor<T>::wrap(out);
}

template <class T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape(a, b, "sub");
  auto out = detail::make_node<T>(a.rows(), a.cols(), {a.handle(), b.handle()});
  for (std::size_t i = 0; i < out->val.size(); ++i)
    out->val[i] = a.value()[i] - b.value()[i];
  if (out->requires_grad) {
    auto* o = out.get();
    auto pa = a.handle();
    auto pb = b.handle();
    out->backprop = [o, pa, pb]() {
      if (pa->requires_grad) {
        pa->ensure_grad();
        for (std::size_t i = 0; i < o->grad.size(); ++i)
          pa->grad[i] += o->grad[i];
      }
      if (pb->requires_grad) {
        pb->ensure_grad();
        for (std::size_t i = 0; i < o->grad.size(); ++i)
          pb->grad[i] -= o->grad[i];
      }
    };
  }
  return Tensor<T>::wrap(out);
}

template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape(a, b, "mul");
  auto out = detail::make_node<T>(a.rows(), a.cols(), {a.handle(), b.handle()});
  for (std::size_t i = 0; i < out->val.size(); ++i)
    out->val[i] = a.value()[i] * b.value()[i];
  if (out->requires_grad) {
    auto* o = out.get();
    auto pa = a.handle();
    auto pb = b.handle();
    out->backprop = [o, pa, pb]() {
      if (pa->requires_grad) {
        pa->ensure_grad();
        for (std::size_t i = 0; i < o->grad.size(); ++i)
          pa->grad[i] += o->grad[i] * pb->val[i];
      }
      if (pb->requires_grad) {
        pb->ensure_grad();
        for (std::size_t i = 0; i < o->grad.size(); ++i)
          pb->grad[i] += o->grad[i] * pa->val[i];
      }
    };
  }
  return Tensor<T>::wrap(out);
}

template <class T>
Tensor<T> add_scalar(const Tensor<T>& a, T c) {
  auto out = detail::make_node<T>(a.rows(), a.cols(), {a.handle()});
  for (std::size_t i = 0; i < out->val.size(); ++i)
    out->val[i] = a.value()[i] + c;
  if (out->requires_grad) {
    auto* o = out.get();
    auto pa = a.handle();
    out->backprop = [o, pa]() {
      pa->ensure_grad();
      for (std::size_t i = 0; i < o->grad.size(); ++i)
        pa->grad[i] += o->grad[i];
    };
  }
  return Tensor<T>::wrap(out);
}

template <class T>
Tensor<T> mul_scalar(const Tensor<T>& a, T c) {
  auto out = detail::make_node<T>(a.rows(), a.cols(), {a.handle()});
  for (std::size_t i = 0; i < out->val.size(); ++i)
    out->val[i] = a.value()[i] * c;
  if (out->requires_grad) {
    auto* o = out.get();
    auto pa = a.handle();
    out->backprop = [o, pa, c]() {
      pa->ensure_grad();
      for (std::size_t i = 0; i < o->grad.size(); ++i)
        pa->grad[i] += o->grad[i] * c;
    };
  }
  return Tensor<T>::wrap(out);
}

// C = A * B
template <class T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.cols() != b.rows()) throw Error("matmul: inner dimension mismatch");
  auto out = detail::make_node<T>(a.rows(), b.cols(), {a.handle(), b.handle()});
  detail::EMap<T>(out->val.data(), out->rows, out->cols).noalias() =
      detail::cmap(a.node()) * detail::cmap(b.node());
  if (out->requires_grad) {
    auto* o = out.get();
    auto pa = a.handle();
    auto pb = b.handle();
    out->backprop = [o, pa, pb]() {
      detail::ECMap<T> g(o->grad.data(), o->rows, o->cols);
      if (pa->requires_grad) {
        pa->ensure_grad();
        detail::gmap(pa.get()).noalias() += g * detail::cmap(pb.get()).transpose();
      }
      if (pb->requires_grad) {
        pb->ensure_grad();
        detail::gmap(pb.get()).noalias() += detail::cmap(pa.get()).transpose() * g;
      }
    };
  }
  return Tensor<T>::wrap(out);
}

// C = A * B^T
template <class T>
Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.cols() != b.cols()) throw Error("matmul_nt: inner dimension mismatch");
  auto out = detail::make_node<T>(a.rows(), b.rows(), {a.handle(), b.handle()});
  detail::EMap<T>(out->val.data(), out->rows, out->cols).noalias() =
      detail::cmap(a.node()) * detail::cmap(b.node()).transpose();
  if (out->requires_grad) {
    auto* o = out.get();
    auto pa = a.handle();
    auto pb = b.handle();
    out->backprop = [o, pa, pb]() {
      detail::ECMap<T> g(o->grad.data(), o->rows, o->cols);
      if (pa->requires_grad) {
        pa->ensure_grad();
        detail::gmap(pa.get()).noalias() += g * detail::cmap(pb.get());
      }
      if (pb->requires_grad) {
        pb->ensure_grad();
        detail::gmap(pb.get()).noalias() += g.transpose() * detail::cmap(pa.get());
      }
    };
  }
  return Tensor<T>::wrap(out);
}

// y = S * x. The sparse matrix must outlive the tape (it is captured by
// reference); graphs live for the whole training run.
template <class TS, class T>
Tensor<T> spmm(const SparseMatrix<TS>& s, const Tensor<T>& x) {
  if (s.cols != x.rows()) throw Error("spmm: inner dimension mismatch");
  auto out = detail::make_node<T>(s.rows, x.cols(), {x.handle()});
  const std::int32_t d = x.cols();
  const T* xv = x.value().data();
  T* yv = out->val.data();
  std::fill(out->val.begin(), out->val.end(), T{0});
  for (std::int32_t r = 0; r < s.rows; ++r) {
    T* yr = yv + static_cast<std::size_t>(r) * d;
    for (std::int32_t k = s.indptr[r]; k < s.indptr[r + 1]; ++k) {
      const T w = static_cast<T>(s.values[k]);
      const T* xr = xv + static_cast<std::size_t>(s.indices[k]) * d;
      for (std::int32_t c = 0; c < d; ++c) yr[c] += w * xr[c];
    }
  }
  if (out->requires_grad) {
    auto* o = out.get();
    auto px = x.handle();
    const SparseMatrix<TS>* sp = &s;
    out->backprop = [o, px, sp, d]() {
      px->ensure_grad();
      T* xg = px->grad.data();
      const T* g = o->grad.data();
      for (std::int32_t r = 0; r < sp->rows; ++r) {
        const T* gr = g + static_cast<std::size_t>(r) * d;
        for (std::int32_t k = sp->indptr[r]; k < sp->indptr[r + 1]; ++k) {
          const T w = static_cast<T>(sp->values[k]);
          T* xr = xg + static_cast<std::size_t>(sp->indices[k]) * d;
          for (std::int32_t c = 0; c < d; ++c) xr[c] += w * gr[c];
        }
      }
    };
  }
  return Tensor<T>::wrap(out);
}

// y = (S with entry k scaled by gate[edge_id(k)]) * x, gate is an nnz x 1
// tensor indexed by edge id; edge_id(k) = perm ? (*perm)[k] : k. Gradients
// flow to both x and gate.
template <class TS, class T>
Tensor<T> spmm_gated(const SparseMatrix<TS>& s, const Tensor<T>& gate,
                     const Tensor<T>& x,
                     const std::vector<std::int32_t>* perm = nullptr) {
  if (s.cols != x.rows()) throw Error("spmm_gated: inner dimension mismatch");
  if (gate.cols() != 1 || gate.rows() != s.nnz())
    throw Error("spmm_gated: gate must be nnz x 1");
  auto out =
      detail::make_node<T>(s.rows, x.cols(), {gate.handle(), x.handle()});
  const std::int32_t d = x.cols();
  const T* xv = x.value().data();
  const T* gv = gate.value().data();
  T* yv = out->val.data();
  std::fill(out->val.begin(), out->val.end(), T{0});
  for (std::int32_t r = 0; r < s.rows; ++r) {
    T* yr = yv + static_cast<std::size_t>(r) * d;
    for (std::int32_t k = s.indptr[r]; k < s.indptr[r + 1]; ++k) {
      const std::int32_t e = perm ? (*perm)[k] : k;
      const T w = static_cast<T>(s.values[k]) * gv[e];
      const T* xr = xv + static_cast<std::size_t>(s.indices[k]) * d;
      for (std::int32_t c = 0; c < d; ++c) yr[c] += w * xr[c];
    }
  }
  if (out->requires_grad) {
    auto* o = out.get();
    auto pg = gate.handle();
    auto px = x.handle();
    const SparseMatrix<TS>* sp = &s;
    out->backprop = [o, pg, px, sp, perm, d]() {
      const T* g = o->grad.data();
      const bool need_x = px->requires_grad;
      const bool need_gate = pg->requires_grad;
      if (need_x) px->ensure_grad();
      if (need_gate) pg->ensure_grad();
      for (std::int32_t r = 0; r < sp->rows; ++r) {
        const T* gr = g + static_cast<std::size_t>(r) * d;
        for (std::int32_t k = sp->indptr[r]; k < sp->indptr[r + 1]; ++k) {
          const std::int32_t e = perm ? (*perm)[k] : k;
          const T w = static_cast<T>(sp->values[k]);
          const T* xr = px->val.data() + static_cast<std::size_t>(sp->indices[k]) * d;
          if (need_gate) {
            T dot{0};
            for (std::int32_t c = 0; c < d; ++c) dot += gr[c] * xr[c];
            pg->grad[e] += w * dot;
          }
          if (need_x) {
            T* xgr = px->grad.data() + static_cast<std::size_t>(sp->indices[k]) * d;
            const T wg = w * pg->val[e];
            for (std::int32_t c = 0; c < d; ++c) xgr[c] += wg * gr[c];
          }
        }
      }
    };
  }
  return Tensor<T>::wrap(out);
}

template <class T>
Tensor<T> gather_rows(const Tensor<T>& x, std::vector<std::int32_t> idx) {
  for (std::int32_t i : idx)
    if (i < 0 || i >= x.rows()) throw Error("gather_rows: index out of range");
  auto out = detail::make_node<T>(static_cast<std::int32_t>(idx.size()),
                                  x.cols(), {x.handle()});
  const std::int32_t d = x.cols();
  for (std::size_t r = 0; r < idx.size(); ++r)
    std::copy_n(x.value().data() + static_cast<std::size_t>(idx[r]) * d, d,
                out->val.data() + r * d);
  if (out->requires_grad) {
    auto* o = out.get();
    auto px = x.handle();
    auto shared_idx = std::make_shared<std::vector<std::int32_t>>(std::move(idx));
    out->backprop = [o, px, shared_idx, d]() {
      px->ensure_grad();
      for (std::size_t r = 0; r < shared_idx->size(); ++r) {
        T* dst = px->grad.data() +
                 static_cast<std::size_t>((*shared_idx)[r]) * d;
        const T* src = o->grad.data() + r * d;
        for (std::int32_t c = 0; c < d; ++c) dst[c] += src[c];
      }
    };
  }
  return Tensor<T>::wrap(out);
}

template <class T>
Tensor<T> concat_cols(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rows() != b.rows()) throw Error("concat_cols: row count mismatch");
  const std::int32_t ca = a.cols(), cb = b.cols();
  auto out =
      detail::make_node<T>(a.rows(), ca + cb, {a.handle(), b.handle()});
  for (std::int32_t r = 0; r < a.rows(); ++r) {
    std::copy_n(a.value().data() + static_cast<std::size_t>(r) * ca, ca,
                out->val.data() + static_cast<std::size_t>(r) * (ca + cb));
    std::copy_n(b.value().data() + static_cast<std::size_t>(r) * cb, cb,
                out->val.data() + static_cast<std::size_t>(r) * (ca + cb) + ca);
  }
  if (out->requires_grad) {
    auto* o = out.get();
    auto pa = a.handle();
    auto pb = b.handle();
    out->backprop = [o, pa, pb, ca, cb]() {
      for (std::int32_t r = 0; r < o->rows; ++r) {
        const T* g = o->grad.data() + static_cast<std::size_t>(r) * (ca + cb);
        if (pa->requires_grad) {
          pa->ensure_grad();
          T* ga = pa->grad.data() + static_cast<std::size_t>(r) * ca;
          for (std::int32_t c = 0; c < ca; ++c) ga[c] += g[c];
        }
        if (pb->requires_grad) {
          pb->ensure_grad();
          T* gb = pb->grad.data() + static_cast<std::size_t>(r) * cb;
          for (std::int32_t c = 0; c < cb; ++c) gb[c] += g[ca + c];
        }
      }
    };
  }
  return Tensor<T>::wrap(out);
}

template <class T>
Tensor<T> concat_rows(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.cols() != b.cols()) throw Error("concat_rows: column count mismatch");
  const std::int32_t d = a.cols();
  auto out =
      detail::make_node<T>(a.rows() + b.rows(), d, {a.handle(), b.handle()});
  std::copy(a.value().begin(), a.value().end(), out->val.begin());
  std::copy(b.value().begin(), b.value().end(),
            out->val.begin() + a.value().size());
  if (out->requires_grad) {
    auto* o = out.get();
    auto pa = a.handle();
    auto pb = b.handle();
    out->backprop = [o, pa, pb]() {
      const std::size_t na = pa->val.size();
      if (pa->requires_grad) {
        pa->ensure_grad();
        for (std::size_t i = 0; i < na; ++i) pa->grad[i] += o->grad[i];
      }
      if (pb->requires_grad) {
        pb->ensure_grad();
        for (std::size_t i = 0; i < pb->val.size(); ++i)
          pb->grad[i] += o->grad[na + i];
      }
    };
  }
  return Tensor<T>::wrap(out);
}

template <class T>
Tensor<T> row_sum(const Tensor<T>& x) {
  auto out = detail::make_node<T>(x.rows(), 1, {x.handle()});
  const std::int32_t d = x.cols();
  for (std::int32_t r = 0; r < x.rows(); ++r) {
    T s{0};
    const T* xr = x.value().data() + static_cast<std::size_t>(r) * d;
    for (std::int32_t c = 0; c < d; ++c) s += xr[c];
    out->val[r] = s;
  }
  if (out->requires_grad) {
    auto* o = out.get();
    auto px = x.handle();
    out->backprop = [o, px, d]() {
      px->ensure_grad();
      for (std::int32_t r = 0; r < o->rows; ++r) {
        T* gr = px->grad.data() + static_cast<std::size_t>(r) * d;
        const T g = o->grad[r];
        for (std::int32_t c = 0; c < d; ++c) gr[c] += g;
      }
    };
  }
  return Tensor<T>::wrap(out);
}

template <class T>
Tensor<T> sum_all(const Tensor<T>& x) {
  auto out = detail::make_node<T>(1, 1, {x.handle()});
  T s{0};
  for (T v : x.value()) s += v;
  out->val[0] = s;
  if (out->requires_grad) {
    auto* o = out.get();
    auto px = x.handle();
    out->backprop = [o, px]() {
      px->ensure_grad();
      const T g = o->grad[0];
      for (std::size_t i = 0; i < px->grad.size(); ++i) px->grad[i] += g;
    };
  }
  return Tensor<T>::wrap(out);
}

template <class T>
Tensor<T> mean_all(const Tensor<T>& x) {
  if (x.size() == 0) throw Error("mean_all: empty tensor");
  return mul_scalar(sum_all(x), T{1} / static_cast<T>(x.size()));
}

template <class T>
Tensor<T> exp(const Tensor<T>& x) {
  auto out = detail::make_node<T>(x.rows(), x.cols(), {x.handle()});
  for (std::size_t i = 0; i < out->val.size(); ++i)
    out->val[i] = std::exp(x.value()[i]);
  if (out->requires_grad) {
    auto* o = out.get();
    auto px = x.handle();
    out->backprop = [o, px]() {
      px->ensure_grad();
      for (std::size_t i = 0; i < o->grad.size(); ++i)
        px->grad[i] += o->grad[i] * o->val[i];
    };
  }
  return Tensor<T>::wrap(out);
}

template <class T>
Tensor<T> log(const Tensor<T>& x) {
  auto out = detail::make_node<T>(x.rows(), x.cols(), {x.handle()});
  for (std::size_t i = 0; i < out->val.size(); ++i) {
    if (!(x.value()[i] > T{0}))
      throw NumericError("log: non-positive input");
    out->val[i] = std::log(x.value()[i]);
  }
  if (out->requires_grad) {
    auto* o = out.get();
    auto px = x.handle();
    out->backprop = [o, px]() {
      px->ensure_grad();
      for (std::size_t i = 0; i < o->grad.size(); ++i)
        px->grad[i] += o->grad[i] / px->val[i];
    };
  }
  return Tensor<T>::wrap(out);
}

template <class T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  auto out = detail::make_node<T>(x.rows(), x.cols(), {x.handle()});
  for (std::size_t i = 0; i < out->val.size(); ++i)
    out->val[i] = detail::sigmoid_scalar(x.value()[i]);
  if (out->requires_grad) {
    auto* o = out.get();
    auto px = x.handle();
    out->backprop = [o, px]() {
      px->ensure_grad();
      for (std::size_t i = 0; i < o->grad.size(); ++i)
        px->grad[i] += o->grad[i] * o->val[i] * (T{1} - o->val[i]);
    };
  }
  return Tensor<T>::wrap(out);
}

template <class T>
Tensor<T> tanh(const Tensor<T>& x) {
  auto out = detail::make_node<T>(x.rows(), x.cols(), {x.handle()});
  for (std::size_t i = 0; i < out->val.size(); ++i)
    out->val[i] = std::tanh(x.value()[i]);
  if (out->requires_grad) {
    auto* o = out.get();
    auto px = x.handle();
    out->backprop = [o, px]() {
      px->ensure_grad();
      for (std::size_t i = 0; i < o->grad.size(); ++i)
        px->grad[i] += o->grad[i] * (T{1} - o->val[i] * o->val[i]);
    };
  }
  return Tensor<T>::wrap(out);
}

template <class T>
Tensor<T> softplus(const Tensor<T>& x) {
  auto out = detail::make_node<T>(x.rows(), x.cols(), {x.handle()});
  for (std::size_t i = 0; i < out->val.size(); ++i)
    out->val[i] = detail::softplus_scalar(x.value()[i]);
  if (out->requires_grad) {
    auto* o = out.get();
    auto px = x.handle();
    out->backprop = [o, px]() {
      px->ensure_grad();
      for (std::size_t i = 0; i < o->grad.size(); ++i)
        px->grad[i] += o->grad[i] * detail::sigmoid_scalar(px->val[i]);
    };
  }
  return Tensor<T>::wrap(out);
}

// Gradient passes only strictly inside (lo, hi).
template <class T>
Tensor<T> clamp(const Tensor<T>& x, T lo, T hi) {
  if (!(lo < hi)) throw Error("clamp: lo must be < hi");
  auto out = detail::make_node<T>(x.rows(), x.cols(), {x.handle()});
  for (std::size_t i = 0; i < out->val.size(); ++i)
    out->val[i] = std::min(hi, std::max(lo, x.value()[i]));
  if (out->requires_grad) {
    auto* o = out.get();
    auto px = x.handle();
    out->backprop = [o, px, lo, hi]() {
      px->ensure_grad();
      for (std::size_t i = 0; i < o->grad.size(); ++i)
        if (px->val[i] > lo && px->val[i] < hi)
          px->grad[i] += o->grad[i];
    };
  }
  return Tensor<T>::wrap(out);
}

template <class T>
Tensor<T> relu(const Tensor<T>& x) {
  return clamp(x, T{0}, std::numeric_limits<T>::max());
}

template <class T>
Tensor<T> l2_normalize_rows(const Tensor<T>& x) {
  auto out = detail::make_node<T>(x.rows(), x.cols(), {x.handle()});
  const std::int32_t d = x.cols();
  std::vector<T> norms(x.rows());
  for (std::int32_t r = 0; r < x.rows(); ++r) {
    const T* xr = x.value().data() + static_cast<std::size_t>(r) * d;
    T s{0};
    for (std::int32_t c = 0; c < d; ++c) s += xr[c] * xr[c];
    const T n = std::sqrt(s);
    if (!(n > T{0}))
      throw NumericError("l2_normalize_rows: zero-norm row " +
                         std::to_string(r));
    norms[r] = n;
    T* yr = out->val.data() + static_cast<std::size_t>(r) * d;
    for (std::int32_t c = 0; c < d; ++c) yr[c] = xr[c] / n;
  }
  if (out->requires_grad) {
    auto* o = out.get();
    auto px = x.handle();
    auto ns = std::make_shared<std::vector<T>>(std::move(norms));
    out->backprop = [o, px, ns]() {
      px->ensure_grad();
      const std::int32_t d = o->cols;
      for (std::int32_t r = 0; r < o->rows; ++r) {
        const T* g = o->grad.data() + static_cast<std::size_t>(r) * d;
        const T* y = o->val.data() + static_cast<std::size_t>(r) * d;
        T* xg = px->grad.data() + static_cast<std::size_t>(r) * d;
        T dot{0};
        for (std::int32_t c = 0; c < d; ++c) dot += g[c] * y[c];
        const T inv = T{1} / (*ns)[r];
        for (std::int32_t c = 0; c < d; ++c)
          xg[c] += (g[c] - dot * y[c]) * inv;
      }
    };
  }
  return Tensor<T>::wrap(out);
}

// Squared Frobenius norm -> scalar.
template <class T>
Tensor<T> frob_sq(const Tensor<T>& x) {
  auto out = detail::make_node<T>(1, 1, {x.handle()});
  T s{0};
  for (T v : x.value()) s += v * v;
  out->val[0] = s;
  if (out->requires_grad) {
    auto* o = out.get();
    auto px = x.handle();
    out->backprop = [o, px]() {
      px->ensure_grad();
      const T g = T{2} * o->grad[0];
      for (std::size_t i = 0; i < px->grad.size(); ++i)
        px->grad[i] += g * px->val[i];
    };
  }
  return Tensor<T>::wrap(out);
}

// x (r x c) + b (1 x c) broadcast over rows.
template <class T>
Tensor<T> add_rowvec(const Tensor<T>& x, const Tensor<T>& b) {
  if (b.rows() != 1 || b.cols() != x.cols())
    throw Error("add_rowvec: bias must be 1 x cols");
  auto out = detail::make_node<T>(x.rows(), x.cols(), {x.handle(), b.handle()});
  const std::int32_t d = x.cols();
  for (std::int32_t r = 0; r < x.rows(); ++r)
    for (std::int32_t c = 0; c < d; ++c)
      out->val[static_cast<std::size_t>(r) * d + c] =
          x.value()[static_cast<std::size_t>(r) * d + c] + b.value()[c];
  if (out->requires_grad) {
    auto* o = out.get();
    auto px = x.handle();
    auto pb = b.handle();
    out->backprop = [o, px, pb, d]() {
      if (px->requires_grad) {
        px->ensure_grad();
        for (std::size_t i = 0; i < o->grad.size(); ++i)
          px->grad[i] += o->grad[i];
      }
      if (pb->requires_grad) {
        pb->ensure_grad();
        for (std::int32_t r = 0; r < o->rows; ++r)
          for (std::int32_t c = 0; c < d; ++c)
            pb->grad[c] += o->grad[static_cast<std::size_t>(r) * d + c];
      }
    };
  }
  return Tensor<T>::wrap(out);
}

// Main diagonal of a square matrix -> r x 1.
template <class T>
Tensor<T> diag(const Tensor<T>& x) {
  if (x.rows() != x.cols()) throw Error("diag: matrix must be square");
  auto out = detail::make_node<T>(x.rows(), 1, {x.handle()});
  for (std::int32_t r = 0; r < x.rows(); ++r)
    out->val[r] = x.value()[static_cast<std::size_t>(r) * x.cols() + r];
  if (out->requires_grad) {
    auto* o = out.get();
    auto px = x.handle();
    out->backprop = [o, px]() {
      px->ensure_grad();
      for (std::int32_t r = 0; r < o->rows; ++r)
        px->grad[static_cast<std::size_t>(r) * px->cols + r] += o->grad[r];
    };
  }
  return Tensor<T>::wrap(out);
}

// Detached copy: value shared by copy, no gradient connection.
template <class T>
Tensor<T> stop_grad(const Tensor<T>& x) {
  return Tensor<T>::leaf(x.rows(), x.cols(), x.value(), false);
}

template <class T>
void backward(const Tensor<T>& root) {
  auto* r = root.node();
  if (!r) throw Error("backward: undefined tensor");
  if (root.size() != 1) throw Error("backward: root must be scalar");
  if (!r->requires_grad) return;

  // reverse topological order via iterative post-order DFS
  std::vector<TensorNode<T>*> order;
  std::unordered_set<TensorNode<T>*> seen;
  struct Frame {
    TensorNode<T>* n;
    std::size_t next;
  };
  std::vector<Frame> stack;
  stack.push_back({r, 0});
  seen.insert(r);
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next < f.n->parents.size()) {
      TensorNode<T>* p = f.n->parents[f.next++].get();
      if (p->requires_grad && seen.insert(p).second)
        stack.push_back({p, 0});
    } else {
      order.push_back(f.n);
      stack.pop_back();
    }
  }

  r->ensure_grad();
  r->grad[0] = T{1};
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if ((*it)->backprop) (*it)->backprop();
}

}  // namespace adagcl
