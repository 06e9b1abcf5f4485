#pragma once

#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "adagcl/rng.hpp"
#include "adagcl/tensor.hpp"

namespace adagcl {

template <class T>
Tensor<T> xavier_uniform(std::int32_t rows, std::int32_t cols,
                         RngStream& rng) {
  const double a = std::sqrt(6.0 / (rows + cols));
  std::vector<T> v(static_cast<std::size_t>(rows) * cols);
  for (auto& x : v) x = static_cast<T>(rng.next_uniform(-a, a));
  return Tensor<T>::leaf(rows, cols, std::move(v), true);
}

enum class Activation { Identity, Tanh, Relu, Sigmoid };

inline Activation activation_from_string(const std::string& s) {
  if (s == "identity") return Activation::Identity;
  if (s == "tanh") return Activation::Tanh;
  if (s == "relu") return Activation::Relu;
  if (s == "sigmoid") return Activation::Sigmoid;
  throw UsageError("unknown activation: " + s);
}

template <class T>
Tensor<T> apply_activation(const Tensor<T>& x, Activation a) {
  switch (a) {
    case Activation::Identity: return x;
    case Activation::Tanh: return tanh(x);
    case Activation::Relu: return relu(x);
    case Activation::Sigmoid: return sigmoid(x);
  }
  throw UsageError("unknown activation");
}

// Dense feed-forward stack; hidden layers use `act`, the output layer is
// linear (losses apply their own nonlinearity).
template <class T>
struct Mlp {
  std::vector<Tensor<T>> weights;
  std::vector<Tensor<T>> biases;
  Activation act = Activation::Tanh;

  Mlp() = default;
  Mlp(const std::vector<std::int32_t>& widths, Activation act_, RngStream& rng)
      : act(act_) {
    if (widths.size() < 2) throw UsageError("mlp: need at least two widths");
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
      weights.push_back(xavier_uniform<T>(widths[i], widths[i + 1], rng));
      biases.push_back(Tensor<T>::leaf(
          1, widths[i + 1], std::vector<T>(widths[i + 1], T{0}), true));
    }
  }

  Tensor<T> forward(const Tensor<T>& x) const {
    Tensor<T> h = x;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      h = add_rowvec(matmul(h, weights[i]), biases[i]);
      if (i + 1 < weights.size()) h = apply_activation(h, act);
    }
    return h;
  }

  std::vector<Tensor<T>> params() const {
    std::vector<Tensor<T>> p;
    for (const auto& w : weights) p.push_back(w);
    for (const auto& b : biases) p.push_back(b);
    return p;
  }
};

// Adam with bias correction; gradients are zeroed after each step.
template <class T>
class Adam {
 public:
  Adam() = default;
  Adam(std::vector<Tensor<T>> params, double lr, double beta1 = 0.9,
       double beta2 = 0.999, double eps = 1e-8)
      : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2),
        eps_(eps) {
    m_.resize(params_.size());
    v_.resize(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) {
      m_[i].assign(params_[i].size(), 0.0);
      v_[i].assign(params_[i].size(), 0.0);
    }
  }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto* n = params_[i].node();
      n->ensure_grad();
      auto& m = m_[i];
      auto& v = v_[i];
      for (std::size_t k = 0; k < n->val.size(); ++k) {
        const double g = static_cast<double>(n->grad[k]);
        m[k] = beta1_ * m[k] + (1.0 - beta1_) * g;
        v[k] = beta2_ * v[k] + (1.0 - beta2_) * g * g;
        const double mh = m[k] / bc1;
        const double vh = v[k] / bc2;
        n->val[k] -= static_cast<T>(lr_ * mh / (std::sqrt(vh) + eps_));
        n->grad[k] = T{0};
      }
    }
  }

  std::int64_t step_count() const { return t_; }
  const std::vector<Tensor<T>>& params() const { return params_; }

 private:
  std::vector<Tensor<T>> params_;
  std::vector<std::vector<double>> m_, v_;
  double lr_ = 1e-3, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  std::int64_t t_ = 0;
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  bool pass = false;
  std::string worst_param;
};

// Central finite differences against the analytic gradient. `f` must be a
// deterministic scalar function of `params` (freeze any noise hooks first).
template <class T>
GradCheckReport grad_check(const std::function<Tensor<T>()>& f,
                           const std::vector<Tensor<T>>& params, double step,
                           double tol) {
  if (!(step > 0)) throw UsageError("grad_check: step must be positive");
  for (auto& p : params) const_cast<Tensor<T>&>(p).zero_grad();
  Tensor<T> loss = f();
  backward(loss);

  std::vector<std::vector<T>> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) analytic.push_back(p.grad());

  GradCheckReport rep;
  rep.max_rel_err = 0.0;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto& val = const_cast<Tensor<T>&>(params[pi]).value();
    for (std::size_t k = 0; k < val.size(); ++k) {
      const T orig = val[k];
      val[k] = orig + static_cast<T>(step);
      const double fp = static_cast<double>(f().item());
      val[k] = orig - static_cast<T>(step);
      const double fm = static_cast<double>(f().item());
      val[k] = orig;
      const double fd = (fp - fm) / (2.0 * step);
      if (!std::isfinite(fd))
        throw NumericError("grad_check: non-finite finite difference");
      const double a = static_cast<double>(analytic[pi][k]);
      const double rel =
          std::abs(a - fd) / std::max(1.0, std::abs(fd));
      if (rel > rep.max_rel_err) {
        rep.max_rel_err = rel;
        rep.worst_param = "param[" + std::to_string(pi) + "][" +
                          std::to_string(k) + "]";
      }
    }
  }
  rep.pass = rep.max_rel_err < tol;
  return rep;
}

// ---------------------------------------------------------------------------
// Checkpoint container: 8-byte magic, u64 little-endian JSON header length,
// JSON header {entries:[{name,rows,cols,dtype}...], step}, then raw
// little-endian buffers in header order.
// ---------------------------------------------------------------------------

inline constexpr char kCheckpointMagic[8] = {'A', 'D', 'A', 'G',
                                             'C', 'L', '0', '1'};

template <class T>
struct NamedTensors {
  std::vector<std::pair<std::string, Tensor<T>>> entries;
  std::int64_t step = 0;
  std::string meta;  // free-form (training config text)

  const Tensor<T>* find(const std::string& name) const {
    for (const auto& [n, t] : entries)
      if (n == name) return &t;
    return nullptr;
  }
};

template <class T>
void save_checkpoint(const std::string& path, const NamedTensors<T>& ck) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open checkpoint for writing: " + path);
  nlohmann::json header;
  header["step"] = ck.step;
  header["dtype"] = sizeof(T) == 4 ? "f32" : "f64";
  if (!ck.meta.empty()) header["meta"] = ck.meta;
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& [name, t] : ck.entries) {
    entries.push_back({{"name", name}, {"rows", t.rows()}, {"cols", t.cols()}});
  }
  header["entries"] = entries;
  const std::string hs = header.dump();
  out.write(kCheckpointMagic, 8);
  const std::uint64_t len = hs.size();
  out.write(reinterpret_cast<const char*>(&len), 8);
  out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  for (const auto& [name, t] : ck.entries)
    out.write(reinterpret_cast<const char*>(t.value().data()),
              static_cast<std::streamsize>(t.size() * sizeof(T)));
  if (!out) throw DataError("checkpoint write failed: " + path);
}

template <class T>
NamedTensors<T> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0)
    throw DataError("not a checkpoint file: " + path);
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), 8);
  std::string hs(len, '\0');
  in.read(hs.data(), static_cast<std::streamsize>(len));
  if (!in) throw DataError("truncated checkpoint header: " + path);
  nlohmann::json header = nlohmann::json::parse(hs);
  const std::string dtype = header.at("dtype").get<std::string>();
  if ((sizeof(T) == 4 && dtype != "f32") || (sizeof(T) == 8 && dtype != "f64"))
    throw DataError("checkpoint dtype mismatch: " + dtype);
  NamedTensors<T> ck;
  ck.step = header.at("step").get<std::int64_t>();
  if (header.contains("meta")) ck.meta = header.at("meta").get<std::string>();
  for (const auto& e : header.at("entries")) {
    const auto rows = e.at("rows").get<std::int32_t>();
    const auto cols = e.at("cols").get<std::int32_t>();
    std::vector<T> buf(static_cast<std::size_t>(rows) * cols);
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(T)));
    if (!in) throw DataError("truncated checkpoint buffers: " + path);
    ck.entries.emplace_back(e.at("name").get<std::string>(),
                            Tensor<T>::leaf(rows, cols, std::move(buf), true));
  }
  return ck;
}

}  // namespace adagcl
