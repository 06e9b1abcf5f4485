#include <doctest.h>

#include <cmath>

#include "adagcl/denoise.hpp"

using namespace adagcl;

using D = Tensor<double>;

namespace {

InteractionGraph small_graph(RngStream& rng, std::int32_t users = 5,
                             std::int32_t items = 6, int edges = 12) {
  std::vector<std::pair<std::int32_t, std::int32_t>> pairs;
  for (int i = 0; i < edges; ++i)
    pairs.emplace_back(static_cast<std::int32_t>(rng.next_below(users)),
                       static_cast<std::int32_t>(rng.next_below(items)));
  return build_graph(table_from_pairs(users, items, pairs));
}

template <class T>
void zero_mlp(Mlp<T>& m) {
  for (auto& w : m.weights) std::fill(w.value().begin(), w.value().end(), T{0});
  for (auto& b : m.biases) std::fill(b.value().begin(), b.value().end(), T{0});
}

// forces every gate to the given saturation by pinning the output bias
template <class T>
void force_gates(Denoiser<T>& den, double bias) {
  for (auto& m : den.gate_mlps) {
    zero_mlp(m);
    m.biases.back().value()[0] = static_cast<T>(bias);
  }
}

}  // namespace

TEST_CASE("edge_score: zero MLP, shape, gradient") {
  RngStream rng(3, "es");
  auto g = small_graph(rng);
  Mlp<double> mlp({6, 3, 1}, Activation::Tanh, rng);
  D u = xavier_uniform<double>(g.users, 3, rng);
  D v = xavier_uniform<double>(g.items, 3, rng);

  Mlp<double> zm = mlp;
  zero_mlp(zm);
  auto alpha0 = edge_score(u, v, g, zm);
  CHECK(alpha0.rows() == g.edge_count());
  CHECK(alpha0.cols() == 1);
  for (double a : alpha0.value()) CHECK(a == 0.0);

  auto f = [&]() { return sum_all(sigmoid(edge_score(u, v, g, mlp))); };
  auto rep = grad_check<double>(f, {u, v, mlp.weights[0], mlp.biases[0]},
                                1e-6, 1e-4);
  CHECK(rep.pass);
}

TEST_CASE("sample_gate: saturation and the hand-evaluated midpoint") {
  HardConcrete hc;  // beta=2/3, gamma=-0.1, zeta=1.1
  D zero_noise = D::zeros(3, 1);
  D alpha = D::leaf(3, 1, {60.0, -60.0, 0.0});
  auto m = sample_gate(alpha, zero_noise, hc);
  CHECK(m.value()[0] == 1.0);  // clamp hits exactly
  CHECK(m.value()[1] == 0.0);
  CHECK(m.value()[2] == doctest::Approx(0.5).epsilon(1e-12));  // u = 0.5

  HardConcrete bad{0.0, -0.1, 1.1};
  CHECK_THROWS_AS(sample_gate(alpha, zero_noise, bad), UsageError);
}

TEST_CASE("expected_l0 closed form") {
  HardConcrete hc;
  // alpha at beta*log(-gamma/zeta) gives exactly one half
  const double mid = hc.beta * std::log(-hc.gamma / hc.zeta);
  CHECK(expected_l0(D::leaf(1, 1, {mid}), hc).item() ==
        doctest::Approx(0.5).epsilon(1e-12));
  // alpha = 0: sigmoid((2/3) ln 11)
  const double expect = 1.0 / (1.0 + std::exp(-(2.0 / 3.0) * std::log(11.0)));
  CHECK(expected_l0(D::zeros(1, 1), hc).item() ==
        doctest::Approx(expect).epsilon(1e-12));
  CHECK(expect == doctest::Approx(0.8318).epsilon(1e-4));
  // limits
  CHECK(expected_l0(D::leaf(1, 1, {-80.0}), hc).item() ==
        doctest::Approx(0.0).epsilon(1e-12));
  CHECK(expected_l0(D::leaf(1, 1, {80.0}), hc).item() ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("expected_l0 is strictly increasing in alpha (100-point grid)") {
  HardConcrete hc;
  double prev = -1;
  for (int i = 0; i < 100; ++i) {
    const double a = -5.0 + 10.0 * i / 99.0;
    const double p = expected_l0(D::leaf(1, 1, {a}), hc).item();
    CHECK(p > prev);
    prev = p;
  }
}

TEST_CASE("monte carlo: P(gate > 0) matches expected_l0 within 3 SE") {
  HardConcrete hc;
  RngStream rng(7, "mcg");
  const int n = 100000;
  for (double a : {-2.0, 0.0, 2.0}) {
    const double p = expected_l0(D::leaf(1, 1, {a}), hc).item();
    int positive = 0;
    D alpha = D::leaf(1, 1, {a});
    for (int i = 0; i < n; ++i) {
      D noise = uniform_noise_logits<double>(1, rng);
      if (sample_gate(alpha, noise, hc).item() > 0.0) ++positive;
    }
    const double se = std::sqrt(p * (1 - p) / n);
    CHECK(std::abs(double(positive) / n - p) < 3 * se);
  }
}

TEST_CASE("denoise_forward: saturated gates reproduce the two extremes") {
  RngStream rng(11, "df");
  auto g = small_graph(rng);
  const int dim = 3, L = 2;
  Denoiser<double> den(g.users, g.items, dim, L, Propagation::Residual, rng);

  // all gates 1: identical to the plain encoder propagation
  force_gates(den, 1000.0);
  RngStream gr(1, "g");
  auto open = denoise_forward(g, den, GateMode::Train, gr);
  auto plain = propagate(g, den.user_table, den.item_table, L);
  for (std::size_t i = 0; i < open.emb.final_user.size(); ++i)
    CHECK(open.emb.final_user.value()[i] ==
          doctest::Approx(plain.final_user.value()[i]).epsilon(1e-12));
  for (double k : open.kept_fraction) CHECK(k == doctest::Approx(1.0));

  // all gates 0: every node behaves as isolated, final = (L+1) * table
  force_gates(den, -1000.0);
  RngStream gr2(1, "g");
  auto closed = denoise_forward(g, den, GateMode::Train, gr2);
  for (std::int32_t r = 0; r < g.users; ++r)
    for (int c = 0; c < dim; ++c)
      CHECK(closed.emb.final_user.at(r, c) ==
            doctest::Approx((L + 1) * den.user_table.at(r, c)));
  CHECK(closed.l0_sum.item() == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("l0 sum with equal alphas is |E| * L * expected_l0(alpha)") {
  RngStream rng(13, "l0");
  auto g = small_graph(rng);
  const int L = 3;
  Denoiser<double> den(g.users, g.items, 3, L, Propagation::Residual, rng);
  force_gates(den, 0.0);  // alpha identically zero
  RngStream gr(1, "g");
  auto f = denoise_forward(g, den, GateMode::Eval, gr);
  HardConcrete hc;
  const double per_edge = expected_l0(D::zeros(1, 1), hc).item();
  CHECK(f.l0_sum.item() ==
        doctest::Approx(double(g.edge_count()) * L * per_edge).epsilon(1e-9));
}

TEST_CASE("eval mode is deterministic under fixed parameters") {
  RngStream rng(17, "det");
  auto g = small_graph(rng);
  Denoiser<double> den(g.users, g.items, 3, 2, Propagation::Residual, rng);
  RngStream a(1, "x"), b(2, "y");
  auto f1 = denoise_forward(g, den, GateMode::Eval, a);
  auto f2 = denoise_forward(g, den, GateMode::Eval, b);
  CHECK(f1.emb.final_user.value() == f2.emb.final_user.value());
  CHECK(f1.emb.final_item.value() == f2.emb.final_item.value());
}

TEST_CASE("gates stay inside [0,1] across noise draws (property)") {
  RngStream rng(19, "rng");
  auto g = small_graph(rng, 6, 7, 18);
  Denoiser<double> den(g.users, g.items, 3, 2, Propagation::Residual, rng);
  RngStream gr(23, "g");
  for (int iter = 0; iter < 30; ++iter) {
    auto f = denoise_forward(g, den, GateMode::Train, gr);
    for (double k : f.kept_fraction) {
      CHECK(k >= 0.0);
      CHECK(k <= 1.0);
    }
  }
}

TEST_CASE("denoise_loss composition") {
  RngStream rng(29, "dl");
  auto g = small_graph(rng);
  const int L = 2;
  Denoiser<double> den(g.users, g.items, 3, L, Propagation::Residual, rng);

  // empty batch: loss is the weighted l0 target plus regularization
  RngStream gr(1, "g");
  auto fwd = denoise_forward(g, den, GateMode::Eval, gr);
  TripletBatch empty;
  auto parts = denoise_loss(fwd, den, empty, 0.01, 0.0, true);
  CHECK(parts.total.item() == doctest::Approx(0.01 * parts.l0.item()));

  // alpha -> -inf with tied scores: the loss approaches ln 2 exactly
  force_gates(den, -1000.0);
  // tied scores: every item row identical
  for (std::int32_t r = 0; r < g.items; ++r)
    for (int c = 0; c < 3; ++c)
      den.item_table.value()[static_cast<std::size_t>(r) * 3 + c] =
          0.1 * (c + 1);
  RngStream gr2(1, "g");
  auto fwd2 = denoise_forward(g, den, GateMode::Train, gr2);
  TripletBatch batch;
  batch.user = {0, 1, 2};
  batch.pos = {0, 1, 2};
  batch.neg = {3, 4, 5};
  auto tied = denoise_loss(fwd2, den, batch, 0.01, 0.0, true);
  CHECK(tied.total.item() == doctest::Approx(std::log(2.0)).epsilon(1e-9));
}

TEST_CASE("denoise_loss gradients pass grad_check with frozen noise") {
  RngStream rng(31, "gc");
  auto g = small_graph(rng, 4, 5, 10);
  Denoiser<double> den(g.users, g.items, 3, 2, Propagation::Residual, rng);
  TripletBatch batch;
  batch.user = {0, 1};
  batch.pos = {g.norm.indices[g.norm.indptr[0]],
               g.norm.indices[g.norm.indptr[1]]};
  batch.neg = {0, 4};
  auto f = [&]() {
    RngStream gr(99, "frozen");
    auto fwd = denoise_forward(g, den, GateMode::Train, gr);
    return denoise_loss(fwd, den, batch, 0.01, 1e-4, true).total;
  };
  auto rep = grad_check<double>(f, den.params(), 1e-6, 1e-4);
  CAPTURE(rep.max_rel_err);
  CHECK(rep.pass);
}
