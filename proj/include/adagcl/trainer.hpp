#pragma once

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "adagcl/denoise.hpp"
#include "adagcl/encoder.hpp"
#include "adagcl/evalx.hpp"
#include "adagcl/graph.hpp"
#include "adagcl/objectives.hpp"
#include "adagcl/vgae.hpp"

namespace adagcl {

enum class Variant { Full, EdgeDrop, GenGen, NoTask };

inline Variant variant_from_string(const std::string& s) {
  if (s == "full") return Variant::Full;
  if (s == "edge_drop") return Variant::EdgeDrop;
  if (s == "gen_gen") return Variant::GenGen;
  if (s == "no_task") return Variant::NoTask;
  throw UsageError("unknown variant: " + s);
}

inline std::string to_string(Variant v) {
  switch (v) {
    case Variant::Full: return "full";
    case Variant::EdgeDrop: return "edge_drop";
    case Variant::GenGen: return "gen_gen";
    case Variant::NoTask: return "no_task";
  }
  return "full";
}

struct TrainConfig {
  std::int32_t L = 2;
  std::int32_t d = 32;
  double tau = 0.2;
  double lambda1 = 0.1;
  double lambda2 = 1e-5;
  double learning_rate = 1e-3;
  std::int32_t batch_size = 2048;
  std::int32_t max_epochs = 100;
  std::int32_t patience = 10;
  std::uint64_t seed = 42;
  Variant variant = Variant::Full;
  double edge_drop_ratio = 0.25;
  double lc_weight = 1e-2;
  std::int32_t neg_ratio = 1;
  std::int32_t eval_every = 1;
  // extras beyond the core fields
  std::string propagation = "residual";
  double hc_beta = 2.0 / 3.0;
  double hc_gamma = -0.1;
  double hc_zeta = 1.1;
  bool ssl_full_batch = false;   // InfoNCE over all nodes instead of batch
  bool gen_reuse_batch = true;   // generators reuse the upper-level batch
  bool vgae_add_edges = false;   // generated view may add sampled non-edges
  std::int32_t threads = 1;      // evaluation parallelism

  bool generators_enabled() const {
    return variant != Variant::EdgeDrop && lambda1 > 0;
  }
  Propagation propagation_mode() const {
    return propagation_from_string(propagation);
  }
  HardConcrete hard_concrete() const {
    HardConcrete hc{hc_beta, hc_gamma, hc_zeta};
    hc.validate();
    return hc;
  }
  void validate() const;
};

TrainConfig parse_train_config(const std::string& text);
TrainConfig load_train_config(const std::string& path);
void apply_override(TrainConfig& cfg, const std::string& key,
                    const std::string& value);
std::string to_text(const TrainConfig& cfg);

// Cooperative stop (wired to SIGINT by the CLI); checked once per batch.
std::atomic<bool>& stop_requested();

// ---------------------------------------------------------------------------

class TripletSampler {
 public:
  TripletSampler(const InteractionTable& train, std::uint64_t seed,
                 std::string_view stream_name);
  TripletBatch sample(std::int32_t batch_size);

 private:
  const InteractionTable& train_;
  std::vector<std::vector<std::int32_t>> user_items_;  // sorted per user
  RngStream rng_;
  std::int64_t skipped_full_users_ = 0;
};

template <class T>
struct TrainState {
  Tensor<T> main_user;
  Tensor<T> main_item;
  std::optional<Vgae<T>> vgae;
  std::optional<Vgae<T>> vgae2;      // gen_gen variant
  std::optional<Denoiser<T>> denoiser;
  Adam<T> opt_main, opt_vgae, opt_den;
  std::int64_t step = 0;

  std::vector<Tensor<T>> main_params() const { return {main_user, main_item}; }

  NamedTensors<T> named() const {
    NamedTensors<T> ck;
    ck.step = step;
    ck.entries.emplace_back("main.user_table", main_user);
    ck.entries.emplace_back("main.item_table", main_item);
    auto add_mlp = [&](const std::string& prefix, const Mlp<T>& m) {
      for (std::size_t i = 0; i < m.weights.size(); ++i) {
        ck.entries.emplace_back(prefix + ".w" + std::to_string(i),
                                m.weights[i]);
        ck.entries.emplace_back(prefix + ".b" + std::to_string(i),
                                m.biases[i]);
      }
    };
    auto add_vgae = [&](const std::string& prefix, const Vgae<T>& v) {
      ck.entries.emplace_back(prefix + ".user_table", v.user_table);
      ck.entries.emplace_back(prefix + ".item_table", v.item_table);
      add_mlp(prefix + ".mu_head", v.mu_head);
      add_mlp(prefix + ".logstd_head", v.logstd_head);
      add_mlp(prefix + ".decoder", v.decoder);
    };
    if (vgae) add_vgae("vgae", *vgae);
    if (vgae2) add_vgae("vgae2", *vgae2);
    if (denoiser) {
      ck.entries.emplace_back("den.user_table", denoiser->user_table);
      ck.entries.emplace_back("den.item_table", denoiser->item_table);
      for (std::size_t l = 0; l < denoiser->gate_mlps.size(); ++l)
        add_mlp("den.gate" + std::to_string(l), denoiser->gate_mlps[l]);
    }
    return ck;
  }
};

struct StepMetrics {
  double bpr = 0, ssl = 0, upper = 0;
  double kl = 0, dis = 0, gen_bpr = 0, gen_total = 0;
  double l0 = 0, den_bpr = 0, den_total = 0, lower = 0;
  std::vector<double> kept_fraction;
};

struct HistoryRow {
  std::int32_t epoch = 0;
  StepMetrics mean;
  bool evaluated = false;
  double val_recall20 = 0, val_ndcg20 = 0;
};

struct History {
  std::vector<HistoryRow> rows;
  std::int32_t best_epoch = -1;
  double best_val_recall20 = 0;
  std::int32_t layer_count = 0;
  bool stopped_early = false;
};

void write_history_csv(const History& h, const std::string& path);
void write_history_json(const History& h, const TrainConfig& cfg,
                        const std::string& path);

// ---------------------------------------------------------------------------

namespace detail_trainer {

inline std::vector<std::int32_t> sorted_unique(std::vector<std::int32_t> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

template <class T>
void check_finite(const char* what, const Tensor<T>& t) {
  if (!std::isfinite(static_cast<double>(t.item())))
    throw NumericError(std::string("non-finite loss: ") + what);
}

}  // namespace detail_trainer

struct TrainerStreams {
  RngStream vgae_noise, vgae2_noise, gate_noise, view_sample, view2_sample,
      neg_edges, edge_drop;

  explicit TrainerStreams(std::uint64_t seed)
      : vgae_noise(seed, "vgae_noise"), vgae2_noise(seed, "vgae2_noise"),
        gate_noise(seed, "gate_noise"), view_sample(seed, "view_sample"),
        view2_sample(seed, "view2_sample"), neg_edges(seed, "neg_edges"),
        edge_drop(seed, "edge_drop") {}
};

template <class T>
TrainState<T> init_state(const TrainConfig& cfg, const InteractionGraph& g) {
  cfg.validate();
  TrainState<T> s;
  RngStream init_main(cfg.seed, "init_main");
  s.main_user = xavier_uniform<T>(g.users, cfg.d, init_main);
  s.main_item = xavier_uniform<T>(g.items, cfg.d, init_main);
  s.opt_main = Adam<T>(s.main_params(), cfg.learning_rate);
  if (cfg.generators_enabled()) {
    const Propagation prop = cfg.propagation_mode();
    RngStream init_vgae(cfg.seed, "init_vgae");
    s.vgae.emplace(g.users, g.items, cfg.d, cfg.L, prop, init_vgae);
    if (cfg.variant == Variant::GenGen) {
      RngStream init_vgae2(cfg.seed, "init_vgae2");
      s.vgae2.emplace(g.users, g.items, cfg.d, cfg.L, prop, init_vgae2);
      s.opt_den = Adam<T>(s.vgae2->params(), cfg.learning_rate);
    } else {
      RngStream init_den(cfg.seed, "init_den");
      s.denoiser.emplace(g.users, g.items, cfg.d, cfg.L, prop, init_den);
      s.denoiser->hc = cfg.hard_concrete();
      s.opt_den = Adam<T>(s.denoiser->params(), cfg.learning_rate);
    }
    s.opt_vgae = Adam<T>(s.vgae->params(), cfg.learning_rate);
  }
  return s;
}

// One training step: upper-level update of the main encoder, then (when
// generators are enabled) a lower-level update of both view generators on
// fresh forward passes.
template <class T>
StepMetrics train_step(TrainState<T>& state, const InteractionGraph& g,
                       const TripletBatch& batch, const TripletBatch& gen_batch,
                       const TrainConfig& cfg, TrainerStreams& streams) {
  StepMetrics m;
  const Propagation prop = cfg.propagation_mode();
  const ContrastiveConfig ccfg{cfg.tau, cfg.lambda1, cfg.lambda2};

  // ---- view construction --------------------------------------------------
  std::optional<InteractionGraph> view1_graph, view2_graph;
  Tensor<T> view2_user, view2_item;  // denoiser embeddings (detached)
  if (cfg.variant == Variant::EdgeDrop) {
    view1_graph = drop_edges(g, cfg.edge_drop_ratio, streams.edge_drop);
    view2_graph = drop_edges(g, cfg.edge_drop_ratio, streams.edge_drop);
  } else if (cfg.generators_enabled()) {
    {
      NoGradGuard ng;
      VgaeForward<T> f = vgae_encode(g, *state.vgae);
      f.latent = reparameterize(
          f.mu, f.log_std,
          make_normal_noise<T>(f.mu.rows(), f.mu.cols(), streams.vgae_noise));
      std::vector<std::pair<std::int32_t, std::int32_t>> pairs;
      pairs.reserve(static_cast<std::size_t>(g.edge_count()));
      for (std::int64_t e = 0; e < g.edge_count(); ++e) {
        const auto [u, i] = g.edge(e);
        pairs.emplace_back(u, i + g.users);
      }
      Tensor<T> probs =
          decode_edges(f.latent, g.users, pairs, state.vgae->decoder);
      ViewSample vs =
          generate_view(g, probs.value(), streams.view_sample);
      if (vs.fallback)
        std::fprintf(stderr,
                     "[adagcl] warning: generated view dropped every edge; "
                     "falling back to the original graph\n");
      view1_graph = std::move(vs.graph);
      if (cfg.vgae_add_edges && !vs.fallback)
        view1_graph = add_generated_edges(*view1_graph, g, *state.vgae,
                                          f.latent, g.edge_count(),
                                          streams.view_sample);
    }
    if (cfg.variant == Variant::GenGen) {
      NoGradGuard ng;
      VgaeForward<T> f2 = vgae_encode(g, *state.vgae2);
      f2.latent = reparameterize(
          f2.mu, f2.log_std,
          make_normal_noise<T>(f2.mu.rows(), f2.mu.cols(), streams.vgae2_noise));
      std::vector<std::pair<std::int32_t, std::int32_t>> pairs;
      pairs.reserve(static_cast<std::size_t>(g.edge_count()));
      for (std::int64_t e = 0; e < g.edge_count(); ++e) {
        const auto [u, i] = g.edge(e);
        pairs.emplace_back(u, i + g.users);
      }
      Tensor<T> probs =
          decode_edges(f2.latent, g.users, pairs, state.vgae2->decoder);
      ViewSample vs =
          generate_view(g, probs.value(), streams.view2_sample);
      if (vs.fallback)
        std::fprintf(stderr,
                     "[adagcl] warning: second generated view dropped every "
                     "edge; falling back to the original graph\n");
      view2_graph = std::move(vs.graph);
    } else {
      NoGradGuard ng;
      DenoiseForward<T> df =
          denoise_forward(g, *state.denoiser, GateMode::Train,
                          streams.gate_noise);
      view2_user = df.emb.final_user;
      view2_item = df.emb.final_item;
      m.kept_fraction = df.kept_fraction;
    }
  }

  // ---- upper level ---------------------------------------------------------
  EmbeddingState<T> main_state =
      propagate(g, state.main_user, state.main_item, cfg.L, prop);
  Tensor<T> upper;
  if (cfg.lambda1 > 0) {
    EmbeddingState<T> v1 =
        propagate(*view1_graph, state.main_user, state.main_item, cfg.L, prop);
    Tensor<T> v2u, v2i;
    if (view2_graph) {
      EmbeddingState<T> v2 = propagate(*view2_graph, state.main_user,
                                       state.main_item, cfg.L, prop);
      v2u = v2.final_user;
      v2i = v2.final_item;
    } else {
      v2u = view2_user;  // already detached (built under NoGradGuard)
      v2i = view2_item;
    }
    std::vector<std::int32_t> bu, bi;
    if (cfg.ssl_full_batch) {
      bu.resize(g.users);
      bi.resize(g.items);
      for (std::int32_t i = 0; i < g.users; ++i) bu[i] = i;
      for (std::int32_t i = 0; i < g.items; ++i) bi[i] = i;
    } else {
      bu = detail_trainer::sorted_unique(batch.user);
      std::vector<std::int32_t> items = batch.pos;
      items.insert(items.end(), batch.neg.begin(), batch.neg.end());
      bi = detail_trainer::sorted_unique(std::move(items));
    }
    if (bu.size() < 2 || bi.size() < 2)
      throw UsageError("train_step: contrastive batch needs >=2 anchors");
    upper = upper_loss(main_state.final_user, main_state.final_item,
                       gather_rows(v1.final_user, bu), gather_rows(v2u, bu),
                       gather_rows(v1.final_item, bi), gather_rows(v2i, bi),
                       batch, state.main_params(), ccfg);
    // recover components for reporting
    Tensor<T> b = bpr_loss(main_state.final_user, main_state.final_item, batch);
    m.bpr = static_cast<double>(b.item());
    m.ssl = (static_cast<double>(upper.item()) - m.bpr -
             cfg.lambda2 * static_cast<double>(
                               l2_reg(state.main_params()).item())) /
            cfg.lambda1;
  } else {
    upper = upper_loss(main_state.final_user, main_state.final_item,
                       Tensor<T>(), Tensor<T>(), Tensor<T>(), Tensor<T>(),
                       batch, state.main_params(), ccfg);
    m.bpr = static_cast<double>(
        bpr_loss(main_state.final_user, main_state.final_item, batch).item());
  }
  detail_trainer::check_finite("upper", upper);
  m.upper = static_cast<double>(upper.item());
  backward(upper);
  state.opt_main.step();

  // ---- lower level ---------------------------------------------------------
  if (cfg.generators_enabled()) {
    const bool include_task = cfg.variant != Variant::NoTask;
    const TripletBatch& gb = cfg.gen_reuse_batch ? batch : gen_batch;

    VgaeForward<T> f = vgae_encode(g, *state.vgae);
    f.latent = reparameterize(
        f.mu, f.log_std,
        make_normal_noise<T>(f.mu.rows(), f.mu.cols(), streams.vgae_noise));
    VgaeLossParts<T> gen =
        vgae_loss(g, *state.vgae, f, cfg.neg_ratio, gb, cfg.lambda2,
                  include_task, streams.neg_edges);
    m.kl = static_cast<double>(gen.kl.item());
    m.dis = static_cast<double>(gen.dis.item());
    m.gen_bpr = static_cast<double>(gen.bpr.item());
    m.gen_total = static_cast<double>(gen.total.item());

    Tensor<T> lower;
    if (cfg.variant == Variant::GenGen) {
      VgaeForward<T> f2 = vgae_encode(g, *state.vgae2);
      f2.latent = reparameterize(
          f2.mu, f2.log_std,
          make_normal_noise<T>(f2.mu.rows(), f2.mu.cols(),
                               streams.vgae2_noise));
      VgaeLossParts<T> gen2 =
          vgae_loss(g, *state.vgae2, f2, cfg.neg_ratio, gb, cfg.lambda2,
                    include_task, streams.neg_edges);
      m.den_total = static_cast<double>(gen2.total.item());
      lower = lower_loss(gen.total, gen2.total);
    } else {
      DenoiseForward<T> df = denoise_forward(g, *state.denoiser,
                                             GateMode::Train,
                                             streams.gate_noise);
      DenoiseLossParts<T> den = denoise_loss(df, *state.denoiser, gb,
                                             cfg.lc_weight, cfg.lambda2,
                                             include_task);
      m.l0 = static_cast<double>(den.l0.item());
      m.den_bpr = static_cast<double>(den.bpr.item());
      m.den_total = static_cast<double>(den.total.item());
      lower = lower_loss(gen.total, den.total);
    }
    detail_trainer::check_finite("lower", lower);
    m.lower = static_cast<double>(lower.item());
    backward(lower);
    state.opt_vgae.step();
    state.opt_den.step();
  }
  state.step++;
  return m;
}

template <class T>
struct FitResult {
  TrainState<T> state;
  History history;
};

template <class T>
FitResult<T> fit(const TrainConfig& cfg, const SplitSet& splits) {
  cfg.validate();
  InteractionGraph graph = build_graph(splits.train);
  TrainState<T> state = init_state<T>(cfg, graph);

  TrainerStreams streams(cfg.seed);
  TripletSampler sampler(splits.train, cfg.seed, "batch");
  TripletSampler gen_sampler(splits.train, cfg.seed, "gen_batch");

  History hist;
  hist.layer_count = cfg.L;

  const std::int64_t n_train = splits.train.interaction_count();
  const std::int32_t batches_per_epoch = static_cast<std::int32_t>(
      std::max<std::int64_t>(1, (n_train + cfg.batch_size - 1) / cfg.batch_size));

  std::optional<NamedTensors<T>> best;
  std::int32_t evals_since_best = 0;

  for (std::int32_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    if (stop_requested().load()) break;
    StepMetrics sum;
    sum.kept_fraction.assign(cfg.L, 0.0);
    std::int32_t kept_rows = 0;
    for (std::int32_t b = 0; b < batches_per_epoch; ++b) {
      if (stop_requested().load()) break;
      TripletBatch batch = sampler.sample(cfg.batch_size);
      TripletBatch gen_batch;
      if (cfg.generators_enabled() && !cfg.gen_reuse_batch)
        gen_batch = gen_sampler.sample(cfg.batch_size);
      StepMetrics sm = train_step(state, graph, batch, gen_batch, cfg, streams);
      sum.bpr += sm.bpr;
      sum.ssl += sm.ssl;
      sum.upper += sm.upper;
      sum.kl += sm.kl;
      sum.dis += sm.dis;
      sum.gen_bpr += sm.gen_bpr;
      sum.gen_total += sm.gen_total;
      sum.l0 += sm.l0;
      sum.den_bpr += sm.den_bpr;
      sum.den_total += sm.den_total;
      sum.lower += sm.lower;
      if (!sm.kept_fraction.empty()) {
        for (std::int32_t l = 0; l < cfg.L; ++l)
          sum.kept_fraction[l] += sm.kept_fraction[l];
        ++kept_rows;
      }
    }
    HistoryRow row;
    row.epoch = epoch;
    row.mean = sum;
    const double nb = static_cast<double>(batches_per_epoch);
    row.mean.bpr /= nb;
    row.mean.ssl /= nb;
    row.mean.upper /= nb;
    row.mean.kl /= nb;
    row.mean.dis /= nb;
    row.mean.gen_bpr /= nb;
    row.mean.gen_total /= nb;
    row.mean.l0 /= nb;
    row.mean.den_bpr /= nb;
    row.mean.den_total /= nb;
    row.mean.lower /= nb;
    if (kept_rows > 0)
      for (auto& k : row.mean.kept_fraction) k /= kept_rows;
    else
      row.mean.kept_fraction.clear();

    if (cfg.eval_every > 0 && (epoch % cfg.eval_every == 0) &&
        splits.validation.interaction_count() > 0) {
      NoGradGuard ng;
      EmbeddingState<T> snap = propagate(graph, state.main_user,
                                         state.main_item, cfg.L,
                                         cfg.propagation_mode());
      EvalReport rep = evaluate(snap.final_user, snap.final_item, splits,
                                EvalMode::Validation, {20}, cfg.threads);
      row.evaluated = true;
      row.val_recall20 = rep.recall.at(20);
      row.val_ndcg20 = rep.ndcg.at(20);
      if (row.val_recall20 > hist.best_val_recall20 || hist.best_epoch < 0) {
        hist.best_val_recall20 = row.val_recall20;
        hist.best_epoch = epoch;
        best = state.named();
        for (auto& [name, t] : best->entries)
          t = Tensor<T>::leaf(t.rows(), t.cols(), t.value());  // deep copy
        evals_since_best = 0;
      } else {
        ++evals_since_best;
      }
    }
    hist.rows.push_back(std::move(row));
    if (cfg.patience > 0 && evals_since_best >= cfg.patience) {
      hist.stopped_early = true;
      break;
    }
  }

  // restore best validation checkpoint
  if (best) {
    NamedTensors<T> cur = state.named();
    for (std::size_t i = 0; i < cur.entries.size(); ++i)
      cur.entries[i].second.value() = best->entries[i].second.value();
  }
  return {std::move(state), std::move(hist)};
}

// Rebuilds a TrainState from checkpoint tensors; optimizer moments are not
// persisted, so a loaded state starts with fresh Adam statistics.
template <class T>
TrainState<T> state_from_named(const NamedTensors<T>& ck,
                               const TrainConfig& cfg) {
  const auto require = [&](const std::string& name) {
    const Tensor<T>* t = ck.find(name);
    if (!t) throw DataError("checkpoint is missing tensor: " + name);
    return *t;
  };
  const auto load_mlp = [&](const std::string& prefix, Activation act) {
    Mlp<T> m;
    m.act = act;
    for (std::size_t i = 0;; ++i) {
      const Tensor<T>* w = ck.find(prefix + ".w" + std::to_string(i));
      if (!w) break;
      m.weights.push_back(*w);
      m.biases.push_back(require(prefix + ".b" + std::to_string(i)));
    }
    if (m.weights.empty())
      throw DataError("checkpoint is missing MLP: " + prefix);
    return m;
  };
  const auto load_vgae = [&](const std::string& prefix) {
    Vgae<T> v;
    v.user_table = require(prefix + ".user_table");
    v.item_table = require(prefix + ".item_table");
    v.mu_head = load_mlp(prefix + ".mu_head", Activation::Identity);
    v.logstd_head = load_mlp(prefix + ".logstd_head", Activation::Identity);
    v.decoder = load_mlp(prefix + ".decoder", Activation::Tanh);
    v.layers = cfg.L;
    v.propagation = cfg.propagation_mode();
    return v;
  };

  TrainState<T> s;
  s.step = ck.step;
  s.main_user = require("main.user_table");
  s.main_item = require("main.item_table");
  s.opt_main = Adam<T>(s.main_params(), cfg.learning_rate);
  if (ck.find("vgae.user_table")) {
    s.vgae = load_vgae("vgae");
    s.opt_vgae = Adam<T>(s.vgae->params(), cfg.learning_rate);
  }
  if (ck.find("vgae2.user_table")) {
    s.vgae2 = load_vgae("vgae2");
    s.opt_den = Adam<T>(s.vgae2->params(), cfg.learning_rate);
  }
  if (ck.find("den.user_table")) {
    Denoiser<T> den;
    den.user_table = require("den.user_table");
    den.item_table = require("den.item_table");
    for (std::size_t l = 0;; ++l) {
      if (!ck.find("den.gate" + std::to_string(l) + ".w0")) break;
      den.gate_mlps.push_back(
          load_mlp("den.gate" + std::to_string(l), Activation::Tanh));
    }
    den.hc = cfg.hard_concrete();
    den.propagation = cfg.propagation_mode();
    s.denoiser = std::move(den);
    s.opt_den = Adam<T>(s.denoiser->params(), cfg.learning_rate);
  }
  return s;
}

// Comparison baselines sharing the trainer and evaluation path.
template <class T>
FitResult<T> train_lightgcn(TrainConfig cfg, const SplitSet& splits) {
  cfg.lambda1 = 0;
  cfg.variant = Variant::Full;
  return fit<T>(cfg, splits);
}

template <class T>
FitResult<T> train_edge_drop(TrainConfig cfg, const SplitSet& splits) {
  cfg.variant = Variant::EdgeDrop;
  return fit<T>(cfg, splits);
}

}  // namespace adagcl
