// Acceptance suite: one line per criterion, nonzero exit if any executed
// criterion fails. The Last.FM reproduction criteria (5-7) need the raw
// dataset and a multi-hour budget; they run when ADAGCL_RUN_FULL=1 and the
// dataset file is present, and are reported as SKIP otherwise.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "adagcl/denoise.hpp"
#include "adagcl/experiments.hpp"
#include "adagcl/trainer.hpp"
#include "adagcl/vgae.hpp"

using namespace adagcl;
namespace fs = std::filesystem;

using D = Tensor<double>;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int id, const std::string& name, bool pass,
            const std::string& detail) {
  std::printf("[%s] criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL", id,
              name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

void skip(int id, const std::string& name, const std::string& why) {
  std::printf("[SKIP] criterion %d: %s (%s)\n", id, name.c_str(), why.c_str());
  std::fflush(stdout);
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

InteractionGraph random_graph(std::int32_t users, std::int32_t items,
                              int edges, RngStream& rng) {
  // keep density below ~25% so non-edge sampling always has headroom
  const int cap = static_cast<int>(
      static_cast<std::int64_t>(users) * items / 4);
  const int n = std::min(edges, std::max(1, cap));
  std::vector<std::pair<std::int32_t, std::int32_t>> pairs;
  for (int i = 0; i < n; ++i)
    pairs.emplace_back(static_cast<std::int32_t>(rng.next_below(users)),
                       static_cast<std::int32_t>(rng.next_below(items)));
  return build_graph(table_from_pairs(users, items, pairs));
}

// ---------------------------------------------------------------------------
// criterion 1: gradient correctness of every objective
// ---------------------------------------------------------------------------

void criterion_1() {
  const auto t0 = Clock::now();
  RngStream rng(101, "c1");
  int instances = 0;
  double worst = 0;
  bool ok = true;

  auto run_check = [&](const std::function<D()>& f,
                       const std::vector<D>& params) {
    auto rep = grad_check<double>(f, params, 1e-6, 1e-4);
    worst = std::max(worst, rep.max_rel_err);
    ok = ok && rep.pass;
    ++instances;
  };

  for (int iter = 0; iter < 15; ++iter) {
    const auto I = static_cast<std::int32_t>(rng.next_int(4, 8));
    const auto J = static_cast<std::int32_t>(rng.next_int(5, 12));
    auto g = random_graph(I, J, 3 * I, rng);
    const int d = 3;

    TripletBatch batch;
    for (std::int32_t u = 0; u < I; ++u) {
      if (g.norm.indptr[u] == g.norm.indptr[u + 1]) continue;
      batch.user.push_back(u);
      batch.pos.push_back(g.norm.indices[g.norm.indptr[u]]);
      batch.neg.push_back(static_cast<std::int32_t>(rng.next_below(J)));
    }
    if (batch.size() < 2) continue;

    // ranking loss through the propagation
    D fu = xavier_uniform<double>(I, d, rng);
    D fv = xavier_uniform<double>(J, d, rng);
    run_check(
        [&]() {
          auto s = propagate(g, fu, fv, 2);
          return bpr_loss(s.final_user, s.final_item, batch);
        },
        {fu, fv});

    // contrastive loss
    D va = xavier_uniform<double>(static_cast<std::int32_t>(batch.size()), d,
                                  rng);
    D vb = xavier_uniform<double>(static_cast<std::int32_t>(batch.size()), d,
                                  rng);
    run_check([&]() { return infonce(va, vb, 0.25); }, {va, vb});

    // expected-L0 penalty through the gate scores
    Denoiser<double> den(I, J, d, 2, Propagation::Residual, rng);
    run_check(
        [&]() {
          auto alpha =
              edge_score(den.user_table, den.item_table, g, den.gate_mlps[0]);
          return sum_all(expected_l0(alpha, den.hc));
        },
        den.params());

    // denoising generator loss (frozen gate noise)
    const std::uint64_t noise_seed = rng.next_u64();
    run_check(
        [&]() {
          RngStream gr(noise_seed, "gate");
          auto fwd = denoise_forward(g, den, GateMode::Train, gr);
          return denoise_loss(fwd, den, batch, 0.01, 1e-4, true).total;
        },
        den.params());

    // generative view generator loss (frozen eps and negatives)
    Vgae<double> v(I, J, d, 1, Propagation::Residual, rng);
    D eps = make_normal_noise<double>(I + J, d, rng);
    const std::uint64_t neg_seed = rng.next_u64();
    run_check(
        [&]() {
          auto f = vgae_encode(g, v);
          f.latent = reparameterize(f.mu, f.log_std, eps);
          RngStream negs(neg_seed, "neg");
          return vgae_loss(g, v, f, 1, batch, 1e-4, true, negs).total;
        },
        v.params());

    // upper objective with detached views
    D w2u = xavier_uniform<double>(I, d, rng);
    D w2i = xavier_uniform<double>(J, d, rng);
    std::vector<std::int32_t> bu = detail_trainer::sorted_unique(batch.user);
    std::vector<std::int32_t> bi = batch.pos;
    bi.insert(bi.end(), batch.neg.begin(), batch.neg.end());
    bi = detail_trainer::sorted_unique(bi);
    if (bu.size() >= 2 && bi.size() >= 2) {
      ContrastiveConfig ccfg{0.25, 0.1, 1e-4};
      run_check(
          [&]() {
            auto s = propagate(g, fu, fv, 2);
            return upper_loss(s.final_user, s.final_item,
                              gather_rows(s.final_user, bu),
                              stop_grad(gather_rows(w2u, bu)),
                              gather_rows(s.final_item, bi),
                              stop_grad(gather_rows(w2i, bi)), batch,
                              {fu, fv}, ccfg);
          },
          {fu, fv});
    }

    // combined generator objective
    run_check(
        [&]() {
          auto f = vgae_encode(g, v);
          f.latent = reparameterize(f.mu, f.log_std, eps);
          RngStream negs(neg_seed, "neg");
          auto gen = vgae_loss(g, v, f, 1, batch, 1e-4, true, negs);
          RngStream gr(noise_seed, "gate");
          auto fwd = denoise_forward(g, den, GateMode::Train, gr);
          auto dl = denoise_loss(fwd, den, batch, 0.01, 1e-4, true);
          return lower_loss(gen.total, dl.total);
        },
        den.params());
  }

  const double dt = seconds_since(t0);
  char detail[160];
  std::snprintf(detail, sizeof(detail),
                "%d instances, max rel err %.2e, %.1fs", instances, worst, dt);
  report(1, "gradient correctness of all objectives",
         ok && instances >= 100 && dt < 120.0, detail);
}

// ---------------------------------------------------------------------------
// criterion 2: closed-form identities
// ---------------------------------------------------------------------------

void criterion_2() {
  bool ok = true;
  double worst = 0;
  auto expect = [&](double got, double want) {
    worst = std::max(worst, std::abs(got - want));
    ok = ok && std::abs(got - want) < 1e-9;
  };

  expect(kl_to_standard_normal(D::zeros(3, 4), D::zeros(3, 4)).item(), 0.0);
  expect(kl_to_standard_normal(D::full(1, 1, 1.0), D::zeros(1, 1)).item(),
         0.5);

  D fu = D::leaf(1, 2, {1.0, 0.0});
  D fv = D::leaf(2, 2, {0.5, 0.0, 0.5, 0.0});
  TripletBatch b;
  b.user = {0};
  b.pos = {0};
  b.neg = {1};
  expect(bpr_loss(fu, fv, b).item(), std::log(2.0));

  for (int n : {2, 5, 16}) {
    std::vector<double> rows;
    for (int i = 0; i < n; ++i) {
      rows.push_back(0.4);
      rows.push_back(-0.2);
      rows.push_back(0.9);
    }
    D v = D::leaf(n, 3, rows);
    expect(infonce(v, v, 0.2).item(), std::log(double(n)));
  }

  HardConcrete hc;
  const double mid = hc.beta * std::log(-hc.gamma / hc.zeta);
  expect(expected_l0(D::leaf(1, 1, {mid}), hc).item(), 0.5);

  char detail[96];
  std::snprintf(detail, sizeof(detail), "max abs deviation %.2e", worst);
  report(2, "closed-form identities", ok, detail);
}

// ---------------------------------------------------------------------------
// criterion 3: metric oracle equivalence
// ---------------------------------------------------------------------------

struct NaiveMetrics {
  double recall = 0, ndcg = 0;
};

NaiveMetrics naive_user_metrics(const std::vector<double>& scores,
                                const std::set<std::int32_t>& masked,
                                const std::set<std::int32_t>& relevant,
                                int n) {
  std::vector<std::int32_t> pool;
  for (std::int32_t j = 0; j < static_cast<std::int32_t>(scores.size()); ++j)
    if (!masked.count(j)) pool.push_back(j);
  std::vector<char> used(pool.size(), 0);
  std::vector<std::int32_t> ranked;
  for (std::size_t step = 0; step < pool.size(); ++step) {
    int best = -1;
    for (std::size_t k = 0; k < pool.size(); ++k) {
      if (used[k]) continue;
      if (best < 0 || scores[pool[k]] > scores[pool[best]] ||
          (scores[pool[k]] == scores[pool[best]] && pool[k] < pool[best]))
        best = static_cast<int>(k);
    }
    used[best] = 1;
    ranked.push_back(pool[best]);
  }
  NaiveMetrics m;
  int hits = 0;
  double dcg = 0;
  for (int p = 0; p < n && p < static_cast<int>(ranked.size()); ++p)
    if (relevant.count(ranked[p])) {
      ++hits;
      dcg += 1.0 / std::log2(p + 2.0);
    }
  m.recall = double(hits) / double(relevant.size());
  double idcg = 0;
  for (int p = 1; p <= std::min<int>(n, static_cast<int>(relevant.size()));
       ++p)
    idcg += 1.0 / std::log2(p + 1.0);
  m.ndcg = dcg / idcg;
  return m;
}

void criterion_3() {
  RngStream rng(303, "c3");
  int instances = 0;
  double worst = 0;
  bool ok = true;
  while (instances < 50) {
    const auto I = static_cast<std::int32_t>(rng.next_int(2, 30));
    const auto J = static_cast<std::int32_t>(rng.next_int(5, 50));
    std::vector<std::pair<std::int32_t, std::int32_t>> tr, va, te;
    for (std::int32_t u = 0; u < I; ++u) {
      const int n = static_cast<int>(rng.next_int(1, 6));
      for (int k = 0; k < n; ++k)
        tr.emplace_back(u, static_cast<std::int32_t>(rng.next_below(J)));
      if (rng.next_real() < 0.8)
        te.emplace_back(u, static_cast<std::int32_t>(rng.next_below(J)));
      if (rng.next_real() < 0.5)
        va.emplace_back(u, static_cast<std::int32_t>(rng.next_below(J)));
    }
    SplitSet s;
    s.train = table_from_pairs(I, J, tr);
    std::set<std::pair<std::int32_t, std::int32_t>> trs(
        s.train.records.begin(), s.train.records.end());
    auto strip = [&](std::vector<std::pair<std::int32_t, std::int32_t>> v) {
      std::vector<std::pair<std::int32_t, std::int32_t>> out;
      for (auto& p : v)
        if (!trs.count(p)) out.push_back(p);
      return table_from_pairs(I, J, out);
    };
    s.validation = strip(va);
    s.test = strip(te);
    if (s.test.records.empty()) continue;

    RngStream er(900 + instances, "emb");
    D U = xavier_uniform<double>(I, 5, er);
    D V = xavier_uniform<double>(J, 5, er);
    EvalReport rep = evaluate(U, V, s, EvalMode::Test, {10, 20},
                              instances % 2 ? 2 : 1);
    auto train_by = detail_eval::items_by_user(s.train);
    auto val_by = detail_eval::items_by_user(s.validation);
    auto test_by = detail_eval::items_by_user(s.test);
    for (std::size_t k = 0; k < rep.users.size(); ++k) {
      const std::int32_t u = rep.users[k];
      std::vector<double> scores(J);
      for (std::int32_t j = 0; j < J; ++j) {
        double dot = 0;
        for (int c = 0; c < 5; ++c) dot += U.at(u, c) * V.at(j, c);
        scores[j] = dot;
      }
      std::set<std::int32_t> masked(train_by[u].begin(), train_by[u].end());
      masked.insert(val_by[u].begin(), val_by[u].end());
      std::set<std::int32_t> rel(test_by[u].begin(), test_by[u].end());
      for (int n : {10, 20}) {
        auto naive = naive_user_metrics(scores, masked, rel, n);
        const double dr =
            std::abs(naive.recall - rep.per_user_recall.at(n)[k]);
        const double dn = std::abs(naive.ndcg - rep.per_user_ndcg.at(n)[k]);
        worst = std::max({worst, dr, dn});
        ok = ok && dr <= 1e-12 && dn <= 1e-12;
      }
    }
    ++instances;
  }
  char detail[96];
  std::snprintf(detail, sizeof(detail), "%d instances, max |diff| %.2e",
                instances, worst);
  report(3, "metric oracle equivalence", ok, detail);
}

// ---------------------------------------------------------------------------
// criterion 4: planted-structure learning
// ---------------------------------------------------------------------------

InteractionTable planted_communities(std::int32_t users, std::int32_t items,
                                     int blocks, double in_density,
                                     double cross_density,
                                     std::uint64_t seed) {
  RngStream rng(seed, "planted");
  std::vector<std::pair<std::int32_t, std::int32_t>> pairs;
  const std::int32_t ub = users / blocks, ib = items / blocks;
  for (std::int32_t u = 0; u < users; ++u)
    for (std::int32_t v = 0; v < items; ++v) {
      const double p = (u / ub == v / ib) ? in_density : cross_density;
      if (rng.next_real() < p) pairs.emplace_back(u, v);
    }
  for (std::int32_t u = 0; u < users; ++u) {
    bool has = false;
    for (auto& [uu, vv] : pairs)
      if (uu == u) {
        has = true;
        break;
      }
    if (!has)
      pairs.emplace_back(
          u, (u / ub) * ib + static_cast<std::int32_t>(rng.next_below(ib)));
  }
  return table_from_pairs(users, items, pairs);
}

// Reference ceiling: ranks every same-community item ahead of everything
// else, i.e. an evaluator with perfect knowledge of the planted structure.
// Held-out edges are exchangeable within a community, so no model can beat
// this in expectation.
double block_oracle_recall20(const SplitSet& splits, int blocks) {
  const std::int32_t users = splits.train.user_count;
  const std::int32_t items = splits.train.item_count;
  const std::int32_t ub = users / blocks, ib = items / blocks;
  auto train_by = detail_eval::items_by_user(splits.train);
  auto val_by = detail_eval::items_by_user(splits.validation);
  auto test_by = detail_eval::items_by_user(splits.test);
  double acc = 0;
  int n = 0;
  for (std::int32_t u = 0; u < users; ++u) {
    if (test_by[u].empty()) continue;
    std::vector<double> scores(items, 0.0);
    for (std::int32_t j = 0; j < items; ++j)
      if (j / ib == u / ub) scores[j] = 1.0;
    std::vector<char> masked(items, 0);
    for (auto v : train_by[u]) masked[v] = 1;
    for (auto v : val_by[u]) masked[v] = 1;
    std::vector<char> rel(items, 0);
    std::int64_t nrel = 0;
    for (auto v : test_by[u]) {
      rel[v] = 1;
      ++nrel;
    }
    acc += recall_at_n(rank_items(scores, masked), rel, nrel, 20);
    ++n;
  }
  return acc / n;
}

void criterion_4() {
  const auto t0 = Clock::now();
  auto table = planted_communities(200, 200, 4, 0.05, 0.002, 424242);
  auto splits = split(table, {0.7, 0.2, 0.1}, 4242);

  TrainConfig cfg;
  cfg.d = 32;
  cfg.L = 2;
  cfg.batch_size = 16;
  cfg.learning_rate = 1e-2;
  cfg.max_epochs = 100;
  cfg.eval_every = 5;
  cfg.patience = 0;
  cfg.seed = 7;

  // untrained baseline: the freshly initialized state
  InteractionGraph g = build_graph(splits.train);
  auto init = init_state<float>(cfg, g);
  double untrained = 0;
  {
    NoGradGuard ng;
    auto snap = propagate(g, init.main_user, init.main_item, cfg.L);
    untrained = evaluate(snap.final_user, snap.final_item, splits,
                         EvalMode::Test, {20})
                    .recall.at(20);
  }

  auto res = fit<float>(cfg, splits);
  double trained = 0;
  {
    NoGradGuard ng;
    auto snap = propagate(g, res.state.main_user, res.state.main_item, cfg.L);
    trained = evaluate(snap.final_user, snap.final_item, splits,
                       EvalMode::Test, {20})
                  .recall.at(20);
  }
  const double ceiling = block_oracle_recall20(splits, 4);
  const double dt = seconds_since(t0);
  char detail[256];
  std::snprintf(detail, sizeof(detail),
                "trained recall@20 %.4f (>= 0.60), untrained %.4f, ratio "
                "%.1fx (>= 10x), %.0fs (< 600); perfect-community oracle "
                "ceiling on this dataset: %.4f",
                trained, untrained, trained / std::max(untrained, 1e-12), dt,
                ceiling);
  report(4, "planted-structure learning",
         trained >= 0.60 && trained >= 10.0 * untrained && dt < 600.0,
         detail);
}

// ---------------------------------------------------------------------------
// criteria 5-7: Last.FM reproduction (dataset- and budget-gated)
// ---------------------------------------------------------------------------

std::string lastfm_path() {
  const char* dir = std::getenv("ADAGCL_DATA_DIR");
  const std::string base = dir && *dir ? dir : "data";
  return base + "/lastfm/user_artists.dat";
}

bool full_runs_enabled() {
  const char* v = std::getenv("ADAGCL_RUN_FULL");
  return v && std::strcmp(v, "1") == 0;
}

TrainConfig lastfm_config() {
  TrainConfig cfg;
  cfg.d = 64;
  cfg.L = 3;
  cfg.batch_size = 2048;
  cfg.learning_rate = 1e-3;
  cfg.tau = 0.2;
  cfg.lambda1 = 0.1;
  cfg.lambda2 = 1e-5;
  cfg.max_epochs = 120;
  cfg.patience = 10;
  cfg.eval_every = 1;
  cfg.seed = 2024;
  cfg.threads = 2;
  return cfg;
}

double test_recall20(const FitResult<float>& res, const SplitSet& splits,
                     const TrainConfig& cfg) {
  NoGradGuard ng;
  InteractionGraph g = build_graph(splits.train);
  auto snap = propagate(g, res.state.main_user, res.state.main_item, cfg.L,
                        cfg.propagation_mode());
  return evaluate(snap.final_user, snap.final_item, splits, EvalMode::Test,
                  {20}, cfg.threads)
      .recall.at(20);
}

void criteria_5_to_7() {
  const std::string path = lastfm_path();
  const bool have_data = fs::exists(path);
  if (!have_data || !full_runs_enabled()) {
    const std::string why =
        !have_data ? "Last.FM dataset not found at " + path +
                         " (hetrec2011 user_artists.dat)"
                   : "multi-hour run disabled; set ADAGCL_RUN_FULL=1";
    skip(5, "Last.FM ordering reproduction", why);
    skip(6, "ablation ordering on Last.FM", why);
    skip(7, "noise-robustness direction on Last.FM", why);
    return;
  }

  auto table = load_interactions(path, "tsv_header");
  std::printf("  lastfm: %d users, %d items, %lld interactions\n",
              table.user_count, table.item_count,
              static_cast<long long>(table.interaction_count()));
  auto splits = split(table, {0.7, 0.2, 0.1}, 42);
  TrainConfig cfg = lastfm_config();

  // criterion 5
  {
    auto light = train_lightgcn<float>(cfg, splits);
    const double light_recall = test_recall20(light, splits, cfg);
    auto full = fit<float>(cfg, splits);
    const double full_recall = test_recall20(full, splits, cfg);
    const double rel_gain = (full_recall - light_recall) / light_recall;
    char detail[200];
    std::snprintf(detail, sizeof(detail),
                  "lightgcn recall@20 %.4f (>= 0.21), full %.4f, relative "
                  "gain %.1f%% (>= 3%%)",
                  light_recall, full_recall, 100.0 * rel_gain);
    report(5, "Last.FM ordering reproduction",
           light_recall >= 0.21 && rel_gain >= 0.03, detail);

    // criterion 6 reuses the full-model run
    auto edged = train_edge_drop<float>(cfg, splits);
    const double edged_recall = test_recall20(edged, splits, cfg);
    char detail6[160];
    std::snprintf(detail6, sizeof(detail6),
                  "full recall@20 %.4f vs edge-drop %.4f (strict >=)",
                  full_recall, edged_recall);
    report(6, "ablation ordering on Last.FM", full_recall >= edged_recall,
           detail6);
  }

  // criterion 7
  {
    TrainConfig ncfg = cfg;
    ncfg.max_epochs = 80;
    auto rep = noise_robustness<float>(ncfg, splits, {0.25},
                                       {"full", "lightgcn"});
    double full_drop = 0, light_drop = 0;
    for (const auto& row : rep.rows) {
      if (row.ratio == 0.25 && row.model == "full") full_drop = row.relative_drop;
      if (row.ratio == 0.25 && row.model == "lightgcn")
        light_drop = row.relative_drop;
    }
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "relative drop at 25%% noise: full %.3f <= lightgcn %.3f",
                  full_drop, light_drop);
    report(7, "noise-robustness direction on Last.FM",
           full_drop <= light_drop, detail);
  }
}

// ---------------------------------------------------------------------------
// criterion 8: determinism
// ---------------------------------------------------------------------------

void criterion_8() {
  auto table = planted_communities(40, 40, 4, 0.3, 0.01, 888);
  auto splits = split(table, {0.7, 0.2, 0.1}, 88);
  TrainConfig cfg;
  cfg.d = 8;
  cfg.L = 2;
  cfg.batch_size = 64;
  cfg.max_epochs = 5;
  cfg.eval_every = 1;
  cfg.threads = 2;
  auto run = [&](const std::string& path) {
    auto res = fit<float>(cfg, splits);
    write_history_csv(res.history, path);
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    fs::remove(path);
    return ss.str();
  };
  const std::string a = run("acc_hist_a.csv");
  const std::string b = run("acc_hist_b.csv");
  char detail[96];
  std::snprintf(detail, sizeof(detail), "%zu-byte histories %s", a.size(),
                a == b ? "identical" : "differ");
  report(8, "bitwise-deterministic training history", !a.empty() && a == b,
         detail);
}

// ---------------------------------------------------------------------------
// criterion 9: complexity smoke check
// ---------------------------------------------------------------------------

double time_encoder_epoch(const InteractionGraph& g, std::int32_t d,
                          std::int32_t L) {
  RngStream rng(99, "c9");
  auto u = xavier_uniform<float>(g.users, d, rng);
  auto v = xavier_uniform<float>(g.items, d, rng);
  std::vector<double> times;
  for (int rep = 0; rep < 5; ++rep) {
    const auto t0 = Clock::now();
    auto s = propagate(g, u, v, L);
    auto loss = add(sum_all(s.final_user), sum_all(s.final_item));
    u.zero_grad();
    v.zero_grad();
    backward(loss);
    times.push_back(seconds_since(t0));
  }
  std::sort(times.begin(), times.end());
  return times[times.size() / 2];
}

void criterion_9() {
  RngStream rng(909, "c9g");
  auto g1 = random_graph(1500, 1500, 40000, rng);
  auto g2 = random_graph(1500, 1500, 80000, rng);
  const double t1 = time_encoder_epoch(g1, 32, 2);
  const double t2 = time_encoder_epoch(g2, 32, 2);
  const double ratio = t2 / t1;
  char detail[160];
  std::snprintf(detail, sizeof(detail),
                "|E| %lld -> %lld: %.2fms -> %.2fms, ratio %.2f (<= 2.5)",
                static_cast<long long>(g1.edge_count()),
                static_cast<long long>(g2.edge_count()), 1e3 * t1, 1e3 * t2,
                ratio);
  report(9, "linear-in-edges encoder scaling", ratio <= 2.5, detail);
}

}  // namespace

int main() {
  std::printf("adagcl acceptance suite\n");
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criteria_5_to_7();
  criterion_8();
  criterion_9();
  if (g_failures > 0) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all executed criteria passed\n");
  return 0;
}
