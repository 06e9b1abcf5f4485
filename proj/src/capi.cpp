#include "adagcl.h"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "adagcl/experiments.hpp"
#include "adagcl/trainer.hpp"

using namespace adagcl;

namespace fs = std::filesystem;

struct adagcl_splits {
  SplitSet splits;
};

struct adagcl_model {
  TrainConfig cfg;
  TrainState<float> state;
  std::string config_text;
};

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

template <class F>
int guarded(F&& fn) {
  try {
    fn();
    return ADAGCL_OK;
  } catch (const UsageError& e) {
    set_error(e.what());
    return ADAGCL_ERR_USAGE;
  } catch (const DataError& e) {
    set_error(e.what());
    return ADAGCL_ERR_DATA;
  } catch (const std::exception& e) {
    set_error(e.what());
    return ADAGCL_ERR_NUMERIC;
  }
}

EvalMode mode_from_cstr(const char* mode) {
  if (!mode || std::strcmp(mode, "test") == 0) return EvalMode::Test;
  if (std::strcmp(mode, "validation") == 0) return EvalMode::Validation;
  throw UsageError(std::string("unknown eval mode: ") + mode);
}

// Frozen snapshot of the main encoder over the training graph.
EmbeddingState<float> snapshot(const adagcl_model& m, const SplitSet& s) {
  NoGradGuard ng;
  InteractionGraph g = build_graph(s.train);
  return propagate(g, m.state.main_user, m.state.main_item, m.cfg.L,
                   m.cfg.propagation_mode());
}

}  // namespace

extern "C" {

const char* adagcl_version(void) {
  static std::string v = version_string();
  return v.c_str();
}

const char* adagcl_last_error(void) { return g_last_error.c_str(); }

void adagcl_request_stop(void) { stop_requested().store(true); }
void adagcl_clear_stop(void) { stop_requested().store(false); }

int adagcl_checksum_file(const char* path, char* hex_out, size_t cap) {
  return guarded([&] {
    if (!path || !hex_out || cap < 17)
      throw UsageError("adagcl_checksum_file: need path and cap >= 17");
    const std::uint64_t h = checksum_file(path);
    std::snprintf(hex_out, cap, "%016llx",
                  static_cast<unsigned long long>(h));
  });
}

int adagcl_prepare(const char* input_path, const char* format, int k_core,
                   const char* ratios, uint64_t seed, const char* split_mode,
                   const char* out_dir) {
  return guarded([&] {
    if (!input_path || !out_dir)
      throw UsageError("adagcl_prepare: input path and out dir required");
    std::array<double, 3> r{0.7, 0.2, 0.1};
    if (ratios && *ratios) {
      if (std::sscanf(ratios, "%lf,%lf,%lf", &r[0], &r[1], &r[2]) != 3)
        throw UsageError("adagcl_prepare: ratios must be \"a,b,c\"");
    }
    SplitMode mode = SplitMode::PerUser;
    if (split_mode && *split_mode) {
      if (std::strcmp(split_mode, "global") == 0)
        mode = SplitMode::Global;
      else if (std::strcmp(split_mode, "per_user") != 0)
        throw UsageError(std::string("unknown split mode: ") + split_mode);
    }
    InteractionTable t =
        load_interactions(input_path, format ? format : "tsv");
    if (k_core >= 1) t = k_core_filter(t, k_core);
    SplitSet s = split(t, r, seed, mode);
    save_split(s, out_dir);
  });
}

adagcl_splits* adagcl_splits_open(const char* dir) {
  adagcl_splits* out = nullptr;
  const int rc = guarded([&] {
    if (!dir) throw UsageError("adagcl_splits_open: dir required");
    auto s = std::make_unique<adagcl_splits>();
    s->splits = load_split(dir);
    out = s.release();
  });
  (void)rc;
  return out;
}

void adagcl_splits_close(adagcl_splits* s) { delete s; }

int adagcl_splits_counts(const adagcl_splits* s, int64_t* users,
                         int64_t* items, int64_t* train, int64_t* validation,
                         int64_t* test) {
  return guarded([&] {
    if (!s) throw UsageError("adagcl_splits_counts: null handle");
    if (users) *users = s->splits.train.user_count;
    if (items) *items = s->splits.train.item_count;
    if (train) *train = s->splits.train.interaction_count();
    if (validation) *validation = s->splits.validation.interaction_count();
    if (test) *test = s->splits.test.interaction_count();
  });
}

adagcl_model* adagcl_train(const adagcl_splits* s, const char* config_text,
                           const char* out_dir) {
  adagcl_model* out = nullptr;
  guarded([&] {
    if (!s) throw UsageError("adagcl_train: null splits handle");
    auto m = std::make_unique<adagcl_model>();
    m->cfg = config_text ? parse_train_config(config_text) : TrainConfig{};
    m->config_text = to_text(m->cfg);
    FitResult<float> res;
    try {
      res = fit<float>(m->cfg, s->splits);
    } catch (const NumericError&) {
      if (out_dir) {
        fs::create_directories(out_dir);
        std::ofstream diag(std::string(out_dir) + "/diagnostics.txt");
        diag << "training aborted on non-finite loss\n" << m->config_text;
      }
      throw;
    }
    m->state = std::move(res.state);
    if (out_dir) {
      fs::create_directories(out_dir);
      NamedTensors<float> ck = m->state.named();
      ck.meta = m->config_text;
      save_checkpoint(std::string(out_dir) + "/checkpoint.bin", ck);
      write_history_csv(res.history, std::string(out_dir) + "/history.csv");
      write_history_json(res.history, m->cfg,
                         std::string(out_dir) + "/history.json");
    }
    out = m.release();
  });
  return out;
}

adagcl_model* adagcl_model_load(const char* checkpoint_path,
                                const char* config_text) {
  adagcl_model* out = nullptr;
  guarded([&] {
    if (!checkpoint_path)
      throw UsageError("adagcl_model_load: checkpoint path required");
    NamedTensors<float> ck = load_checkpoint<float>(checkpoint_path);
    auto m = std::make_unique<adagcl_model>();
    if (config_text && *config_text)
      m->cfg = parse_train_config(config_text);
    else if (!ck.meta.empty())
      m->cfg = parse_train_config(ck.meta);
    else
      throw DataError(
          "checkpoint has no embedded config; pass config text explicitly");
    m->config_text = to_text(m->cfg);
    m->state = state_from_named(ck, m->cfg);
    out = m.release();
  });
  return out;
}

int adagcl_model_save(const adagcl_model* m, const char* path) {
  return guarded([&] {
    if (!m || !path) throw UsageError("adagcl_model_save: null argument");
    NamedTensors<float> ck = m->state.named();
    ck.meta = m->config_text;
    save_checkpoint(path, ck);
  });
}

void adagcl_model_close(adagcl_model* m) { delete m; }

const char* adagcl_model_config(const adagcl_model* m) {
  return m ? m->config_text.c_str() : "";
}

int adagcl_evaluate(const adagcl_model* m, const adagcl_splits* s,
                    const char* mode, const int* cutoffs, int n_cutoffs,
                    const char* out_json, const char* out_csv) {
  return guarded([&] {
    if (!m || !s) throw UsageError("adagcl_evaluate: null handle");
    std::vector<int> cuts;
    for (int i = 0; i < n_cutoffs; ++i) cuts.push_back(cutoffs[i]);
    if (cuts.empty()) cuts = {20, 40};
    EmbeddingState<float> snap = snapshot(*m, s->splits);
    EvalReport rep = evaluate(snap.final_user, snap.final_item, s->splits,
                              mode_from_cstr(mode), cuts, m->cfg.threads);
    nlohmann::json meta;
    meta["seed"] = m->cfg.seed;
    meta["step"] = m->state.step;
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(checksum_bytes(
                      m->config_text.data(), m->config_text.size())));
    meta["config_hash"] = hex;
    write_eval_report(rep, out_json ? out_json : "/dev/null",
                      out_csv ? out_csv : "/dev/null", meta);
  });
}

int adagcl_metric(const adagcl_model* m, const adagcl_splits* s,
                  const char* mode, int cutoff, const char* which,
                  double* out) {
  return guarded([&] {
    if (!m || !s || !which || !out)
      throw UsageError("adagcl_metric: null argument");
    EmbeddingState<float> snap = snapshot(*m, s->splits);
    EvalReport rep = evaluate(snap.final_user, snap.final_item, s->splits,
                              mode_from_cstr(mode), {cutoff}, m->cfg.threads);
    if (std::strcmp(which, "recall") == 0)
      *out = rep.recall.at(cutoff);
    else if (std::strcmp(which, "ndcg") == 0)
      *out = rep.ndcg.at(cutoff);
    else
      throw UsageError(std::string("unknown metric: ") + which);
  });
}

int adagcl_export_embeddings(const adagcl_model* m, const adagcl_splits* s,
                             const char* which, uint64_t seed,
                             const char* csv_path) {
  return guarded([&] {
    if (!m || !s || !which || !csv_path)
      throw UsageError("adagcl_export_embeddings: null argument");
    NoGradGuard ng;
    InteractionGraph g = build_graph(s->splits.train);
    if (std::strcmp(which, "main") == 0) {
      EmbeddingState<float> snap =
          propagate(g, m->state.main_user, m->state.main_item, m->cfg.L,
                    m->cfg.propagation_mode());
      export_embeddings_csv(snap.final_user, snap.final_item, csv_path);
    } else if (std::strcmp(which, "view1") == 0) {
      if (!m->state.vgae)
        throw UsageError("view1 export requires a generative view generator");
      RngStream noise(seed, "vgae_noise"), sample(seed, "view_sample");
      VgaeForward<float> f = vgae_encode(g, *m->state.vgae);
      f.latent = reparameterize(
          f.mu, f.log_std,
          make_normal_noise<float>(f.mu.rows(), f.mu.cols(), noise));
      std::vector<std::pair<std::int32_t, std::int32_t>> pairs;
      for (std::int64_t e = 0; e < g.edge_count(); ++e) {
        const auto [u, i] = g.edge(e);
        pairs.emplace_back(u, i + g.users);
      }
      Tensor<float> probs =
          decode_edges(f.latent, g.users, pairs, m->state.vgae->decoder);
      ViewSample vs = generate_view(g, probs.value(), sample);
      EmbeddingState<float> snap =
          propagate(vs.graph, m->state.main_user, m->state.main_item,
                    m->cfg.L, m->cfg.propagation_mode());
      export_embeddings_csv(snap.final_user, snap.final_item, csv_path);
    } else if (std::strcmp(which, "view2") == 0) {
      if (!m->state.denoiser)
        throw UsageError("view2 export requires a denoising view generator");
      RngStream unused(seed, "gate_noise");
      DenoiseForward<float> df =
          denoise_forward(g, *m->state.denoiser, GateMode::Eval, unused);
      export_embeddings_csv(df.emb.final_user, df.emb.final_item, csv_path);
    } else {
      throw UsageError(std::string("unknown export kind: ") + which);
    }
  });
}

int adagcl_experiment(const adagcl_splits* s, const char* kind,
                      const char* config_text, const char* options_json,
                      const char* out_dir) {
  return guarded([&] {
    if (!s || !kind || !out_dir)
      throw UsageError("adagcl_experiment: null argument");
    TrainConfig cfg =
        config_text ? parse_train_config(config_text) : TrainConfig{};
    nlohmann::json opt;
    if (options_json && *options_json) opt = nlohmann::json::parse(options_json);
    fs::create_directories(out_dir);

    if (std::strcmp(kind, "noise") == 0) {
      std::vector<double> ratios{0.05, 0.10, 0.15, 0.20, 0.25};
      std::vector<std::string> models{"full", "lightgcn", "edge_drop"};
      if (opt.contains("ratios"))
        ratios = opt["ratios"].get<std::vector<double>>();
      if (opt.contains("models"))
        models = opt["models"].get<std::vector<std::string>>();
      NoiseReport rep = noise_robustness<float>(cfg, s->splits, ratios, models);
      write_noise_report(rep, out_dir);
    } else if (std::strcmp(kind, "sparsity") == 0) {
      std::vector<int> ub{10, 20, 40}, ib{5, 10, 20};
      if (opt.contains("user_boundaries"))
        ub = opt["user_boundaries"].get<std::vector<int>>();
      if (opt.contains("item_boundaries"))
        ib = opt["item_boundaries"].get<std::vector<int>>();
      FitResult<float> res = fit<float>(cfg, s->splits);
      NoGradGuard ng;
      InteractionGraph g = build_graph(s->splits.train);
      EmbeddingState<float> snap =
          propagate(g, res.state.main_user, res.state.main_item, cfg.L,
                    cfg.propagation_mode());
      SparsityReport rep;
      SparsityReport ur = sparsity_report(snap.final_user, snap.final_item,
                                          s->splits, ub, Axis::User,
                                          cfg.threads);
      SparsityReport ir = sparsity_report(snap.final_user, snap.final_item,
                                          s->splits, ib, Axis::Item,
                                          cfg.threads);
      rep.rows = std::move(ur.rows);
      rep.rows.insert(rep.rows.end(), ir.rows.begin(), ir.rows.end());
      write_sparsity_report(rep, out_dir);
    } else if (std::strcmp(kind, "sweep") == 0) {
      std::vector<double> grid{1, 1e-1, 1e-2, 1e-3, 1e-4};
      if (opt.contains("grid")) grid = opt["grid"].get<std::vector<double>>();
      SweepReport rep = lambda1_sweep<float>(cfg, s->splits, grid);
      write_sweep_report(rep, out_dir);
    } else {
      throw UsageError(std::string("unknown experiment kind: ") + kind);
    }
  });
}

}  // extern "C"
