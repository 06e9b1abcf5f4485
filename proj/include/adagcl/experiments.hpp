#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "adagcl/evalx.hpp"
#include "adagcl/trainer.hpp"

namespace adagcl {

// ---------------------------------------------------------------------------
// Minimal static SVG line chart for degradation curves and sweep results.
// ---------------------------------------------------------------------------

struct ChartSeries {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

void write_line_chart(const std::string& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<ChartSeries>& series);

// ---------------------------------------------------------------------------

struct NoiseRow {
  std::string model;
  double ratio = 0;
  double recall20 = 0;
  double ndcg20 = 0;
  double relative_drop = 0;  // (clean - noisy) / clean, recall@20
};

struct NoiseReport {
  std::vector<NoiseRow> rows;
};

void write_noise_report(const NoiseReport& rep, const std::string& dir);

// Retrains each model on noise-corrupted training data (validation and test
// splits untouched) and reports absolute metrics plus relative degradation
// against that model's clean run.
template <class T>
NoiseReport noise_robustness(const TrainConfig& cfg, const SplitSet& splits,
                             const std::vector<double>& ratios,
                             const std::vector<std::string>& models) {
  NoiseReport rep;
  const InteractionGraph clean = build_graph(splits.train);
  for (const std::string& model : models) {
    TrainConfig mcfg = cfg;
    if (model == "lightgcn") {
      mcfg.lambda1 = 0;
      mcfg.variant = Variant::Full;
    } else if (model == "edge_drop") {
      mcfg.variant = Variant::EdgeDrop;
    } else if (model == "full") {
      mcfg.variant = Variant::Full;
    } else {
      throw UsageError("noise_robustness: unknown model " + model);
    }
    double clean_recall = 0;
    std::vector<double> all_ratios = ratios;
    if (all_ratios.empty() || all_ratios.front() != 0.0)
      all_ratios.insert(all_ratios.begin(), 0.0);
    for (double ratio : all_ratios) {
      SplitSet corrupted = splits;
      if (ratio > 0) {
        InteractionGraph noisy = inject_noise(clean, ratio, cfg.seed);
        std::vector<std::pair<std::int32_t, std::int32_t>> recs;
        recs.reserve(static_cast<std::size_t>(noisy.edge_count()));
        for (std::int64_t e = 0; e < noisy.edge_count(); ++e)
          recs.push_back(noisy.edge(e));
        corrupted.train = table_from_pairs(splits.train.user_count,
                                           splits.train.item_count,
                                           std::move(recs));
      }
      FitResult<T> fitres = fit<T>(mcfg, corrupted);
      NoGradGuard ng;
      InteractionGraph g = build_graph(corrupted.train);
      EmbeddingState<T> snap =
          propagate(g, fitres.state.main_user, fitres.state.main_item, mcfg.L,
                    mcfg.propagation_mode());
      EvalReport er = evaluate(snap.final_user, snap.final_item, splits,
                               EvalMode::Test, {20}, cfg.threads);
      NoiseRow row;
      row.model = model;
      row.ratio = ratio;
      row.recall20 = er.recall.at(20);
      row.ndcg20 = er.ndcg.at(20);
      if (ratio == 0.0) {
        clean_recall = row.recall20;
        row.relative_drop = 0.0;
      } else {
        row.relative_drop =
            clean_recall > 0 ? (clean_recall - row.recall20) / clean_recall
                             : 0.0;
      }
      rep.rows.push_back(std::move(row));
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------

struct SparsityRow {
  std::string axis;
  int group = 0;
  std::string range;       // e.g. "[10,20)"
  std::int64_t entities = 0;
  std::int64_t evaluable_users = 0;
  double recall20 = 0;
  double ndcg20 = 0;
};

struct SparsityReport {
  std::vector<SparsityRow> rows;
};

void write_sparsity_report(const SparsityReport& rep, const std::string& dir);

inline std::string group_range_label(const std::vector<int>& boundaries,
                                     int group) {
  const std::string lo = group == 0 ? "0" : std::to_string(boundaries[group - 1]);
  const std::string hi = group < static_cast<int>(boundaries.size())
                             ? std::to_string(boundaries[group])
                             : "inf";
  return "[" + lo + "," + hi + ")";
}

template <class T>
SparsityReport sparsity_report(const Tensor<T>& final_user,
                               const Tensor<T>& final_item,
                               const SplitSet& splits,
                               const std::vector<int>& boundaries, Axis axis,
                               int threads = 1) {
  SparsityReport rep;
  const auto groups = group_by_interactions(splits.train, boundaries, axis);
  const int n_groups = static_cast<int>(boundaries.size()) + 1;
  const char* axis_name = axis == Axis::User ? "user" : "item";

  if (axis == Axis::User) {
    EvalReport er = evaluate(final_user, final_item, splits, EvalMode::Test,
                             {20}, threads);
    for (int gidx = 0; gidx < n_groups; ++gidx) {
      SparsityRow row;
      row.axis = axis_name;
      row.group = gidx;
      row.range = group_range_label(boundaries, gidx);
      for (int g : groups)
        if (g == gidx) ++row.entities;
      double rs = 0, ns = 0;
      std::int64_t cnt = 0;
      for (std::size_t k = 0; k < er.users.size(); ++k)
        if (groups[er.users[k]] == gidx) {
          rs += er.per_user_recall.at(20)[k];
          ns += er.per_user_ndcg.at(20)[k];
          ++cnt;
        }
      if (cnt == 0) continue;  // empty groups are absent, not zero
      row.evaluable_users = cnt;
      row.recall20 = rs / static_cast<double>(cnt);
      row.ndcg20 = ns / static_cast<double>(cnt);
      rep.rows.push_back(std::move(row));
    }
  } else {
    for (int gidx = 0; gidx < n_groups; ++gidx) {
      std::vector<char> filter(splits.train.item_count, 0);
      std::int64_t entities = 0;
      for (std::size_t v = 0; v < groups.size(); ++v)
        if (groups[v] == gidx) {
          filter[v] = 1;
          ++entities;
        }
      if (entities == 0) continue;
      SparsityRow row;
      row.axis = axis_name;
      row.group = gidx;
      row.range = group_range_label(boundaries, gidx);
      row.entities = entities;
      try {
        EvalReport er = evaluate(final_user, final_item, splits,
                                 EvalMode::Test, {20}, threads, &filter);
        row.evaluable_users = static_cast<std::int64_t>(er.users.size());
        row.recall20 = er.recall.at(20);
        row.ndcg20 = er.ndcg.at(20);
        rep.rows.push_back(std::move(row));
      } catch (const DataError&) {
        // no user has a relevant item in this group: absent row
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------

struct SweepRow {
  double lambda1 = 0;
  double recall20 = 0;
  double ndcg20 = 0;
  std::int32_t best_epoch = -1;
};

struct SweepReport {
  std::vector<SweepRow> rows;  // sorted by lambda1 descending
};

void write_sweep_report(const SweepReport& rep, const std::string& dir);

template <class T>
SweepReport lambda1_sweep(const TrainConfig& cfg, const SplitSet& splits,
                          std::vector<double> grid = {1, 1e-1, 1e-2, 1e-3,
                                                      1e-4}) {
  std::sort(grid.rbegin(), grid.rend());
  SweepReport rep;
  for (double l1 : grid) {
    TrainConfig c = cfg;
    c.lambda1 = l1;  // same seed for every grid point
    FitResult<T> res = fit<T>(c, splits);
    NoGradGuard ng;
    InteractionGraph g = build_graph(splits.train);
    EmbeddingState<T> snap = propagate(g, res.state.main_user,
                                       res.state.main_item, c.L,
                                       c.propagation_mode());
    EvalReport er = evaluate(snap.final_user, snap.final_item, splits,
                             EvalMode::Test, {20}, cfg.threads);
    SweepRow row;
    row.lambda1 = l1;
    row.recall20 = er.recall.at(20);
    row.ndcg20 = er.ndcg.at(20);
    row.best_epoch = res.history.best_epoch;
    rep.rows.push_back(row);
  }
  return rep;
}

// ---------------------------------------------------------------------------

void write_eval_report(const EvalReport& rep, const std::string& json_path,
                       const std::string& csv_path,
                       const nlohmann::json& metadata = {});

}  // namespace adagcl
