// Command-line front end. Talks to the core exclusively through the C API
// in adagcl.h; the shared library owns all numerical work.

#include <csignal>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "adagcl.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void on_sigint(int) { adagcl_request_stop(); }

std::string now_string() {
  char buf[32];
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  localtime_r(&t, &tm);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%S", &tm);
  return buf;
}

std::string timestamp_slug() {
  char buf[32];
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  localtime_r(&t, &tm);
  std::strftime(buf, sizeof(buf), "%Y%m%d-%H%M%S", &tm);
  return buf;
}

// Relative output paths are rooted at $ADAGCL_OUTPUT_ROOT when set.
std::string resolve_out(const std::string& dir) {
  const char* root = std::getenv("ADAGCL_OUTPUT_ROOT");
  if (!root || !*root || dir.empty() || fs::path(dir).is_absolute())
    return dir;
  return (fs::path(root) / dir).string();
}

std::string file_checksum_or(const std::string& path) {
  char hex[17];
  if (fs::exists(path) && !fs::is_directory(path) &&
      adagcl_checksum_file(path.c_str(), hex, sizeof(hex)) == ADAGCL_OK)
    return hex;
  return "";
}

json splits_checksums(const std::string& dir) {
  json out = json::object();
  for (const char* f : {"train.tsv", "validation.tsv", "test.tsv"}) {
    const std::string cs = file_checksum_or(dir + "/" + f);
    if (!cs.empty()) out[f] = cs;
  }
  return out;
}

// Written before work starts, finalized (with status) on exit.
class RunManifest {
 public:
  RunManifest(const std::string& out_dir, const std::string& command,
              int argc, char** argv)
      : path_(out_dir + "/run_manifest.json") {
    fs::create_directories(out_dir);
    doc_["command"] = command;
    json args = json::array();
    for (int i = 0; i < argc; ++i) args.push_back(argv[i]);
    doc_["argv"] = args;
    doc_["version"] = adagcl_version();
    doc_["started_at"] = now_string();
    doc_["output_dir"] = out_dir;
    doc_["status"] = "running";
    flush();
  }

  json& doc() { return doc_; }

  void finalize(int code) {
    doc_["finished_at"] = now_string();
    doc_["exit_code"] = code;
    doc_["status"] = code == 0
                         ? "success"
                         : (interrupted_ ? "interrupted" : "failure");
    flush();
  }

  void mark_interrupted() { interrupted_ = true; }

  void flush() {
    std::ofstream out(path_);
    out << doc_.dump(2) << '\n';
  }

 private:
  std::string path_;
  json doc_;
  bool interrupted_ = false;
};

int fail(int code, const std::string& context) {
  std::fprintf(stderr, "adagcl: %s: %s\n", context.c_str(),
               adagcl_last_error());
  return code;
}

struct ConfigArgs {
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> overrides;

  // config file first, CLI overrides after (later keys win)
  std::string build_text() const {
    std::ostringstream text;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw CLI::ValidationError("--config: cannot open " + config_path);
      text << in.rdbuf() << '\n';
    }
    for (const auto& [k, v] : overrides) text << k << " = " << v << '\n';
    return text.str();
  }
};

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "L", "d", "tau", "lambda1", "lambda2", "learning_rate", "batch_size",
      "max_epochs", "patience", "seed", "variant", "edge_drop_ratio",
      "lc_weight", "neg_ratio", "eval_every", "propagation", "hc_beta",
      "hc_gamma", "hc_zeta", "ssl_full_batch", "gen_reuse_batch",
      "vgae_add_edges", "threads"};
  return keys;
}

void add_config_options(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("--config", args.config_path,
                  "config file (flat key = value lines)");
  for (const std::string& key : config_keys()) {
    cmd->add_option_function<std::string>(
        "--" + key,
        [&args, key](const std::string& v) {
          args.overrides.emplace_back(key, v);
        },
        "override config key " + key);
  }
}

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGINT, on_sigint);

  CLI::App app{"adaptive graph contrastive learning recommender"};
  app.require_subcommand(1);

  // ---- prepare -------------------------------------------------------------
  auto* prepare = app.add_subcommand(
      "prepare", "load interactions, split, and persist artifacts");
  std::string p_input, p_format = "tsv", p_ratios = "0.7,0.2,0.1";
  std::string p_mode = "per_user", p_out;
  int p_kcore = 0;
  std::uint64_t p_seed = 42;
  prepare->add_option("--input", p_input, "interactions file")->required();
  prepare->add_option("--format", p_format, "tsv | tsv_header");
  prepare->add_option("--k-core", p_kcore, "k-core filter (0 = off)");
  prepare->add_option("--ratios", p_ratios, "train,validation,test");
  prepare->add_option("--split-seed", p_seed, "split seed");
  prepare->add_option("--split-mode", p_mode, "per_user | global");
  prepare->add_option("--out", p_out, "output directory")->required();

  // ---- train ---------------------------------------------------------------
  auto* train = app.add_subcommand("train", "train a model");
  std::string t_splits, t_out;
  ConfigArgs t_cfg;
  train->add_option("--splits", t_splits, "prepared split directory")
      ->required();
  train->add_option("--out", t_out, "output directory")->required();
  add_config_options(train, t_cfg);

  // ---- eval ----------------------------------------------------------------
  auto* evalc = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string e_ckpt, e_splits, e_out, e_mode = "test";
  std::vector<int> e_cutoffs{20, 40};
  ConfigArgs e_cfg;
  evalc->add_option("--checkpoint", e_ckpt, "checkpoint file")->required();
  evalc->add_option("--splits", e_splits, "prepared split directory")
      ->required();
  evalc->add_option("--out", e_out, "output directory")->required();
  evalc->add_option("--mode", e_mode, "validation | test");
  evalc->add_option("--cutoffs", e_cutoffs, "ranking cutoffs");
  evalc->add_option("--config", e_cfg.config_path,
                    "config override (defaults to the embedded one)");

  // ---- experiment ----------------------------------------------------------
  auto* exp = app.add_subcommand("experiment",
                                 "noise / sparsity / sweep harnesses");
  std::string x_kind, x_splits, x_out;
  ConfigArgs x_cfg;
  std::vector<double> x_ratios, x_grid;
  std::vector<std::string> x_models;
  std::vector<int> x_ub, x_ib;
  exp->add_option("--kind", x_kind, "noise | sparsity | sweep")->required();
  exp->add_option("--splits", x_splits, "prepared split directory")
      ->required();
  exp->add_option("--out", x_out, "output directory")->required();
  exp->add_option("--ratios", x_ratios, "noise ratios");
  exp->add_option("--models", x_models, "noise models");
  exp->add_option("--grid", x_grid, "lambda1 grid");
  exp->add_option("--user-boundaries", x_ub, "sparsity user boundaries");
  exp->add_option("--item-boundaries", x_ib, "sparsity item boundaries");
  add_config_options(exp, x_cfg);

  // ---- export --------------------------------------------------------------
  auto* exportc = app.add_subcommand("export", "export embeddings as CSV");
  std::string ex_ckpt, ex_splits, ex_which = "main", ex_out;
  std::uint64_t ex_seed = 42;
  exportc->add_option("--checkpoint", ex_ckpt, "checkpoint file")->required();
  exportc->add_option("--splits", ex_splits, "prepared split directory")
      ->required();
  exportc->add_option("--which", ex_which, "main | view1 | view2");
  exportc->add_option("--seed", ex_seed, "view sampling seed");
  exportc->add_option("--out", ex_out, "output csv path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (prepare->parsed()) {
      const std::string out = resolve_out(p_out);
      const std::string input_checksum = file_checksum_or(p_input);
      json params = {{"input", p_input},         {"input_checksum", input_checksum},
                     {"format", p_format},       {"k_core", p_kcore},
                     {"ratios", p_ratios},       {"seed", p_seed},
                     {"split_mode", p_mode}};
      const std::string params_path = out + "/prepare_params.json";
      if (fs::exists(params_path) && fs::exists(out + "/manifest.json")) {
        std::ifstream in(params_path);
        json prev = json::parse(in, nullptr, false);
        if (prev == params) {
          std::printf("prepare: %s is up-to-date\n", out.c_str());
          return 0;
        }
      }
      if (input_checksum.empty())
        return fail(ADAGCL_ERR_DATA, "cannot read " + p_input);
      RunManifest manifest(out, "prepare", argc, argv);
      manifest.doc()["params"] = params;
      const int rc =
          adagcl_prepare(p_input.c_str(), p_format.c_str(), p_kcore,
                         p_ratios.c_str(), p_seed, p_mode.c_str(), out.c_str());
      if (rc == ADAGCL_OK) {
        std::ofstream pf(params_path);
        pf << params.dump(2) << '\n';
        manifest.doc()["split_checksums"] = splits_checksums(out);
      }
      manifest.finalize(rc);
      return rc == ADAGCL_OK ? 0 : fail(rc, "prepare");
    }

    if (train->parsed()) {
      const std::string out = resolve_out(t_out);
      const std::string config_text = t_cfg.build_text();
      RunManifest manifest(out, "train", argc, argv);
      manifest.doc()["splits_dir"] = t_splits;
      manifest.doc()["split_checksums"] = splits_checksums(t_splits);
      adagcl_splits* splits = adagcl_splits_open(t_splits.c_str());
      if (!splits) {
        manifest.finalize(ADAGCL_ERR_DATA);
        return fail(ADAGCL_ERR_DATA, "opening splits");
      }
      adagcl_model* model =
          adagcl_train(splits, config_text.c_str(), out.c_str());
      int rc = model ? ADAGCL_OK : ADAGCL_ERR_NUMERIC;
      if (model) {
        manifest.doc()["config"] = adagcl_model_config(model);
        std::ofstream cf(out + "/config.txt");
        cf << adagcl_model_config(model);
        adagcl_model_close(model);
      }
      adagcl_splits_close(splits);
      manifest.finalize(rc);
      return rc == ADAGCL_OK ? 0 : fail(rc, "train");
    }

    if (evalc->parsed()) {
      const std::string out = resolve_out(e_out);
      RunManifest manifest(out, "eval", argc, argv);
      manifest.doc()["checkpoint"] = e_ckpt;
      manifest.doc()["checkpoint_checksum"] = file_checksum_or(e_ckpt);
      manifest.doc()["mode"] = e_mode;
      adagcl_splits* splits = adagcl_splits_open(e_splits.c_str());
      if (!splits) {
        manifest.finalize(ADAGCL_ERR_DATA);
        return fail(ADAGCL_ERR_DATA, "opening splits");
      }
      std::string cfg_text;
      if (!e_cfg.config_path.empty()) cfg_text = e_cfg.build_text();
      adagcl_model* model = adagcl_model_load(
          e_ckpt.c_str(), cfg_text.empty() ? nullptr : cfg_text.c_str());
      if (!model) {
        adagcl_splits_close(splits);
        manifest.finalize(ADAGCL_ERR_DATA);
        return fail(ADAGCL_ERR_DATA, "loading checkpoint");
      }
      const std::string js = out + "/eval_report.json";
      const std::string cs = out + "/eval_report.csv";
      const int rc = adagcl_evaluate(model, splits, e_mode.c_str(),
                                     e_cutoffs.data(),
                                     static_cast<int>(e_cutoffs.size()),
                                     js.c_str(), cs.c_str());
      adagcl_model_close(model);
      adagcl_splits_close(splits);
      manifest.finalize(rc);
      if (rc == ADAGCL_OK) std::printf("eval: wrote %s\n", js.c_str());
      return rc == ADAGCL_OK ? 0 : fail(rc, "eval");
    }

    if (exp->parsed()) {
      const std::string base = resolve_out(x_out);
      const std::string out =
          (fs::path(base) / (x_kind + "_" + timestamp_slug())).string();
      const std::string config_text = x_cfg.build_text();
      RunManifest manifest(out, "experiment", argc, argv);
      manifest.doc()["kind"] = x_kind;
      manifest.doc()["config"] = config_text;
      manifest.doc()["split_checksums"] = splits_checksums(x_splits);
      json options = json::object();
      if (!x_ratios.empty()) options["ratios"] = x_ratios;
      if (!x_models.empty()) options["models"] = x_models;
      if (!x_grid.empty()) options["grid"] = x_grid;
      if (!x_ub.empty()) options["user_boundaries"] = x_ub;
      if (!x_ib.empty()) options["item_boundaries"] = x_ib;
      manifest.doc()["options"] = options;
      manifest.flush();
      adagcl_splits* splits = adagcl_splits_open(x_splits.c_str());
      if (!splits) {
        manifest.finalize(ADAGCL_ERR_DATA);
        return fail(ADAGCL_ERR_DATA, "opening splits");
      }
      const std::string opt_text = options.dump();
      const int rc =
          adagcl_experiment(splits, x_kind.c_str(), config_text.c_str(),
                            opt_text.c_str(), out.c_str());
      adagcl_splits_close(splits);
      manifest.finalize(rc);
      if (rc == ADAGCL_OK) std::printf("experiment: wrote %s\n", out.c_str());
      return rc == ADAGCL_OK ? 0 : fail(rc, "experiment");
    }

    if (exportc->parsed()) {
      const std::string out = resolve_out(ex_out);
      if (!out.empty()) {
        const fs::path parent = fs::path(out).parent_path();
        if (!parent.empty()) fs::create_directories(parent);
      }
      adagcl_splits* splits = adagcl_splits_open(ex_splits.c_str());
      if (!splits) return fail(ADAGCL_ERR_DATA, "opening splits");
      adagcl_model* model = adagcl_model_load(ex_ckpt.c_str(), nullptr);
      if (!model) {
        adagcl_splits_close(splits);
        return fail(ADAGCL_ERR_DATA, "loading checkpoint");
      }
      const int rc = adagcl_export_embeddings(model, splits, ex_which.c_str(),
                                              ex_seed, out.c_str());
      adagcl_model_close(model);
      adagcl_splits_close(splits);
      if (rc == ADAGCL_OK) std::printf("export: wrote %s\n", out.c_str());
      return rc == ADAGCL_OK ? 0 : fail(rc, "export");
    }
  } catch (const CLI::ValidationError& e) {
    std::fprintf(stderr, "adagcl: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "adagcl: %s\n", e.what());
    return 2;
  }
  return 1;
}
