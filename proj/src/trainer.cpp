#include "adagcl/trainer.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

namespace adagcl {

void TrainConfig::validate() const {
  if (L < 0) throw UsageError("config: L must be >= 0");
  if (d < 1) throw UsageError("config: d must be >= 1");
  if (!(tau > 0)) throw UsageError("config: tau must be > 0");
  if (lambda1 < 0 || lambda2 < 0)
    throw UsageError("config: lambda weights must be >= 0");
  if (!(learning_rate > 0)) throw UsageError("config: learning_rate must be > 0");
  if (batch_size < 1) throw UsageError("config: batch_size must be >= 1");
  if (max_epochs < 0) throw UsageError("config: max_epochs must be >= 0");
  if (edge_drop_ratio < 0 || edge_drop_ratio >= 1)
    throw UsageError("config: edge_drop_ratio must be in [0,1)");
  if (lc_weight < 0) throw UsageError("config: lc_weight must be >= 0");
  if (neg_ratio < 1) throw UsageError("config: neg_ratio must be >= 1");
  propagation_from_string(propagation);
  hard_concrete();
}

std::atomic<bool>& stop_requested() {
  static std::atomic<bool> flag{false};
  return flag;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw UsageError("config: boolean expected for " + key + ", got " + v);
}

}  // namespace

void apply_override(TrainConfig& cfg, const std::string& key,
                    const std::string& value) {
  const std::string v = trim(value);
  try {
    if (key == "L") cfg.L = std::stoi(v);
    else if (key == "d") cfg.d = std::stoi(v);
    else if (key == "tau") cfg.tau = std::stod(v);
    else if (key == "lambda1") cfg.lambda1 = std::stod(v);
    else if (key == "lambda2") cfg.lambda2 = std::stod(v);
    else if (key == "learning_rate") cfg.learning_rate = std::stod(v);
    else if (key == "batch_size") cfg.batch_size = std::stoi(v);
    else if (key == "max_epochs") cfg.max_epochs = std::stoi(v);
    else if (key == "patience") cfg.patience = std::stoi(v);
    else if (key == "seed") cfg.seed = std::stoull(v);
    else if (key == "variant") cfg.variant = variant_from_string(v);
    else if (key == "edge_drop_ratio") cfg.edge_drop_ratio = std::stod(v);
    else if (key == "lc_weight") cfg.lc_weight = std::stod(v);
    else if (key == "neg_ratio") cfg.neg_ratio = std::stoi(v);
    else if (key == "eval_every") cfg.eval_every = std::stoi(v);
    else if (key == "propagation") cfg.propagation = v;
    else if (key == "hc_beta") cfg.hc_beta = std::stod(v);
    else if (key == "hc_gamma") cfg.hc_gamma = std::stod(v);
    else if (key == "hc_zeta") cfg.hc_zeta = std::stod(v);
    else if (key == "ssl_full_batch") cfg.ssl_full_batch = parse_bool(v, key);
    else if (key == "gen_reuse_batch") cfg.gen_reuse_batch = parse_bool(v, key);
    else if (key == "vgae_add_edges") cfg.vgae_add_edges = parse_bool(v, key);
    else if (key == "threads") cfg.threads = std::stoi(v);
    else throw UsageError("config: unknown key " + key);
  } catch (const std::invalid_argument&) {
    throw UsageError("config: cannot parse value for " + key + ": " + v);
  } catch (const std::out_of_range&) {
    throw UsageError("config: value out of range for " + key + ": " + v);
  }
}

TrainConfig parse_train_config(const std::string& text) {
  TrainConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError("config line " + std::to_string(lineno) +
                       ": expected key = value");
    apply_override(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  cfg.validate();
  return cfg;
}

TrainConfig load_train_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_train_config(ss.str());
}

std::string to_text(const TrainConfig& c) {
  std::ostringstream o;
  char buf[64];
  const auto num = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  o << "L = " << c.L << '\n'
    << "d = " << c.d << '\n'
    << "tau = " << num(c.tau) << '\n'
    << "lambda1 = " << num(c.lambda1) << '\n'
    << "lambda2 = " << num(c.lambda2) << '\n'
    << "learning_rate = " << num(c.learning_rate) << '\n'
    << "batch_size = " << c.batch_size << '\n'
    << "max_epochs = " << c.max_epochs << '\n'
    << "patience = " << c.patience << '\n'
    << "seed = " << c.seed << '\n'
    << "variant = " << to_string(c.variant) << '\n'
    << "edge_drop_ratio = " << num(c.edge_drop_ratio) << '\n'
    << "lc_weight = " << num(c.lc_weight) << '\n'
    << "neg_ratio = " << c.neg_ratio << '\n'
    << "eval_every = " << c.eval_every << '\n'
    << "propagation = " << c.propagation << '\n'
    << "hc_beta = " << num(c.hc_beta) << '\n'
    << "hc_gamma = " << num(c.hc_gamma) << '\n'
    << "hc_zeta = " << num(c.hc_zeta) << '\n'
    << "ssl_full_batch = " << (c.ssl_full_batch ? "true" : "false") << '\n'
    << "gen_reuse_batch = " << (c.gen_reuse_batch ? "true" : "false") << '\n'
    << "vgae_add_edges = " << (c.vgae_add_edges ? "true" : "false") << '\n'
    << "threads = " << c.threads << '\n';
  return o.str();
}

// ---------------------------------------------------------------------------

TripletSampler::TripletSampler(const InteractionTable& train,
                               std::uint64_t seed, std::string_view stream_name)
    : train_(train), rng_(seed, stream_name) {
  user_items_.resize(train.user_count);
  for (const auto& [u, v] : train.records) user_items_[u].push_back(v);
  for (auto& items : user_items_) std::sort(items.begin(), items.end());
}

TripletBatch TripletSampler::sample(std::int32_t batch_size) {
  if (train_.records.empty())
    throw DataError("sample_triplets: empty training table");
  TripletBatch b;
  b.user.reserve(batch_size);
  b.pos.reserve(batch_size);
  b.neg.reserve(batch_size);
  const std::int64_t n = train_.interaction_count();
  std::int32_t emitted = 0;
  while (emitted < batch_size) {
    const auto& [u, i] =
        train_.records[static_cast<std::size_t>(rng_.next_below(n))];
    const auto& owned = user_items_[u];
    if (static_cast<std::int32_t>(owned.size()) >= train_.item_count) {
      if (skipped_full_users_++ == 0)
        std::fprintf(stderr,
                     "[adagcl] warning: user %d interacts with every item; "
                     "skipped in negative sampling\n", u);
      continue;
    }
    std::int32_t j;
    do {
      j = static_cast<std::int32_t>(rng_.next_below(train_.item_count));
    } while (std::binary_search(owned.begin(), owned.end(), j));
    b.user.push_back(u);
    b.pos.push_back(i);
    b.neg.push_back(j);
    ++emitted;
  }
  return b;
}

// ---------------------------------------------------------------------------

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return std::string(buf);
}

}  // namespace

void write_history_csv(const History& h, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write history csv: " + path);
  out << "epoch,bpr,ssl,upper,kl,dis,gen_bpr,gen_total,l0,den_bpr,den_total,"
         "lower";
  for (std::int32_t l = 1; l <= h.layer_count; ++l) out << ",kept_l" << l;
  out << ",val_recall20,val_ndcg20\n";
  for (const auto& r : h.rows) {
    out << r.epoch << ',' << fmt(r.mean.bpr) << ',' << fmt(r.mean.ssl) << ','
        << fmt(r.mean.upper) << ',' << fmt(r.mean.kl) << ',' << fmt(r.mean.dis)
        << ',' << fmt(r.mean.gen_bpr) << ',' << fmt(r.mean.gen_total) << ','
        << fmt(r.mean.l0) << ',' << fmt(r.mean.den_bpr) << ','
        << fmt(r.mean.den_total) << ',' << fmt(r.mean.lower);
    for (std::int32_t l = 0; l < h.layer_count; ++l) {
      out << ',';
      if (l < static_cast<std::int32_t>(r.mean.kept_fraction.size()))
        out << fmt(r.mean.kept_fraction[l]);
    }
    out << ',';
    if (r.evaluated) out << fmt(r.val_recall20);
    out << ',';
    if (r.evaluated) out << fmt(r.val_ndcg20);
    out << '\n';
  }
}

void write_history_json(const History& h, const TrainConfig& cfg,
                        const std::string& path) {
  nlohmann::json j;
  j["epochs_run"] = h.rows.size();
  j["best_epoch"] = h.best_epoch;
  j["best_val_recall20"] = h.best_val_recall20;
  j["stopped_early"] = h.stopped_early;
  j["config"] = to_text(cfg);
  if (!h.rows.empty()) {
    const auto& last = h.rows.back();
    j["final"] = {{"epoch", last.epoch},
                  {"bpr", last.mean.bpr},
                  {"upper", last.mean.upper},
                  {"lower", last.mean.lower}};
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot write history json: " + path);
  out << j.dump(2) << '\n';
}

}  // namespace adagcl
