#include "adagcl/interactions.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "adagcl/rng.hpp"

namespace adagcl {

namespace fs = std::filesystem;

std::vector<std::int32_t> InteractionTable::user_degrees() const {
  std::vector<std::int32_t> d(user_count, 0);
  for (const auto& [u, v] : records) d[u]++;
  return d;
}

std::vector<std::int32_t> InteractionTable::item_degrees() const {
  std::vector<std::int32_t> d(item_count, 0);
  for (const auto& [u, v] : records) d[v]++;
  return d;
}

void InteractionTable::validate() const {
  for (const auto& [u, v] : records) {
    if (u < 0 || u >= user_count || v < 0 || v >= item_count)
      throw DataError("interaction index out of range");
  }
  for (std::size_t i = 1; i < records.size(); ++i)
    if (records[i] <= records[i - 1])
      throw DataError("interaction records not sorted/unique");
}

InteractionTable table_from_pairs(
    std::int32_t users, std::int32_t items,
    std::vector<std::pair<std::int32_t, std::int32_t>> pairs) {
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  InteractionTable t;
  t.user_count = users;
  t.item_count = items;
  t.records = std::move(pairs);
  t.validate();
  return t;
}

namespace {

bool is_blank_or_comment(const std::string& line) {
  for (char c : line) {
    if (c == '#') return true;
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

}  // namespace

InteractionTable load_interactions(const std::string& path,
                                   const std::string& format) {
  const bool skip_header = format == "tsv_header";
  if (format != "tsv" && !skip_header)
    throw UsageError("unknown input format: " + format);
  std::ifstream in(path);
  if (!in) throw DataError("cannot open interactions file: " + path);

  std::unordered_map<std::string, std::int32_t> user_index, item_index;
  std::vector<std::string> user_ids, item_ids;
  std::vector<std::pair<std::int32_t, std::int32_t>> pairs;

  std::string line;
  std::size_t lineno = 0;
  bool header_pending = skip_header;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_blank_or_comment(line)) continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    std::size_t tab1 = line.find('\t');
    if (tab1 == std::string::npos)
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": malformed line (expected user<TAB>item)");
    std::size_t tab2 = line.find('\t', tab1 + 1);
    std::string u = line.substr(0, tab1);
    std::string v = tab2 == std::string::npos
                        ? line.substr(tab1 + 1)
                        : line.substr(tab1 + 1, tab2 - tab1 - 1);
    if (u.empty() || v.empty())
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": malformed line (empty field)");
    auto [uit, unew] = user_index.try_emplace(
        u, static_cast<std::int32_t>(user_ids.size()));
    if (unew) user_ids.push_back(u);
    auto [vit, vnew] = item_index.try_emplace(
        v, static_cast<std::int32_t>(item_ids.size()));
    if (vnew) item_ids.push_back(v);
    pairs.emplace_back(uit->second, vit->second);
  }
  if (pairs.empty()) throw DataError("empty dataset: " + path);

  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

  InteractionTable t;
  t.user_count = static_cast<std::int32_t>(user_ids.size());
  t.item_count = static_cast<std::int32_t>(item_ids.size());
  t.records = std::move(pairs);
  t.user_ids = std::move(user_ids);
  t.item_ids = std::move(item_ids);
  return t;
}

InteractionTable k_core_filter(const InteractionTable& table, int k) {
  if (k < 1) throw UsageError("k_core_filter: k must be >= 1");
  auto ud = table.user_degrees();
  auto vd = table.item_degrees();
  std::vector<char> u_alive(table.user_count, 1), v_alive(table.item_count, 1);
  auto pairs = table.records;

  bool changed = true;
  while (changed) {
    changed = false;
    for (std::int32_t u = 0; u < table.user_count; ++u)
      if (u_alive[u] && ud[u] < k) {
        u_alive[u] = 0;
        changed = true;
      }
    for (std::int32_t v = 0; v < table.item_count; ++v)
      if (v_alive[v] && vd[v] < k) {
        v_alive[v] = 0;
        changed = true;
      }
    if (!changed) break;
    std::fill(ud.begin(), ud.end(), 0);
    std::fill(vd.begin(), vd.end(), 0);
    for (const auto& [u, v] : pairs)
      if (u_alive[u] && v_alive[v]) {
        ud[u]++;
        vd[v]++;
      }
  }

  std::vector<std::int32_t> umap(table.user_count, -1),
      vmap(table.item_count, -1);
  InteractionTable out;
  for (std::int32_t u = 0; u < table.user_count; ++u)
    if (u_alive[u] && ud[u] > 0) {
      umap[u] = out.user_count++;
      if (!table.user_ids.empty()) out.user_ids.push_back(table.user_ids[u]);
    }
  for (std::int32_t v = 0; v < table.item_count; ++v)
    if (v_alive[v] && vd[v] > 0) {
      vmap[v] = out.item_count++;
      if (!table.item_ids.empty()) out.item_ids.push_back(table.item_ids[v]);
    }
  for (const auto& [u, v] : pairs)
    if (umap[u] >= 0 && vmap[v] >= 0)
      out.records.emplace_back(umap[u], vmap[v]);
  if (out.records.empty())
    throw DataError("k_core_filter: filtering with k=" + std::to_string(k) +
                    " removed every interaction");
  std::sort(out.records.begin(), out.records.end());
  return out;
}

SplitSet split(const InteractionTable& table, std::array<double, 3> ratios,
               std::uint64_t seed, SplitMode mode) {
  const double total = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(total - 1.0) > 1e-9)
    throw UsageError("split: ratios must sum to 1");

  SplitSet s;
  s.seed = seed;
  s.ratios = ratios;
  for (InteractionTable* part : {&s.train, &s.validation, &s.test}) {
    part->user_count = table.user_count;
    part->item_count = table.item_count;
    part->user_ids = table.user_ids;
    part->item_ids = table.item_ids;
  }

  RngStream rng(seed, "split");
  if (mode == SplitMode::Global) {
    auto pairs = table.records;
    for (std::size_t i = pairs.size(); i > 1; --i)
      std::swap(pairs[i - 1], pairs[rng.next_below(i)]);
    const std::size_t n = pairs.size();
    std::size_t n_tr = static_cast<std::size_t>(ratios[0] * n + 1e-9);
    std::size_t n_va = static_cast<std::size_t>(ratios[1] * n + 1e-9);
    for (std::size_t i = 0; i < n; ++i) {
      if (i < n_tr)
        s.train.records.push_back(pairs[i]);
      else if (i < n_tr + n_va)
        s.validation.records.push_back(pairs[i]);
      else
        s.test.records.push_back(pairs[i]);
    }
  } else {
    // group records by user (records are sorted by user already)
    std::size_t i = 0;
    std::vector<std::int32_t> items;
    while (i < table.records.size()) {
      const std::int32_t u = table.records[i].first;
      items.clear();
      while (i < table.records.size() && table.records[i].first == u)
        items.push_back(table.records[i++].second);
      for (std::size_t j = items.size(); j > 1; --j)
        std::swap(items[j - 1], items[rng.next_below(j)]);
      const std::size_t n = items.size();
      std::size_t n_tr = static_cast<std::size_t>(ratios[0] * n + 1e-9);
      std::size_t n_va = static_cast<std::size_t>(ratios[1] * n + 1e-9);
      if (n_tr == 0) n_tr = 1;  // every active user keeps a training edge
      if (n_tr + n_va > n) n_va = n - n_tr;
      for (std::size_t j = 0; j < n; ++j) {
        if (j < n_tr)
          s.train.records.emplace_back(u, items[j]);
        else if (j < n_tr + n_va)
          s.validation.records.emplace_back(u, items[j]);
        else
          s.test.records.emplace_back(u, items[j]);
      }
    }
  }
  for (InteractionTable* part : {&s.train, &s.validation, &s.test})
    std::sort(part->records.begin(), part->records.end());
  return s;
}

namespace {

void write_part_tsv(const InteractionTable& t, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write split file: " + path);
  for (const auto& [u, v] : t.records) {
    if (!t.user_ids.empty())
      out << t.user_ids[u] << '\t' << t.item_ids[v] << '\n';
    else
      out << u << '\t' << v << '\n';
  }
}

}  // namespace

std::uint64_t checksum_bytes(const void* data, std::size_t n,
                             std::uint64_t seed) {
  // FNV-1a 64
  std::uint64_t h = seed;
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t checksum_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file for checksum: " + path);
  char buf[1 << 16];
  std::uint64_t h = 0xcbf29ce484222325ULL;
  while (in) {
    in.read(buf, sizeof(buf));
    h = checksum_bytes(buf, static_cast<std::size_t>(in.gcount()), h);
  }
  return h;
}

void save_split(const SplitSet& s, const std::string& dir) {
  fs::create_directories(dir);
  write_part_tsv(s.train, dir + "/train.tsv");
  write_part_tsv(s.validation, dir + "/validation.tsv");
  write_part_tsv(s.test, dir + "/test.tsv");

  nlohmann::json manifest;
  manifest["seed"] = s.seed;
  manifest["ratios"] = s.ratios;
  manifest["counts"] = {
      {"users", s.train.user_count},
      {"items", s.train.item_count},
      {"train", s.train.interaction_count()},
      {"validation", s.validation.interaction_count()},
      {"test", s.test.interaction_count()},
  };
  char hex[32];
  std::uint64_t combined = 0xcbf29ce484222325ULL;
  for (const char* name : {"train.tsv", "validation.tsv", "test.tsv"}) {
    const std::uint64_t h = checksum_file(dir + "/" + std::string(name));
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(h));
    manifest["file_checksums"][name] = hex;
    combined = checksum_bytes(&h, sizeof(h), combined);
  }
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(combined));
  manifest["checksum"] = hex;

  // id maps for round-tripping raw ids
  if (!s.train.user_ids.empty()) {
    nlohmann::json maps;
    maps["users"] = s.train.user_ids;
    maps["items"] = s.train.item_ids;
    std::ofstream mf(dir + "/id_maps.json");
    mf << maps.dump() << '\n';
  }
  std::ofstream out(dir + "/manifest.json");
  if (!out) throw DataError("cannot write split manifest in " + dir);
  out << manifest.dump(2) << '\n';
}

namespace {

InteractionTable read_part_tsv(const std::string& path,
                               std::unordered_map<std::string, std::int32_t>* umap,
                               std::unordered_map<std::string, std::int32_t>* vmap,
                               std::vector<std::string>* user_ids,
                               std::vector<std::string>* item_ids,
                               bool grow) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open split file: " + path);
  InteractionTable t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_blank_or_comment(line)) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw DataError(path + ":" + std::to_string(lineno) + ": malformed line");
    const std::string u = line.substr(0, tab), v = line.substr(tab + 1);
    auto ui = umap->find(u);
    if (ui == umap->end()) {
      if (!grow) throw DataError(path + ": unknown user id " + u);
      ui = umap->emplace(u, static_cast<std::int32_t>(user_ids->size())).first;
      user_ids->push_back(u);
    }
    auto vi = vmap->find(v);
    if (vi == vmap->end()) {
      if (!grow) throw DataError(path + ": unknown item id " + v);
      vi = vmap->emplace(v, static_cast<std::int32_t>(item_ids->size())).first;
      item_ids->push_back(v);
    }
    t.records.emplace_back(ui->second, vi->second);
  }
  return t;
}

}  // namespace

SplitSet load_split(const std::string& dir) {
  std::ifstream mf(dir + "/manifest.json");
  if (!mf) throw DataError("missing split manifest in " + dir);
  nlohmann::json manifest = nlohmann::json::parse(mf);

  std::unordered_map<std::string, std::int32_t> umap, vmap;
  std::vector<std::string> user_ids, item_ids;
  bool grow = true;
  if (fs::exists(dir + "/id_maps.json")) {
    std::ifstream im(dir + "/id_maps.json");
    nlohmann::json maps = nlohmann::json::parse(im);
    user_ids = maps.at("users").get<std::vector<std::string>>();
    item_ids = maps.at("items").get<std::vector<std::string>>();
    for (std::size_t i = 0; i < user_ids.size(); ++i)
      umap.emplace(user_ids[i], static_cast<std::int32_t>(i));
    for (std::size_t i = 0; i < item_ids.size(); ++i)
      vmap.emplace(item_ids[i], static_cast<std::int32_t>(i));
    grow = false;
  }

  SplitSet s;
  s.train = read_part_tsv(dir + "/train.tsv", &umap, &vmap, &user_ids,
                          &item_ids, grow);
  s.validation = read_part_tsv(dir + "/validation.tsv", &umap, &vmap,
                               &user_ids, &item_ids, grow);
  s.test = read_part_tsv(dir + "/test.tsv", &umap, &vmap, &user_ids,
                         &item_ids, grow);
  s.seed = manifest.at("seed").get<std::uint64_t>();
  s.ratios = manifest.at("ratios").get<std::array<double, 3>>();

  const auto users = static_cast<std::int32_t>(user_ids.size());
  const auto items = static_cast<std::int32_t>(item_ids.size());
  for (InteractionTable* part : {&s.train, &s.validation, &s.test}) {
    part->user_count = users;
    part->item_count = items;
    part->user_ids = user_ids;
    part->item_ids = item_ids;
    std::sort(part->records.begin(), part->records.end());
  }
  return s;
}

std::vector<int> group_by_interactions(const InteractionTable& train,
                                       const std::vector<int>& boundaries,
                                       Axis axis) {
  for (std::size_t i = 1; i < boundaries.size(); ++i)
    if (boundaries[i] <= boundaries[i - 1])
      throw UsageError("group boundaries must be strictly ascending");
  const auto deg =
      axis == Axis::User ? train.user_degrees() : train.item_degrees();
  std::vector<int> group(deg.size());
  for (std::size_t e = 0; e < deg.size(); ++e) {
    int g = 0;
    while (g < static_cast<int>(boundaries.size()) && deg[e] >= boundaries[g])
      ++g;
    group[e] = g;
  }
  return group;
}

}  // namespace adagcl
