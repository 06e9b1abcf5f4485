#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "adagcl/common.hpp"

namespace adagcl {

// Deduplicated implicit-feedback table over dense zero-based indices.
// Raw IDs (when loaded from files) are retained for export.
struct InteractionTable {
  std::int32_t user_count = 0;
  std::int32_t item_count = 0;
  std::vector<std::pair<std::int32_t, std::int32_t>> records;  // sorted, unique
  std::vector<std::string> user_ids;  // index -> raw id; may be empty
  std::vector<std::string> item_ids;

  std::int64_t interaction_count() const {
    return static_cast<std::int64_t>(records.size());
  }
  std::vector<std::int32_t> user_degrees() const;
  std::vector<std::int32_t> item_degrees() const;
  void validate() const;
};

// Supported tags: "tsv" (strict user<TAB>item per line, '#' comments),
// "tsv_header" (same, first non-comment line skipped as a header).
InteractionTable load_interactions(const std::string& path,
                                   const std::string& format);

InteractionTable table_from_pairs(
    std::int32_t users, std::int32_t items,
    std::vector<std::pair<std::int32_t, std::int32_t>> pairs);

// Iteratively removes users/items with degree < k until fixpoint, then
// re-compacts indices. Empty result is an error.
InteractionTable k_core_filter(const InteractionTable& table, int k);

enum class SplitMode { PerUser, Global };

struct SplitSet {
  InteractionTable train;
  InteractionTable validation;
  InteractionTable test;
  std::uint64_t seed = 0;
  std::array<double, 3> ratios{0.7, 0.2, 0.1};
};

// Deterministic under fixed seed. Per-user mode floors the train/validation
// shares, assigns remainders train-first, and guarantees >=1 training
// interaction per active user.
SplitSet split(const InteractionTable& table, std::array<double, 3> ratios,
               std::uint64_t seed, SplitMode mode = SplitMode::PerUser);

// Three tsv files (train/validation/test) plus manifest.json carrying
// {seed, ratios, counts, checksum}.
void save_split(const SplitSet& s, const std::string& dir);
SplitSet load_split(const std::string& dir);

enum class Axis { User, Item };

// Bucket entities by training degree into half-open intervals
// [0,b0), [b0,b1), ..., [bn,inf). Returns group index per entity.
std::vector<int> group_by_interactions(const InteractionTable& train,
                                       const std::vector<int>& boundaries,
                                       Axis axis);

std::uint64_t checksum_file(const std::string& path);
std::uint64_t checksum_bytes(const void* data, std::size_t n,
                             std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace adagcl
