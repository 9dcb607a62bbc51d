#pragma once

// Ingestion, frequency filtering, the joint train/eval split sampler,
// complex-query generation and generalization-spectrum variants.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "boxrec/dataset.hpp"

namespace boxrec {

/// Reads `row_id<TAB>item_id[<TAB>value]` files. Every retained line is a
/// positive; with `min_rating`, lines whose value is below it are dropped.
/// Vocabularies are assigned in order of first appearance (users, then items
/// as met in the user file, then the attribute file).
Dataset ingest(const std::filesystem::path& user_item_path,
               const std::filesystem::path& attribute_item_path,
               std::optional<double> min_rating = std::nullopt);

struct FrequencyThresholds {
  std::size_t min_user = 5;
  std::size_t min_item = 5;
  std::size_t min_attribute = 20;
};

/// Repeatedly drops users/items with too few user interactions and
/// attributes with too few items until nothing changes; re-indexes densely
/// preserving relative order. All pairs come out tagged train.
Dataset filter_min_frequency(const Dataset& data, const FrequencyThresholds& thresholds = {});

enum class EpsilonMode : std::uint8_t { independence_expectation, fixed };

std::string_view to_string(EpsilonMode m);
EpsilonMode parse_epsilon_mode(std::string_view s);

struct SplitConfig {
  /// 0 selects floor(0.1 * |D_U|).
  std::size_t max_sample_size = 0;
  EpsilonMode epsilon_mode = EpsilonMode::independence_expectation;
  double epsilon_fixed = 0.0;
  double alpha = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SimpleSplit {
  Dataset data;  // partitions tagged
  std::vector<QueryRecord> queries;
  std::size_t attempts = 0;
};

/// Joint sampler: draw a ~ P(a), then m among a's items weighted by P(m),
/// then u among m's users weighted by P(u); move (u,m) and (a,m) to eval and
/// record (u,a,m). Marginals are computed once from the input. Draws whose
/// (u,m) is already in eval are skipped; gives up after 100 * max_sample_size
/// attempts.
SimpleSplit split_simple(const Dataset& data, const SplitConfig& config);

using AttributePair = std::pair<Index, Index>;

/// Ordered attribute pairs with a1 != a2 that are viable and non-trivial
/// for intersection (A_cap) and difference (A_diff) queries, sorted.
struct ViablePairs {
  std::vector<AttributePair> intersection;
  std::vector<AttributePair> difference;
};

/// Computed on the full relation (train and eval).
ViablePairs viable_pairs(const InteractionSet& attribute_items, const SplitConfig& config);

/// Intersection queries (u, a1, a2, m) with a1 < a2 and negation queries
/// (u, a1, a2, m), generated from every eval (u, m). Sorted, deduplicated.
std::pair<std::vector<QueryRecord>, std::vector<QueryRecord>> generate_complex(
    const Dataset& split, const ViablePairs& viable);

enum class Regime : std::uint8_t { weakest, weak_user, weak_attribute, set_theoretic };

inline constexpr Regime kRegimes[] = {Regime::weakest, Regime::weak_user, Regime::weak_attribute,
                                      Regime::set_theoretic};

std::string_view to_string(Regime r);
Regime parse_regime(std::string_view s);

/// Moves the constituent pairs of `queries` back to train according to the
/// regime: weakest both, weak_user only (u,m), weak_attribute only (a,m),
/// set_theoretic neither.
Dataset spectrum_variant(const Dataset& split, const std::vector<QueryRecord>& queries,
                         Regime regime);

/// Everything a split directory holds.
struct SplitArtifacts {
  Dataset data;
  QuerySets queries;
  SplitConfig config;
  std::size_t viable_intersection = 0;
  std::size_t viable_difference = 0;
  std::size_t attempts = 0;
};

/// Filtered data in, full split out (simple split, viable pairs, complex queries).
SplitArtifacts run_split(const Dataset& filtered, SplitConfig config);

void write_split_dir(const std::filesystem::path& dir, const SplitArtifacts& split);
SplitArtifacts read_split_dir(const std::filesystem::path& dir);

}  // namespace boxrec
