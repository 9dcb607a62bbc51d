#pragma once

// Evaluation protocols over a frozen model: sampled-negative NDCG for model
// selection, full-vocabulary ranking for the query sets under the filter,
// product and geometric aggregation strategies, plus the spectrum and
// compounding-error analyses and the report formats.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "boxrec/dataset.hpp"
#include "boxrec/metrics.hpp"
#include "boxrec/models.hpp"
#include "boxrec/pipeline.hpp"
#include "boxrec/trainer.hpp"

namespace boxrec {

struct SampledEvalResult {
  double ndcg = 0.0;
  double hr10 = 0.0;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;  // users with too few true negatives
};

/// Ranks each eval (u, m) against `n_negatives` distinct items u never
/// interacted with (train or eval), scored by entity_score(user, .).
SampledEvalResult sampled_eval(const EmbeddingModel& model, const Dataset& split,
                               std::size_t n_negatives = 100, std::uint64_t seed = 0);

/// sampled_eval with a fixed seed, packaged for train().
EvalHook make_sampled_eval_hook(const Dataset& split, std::size_t n_negatives, std::uint64_t seed);

enum class StrategyKind : std::uint8_t { filter, product, geometric };

inline constexpr StrategyKind kStrategyKinds[] = {StrategyKind::filter, StrategyKind::product,
                                                  StrategyKind::geometric};

std::string_view to_string(StrategyKind k);
StrategyKind parse_strategy(std::string_view s);

struct FilterThresholds {
  std::vector<double> per_attribute;           // indexed by attribute
  std::vector<Index> without_positives;        // got +inf
};

/// Per attribute, the best-F1 threshold of entity_score(a, .) over all items
/// against the attribute's training items.
FilterThresholds fit_filter_thresholds(const EmbeddingModel& model,
                                       const InteractionSet& attribute_items);

struct Strategy {
  StrategyKind kind = StrategyKind::geometric;
  std::vector<double> thresholds;  // filter only, indexed by attribute
};

struct AggregateScore {
  double score = 0.0;
  bool in = true;  // filter membership; always true for the other strategies
};

AggregateScore aggregate_score(const EmbeddingModel& model, const Strategy& strategy,
                               const QueryShape& query, Index item);

struct RankOptions {
  TieMode ties = TieMode::by_index;
  /// Drop the query user's training items (other than the target) from the ranking.
  bool mask_train_items = false;
};

/// Scores every item for a query and ranks them.
class QueryRanker {
 public:
  QueryRanker(const EmbeddingModel& model, const Strategy& strategy, RankOptions options = {},
              const Dataset* split = nullptr);

  /// Scores (and filter flags) of every item, in item order.
  void score_all(const QueryShape& query);
  std::size_t rank(const QueryRecord& query);
  /// Items best-first under the same ordering rank() uses; masked items omitted.
  std::vector<Index> ranking(const QueryShape& query);

  std::span<const double> scores() const { return scores_; }
  std::span<const char> in() const { return in_; }

 private:
  bool ahead(Index a, Index b) const;
  bool masked(const QueryShape& query, Index item, Index target) const;
  // entity_score(c, e, .) over all items, computed once per entity.
  std::span<const double> entity_scores(EntityClass c, Index e);

  const EmbeddingModel& model_;
  Strategy strategy_;
  RankOptions options_;
  std::vector<std::vector<Index>> train_items_;
  std::vector<std::vector<double>> user_cache_;
  std::vector<std::vector<double>> attribute_cache_;
  std::vector<double> scores_;
  std::vector<char> in_;
};

struct QueryEvalResult {
  RankSummary summary;
  std::vector<std::size_t> ranks;     // per query, input order
  std::vector<double> target_scores;  // per query, input order
};

QueryEvalResult full_vocab_eval(const EmbeddingModel& model, const Strategy& strategy,
                                const std::vector<QueryRecord>& queries,
                                const RankOptions& options = {}, const Dataset* split = nullptr);

struct SpectrumRow {
  std::string method;
  std::size_t k = 50;
  std::array<double, 4> hr{};  // ordered as kRegimes
  std::optional<double> gap;
};

SpectrumRow spectrum_report(std::string method, std::size_t k, const std::array<double, 4>& hr);

struct CompoundingResult {
  std::size_t filter_errors = 0;
  std::size_t compounding = 0;
  std::size_t non_compounding = 0;
  std::size_t excluded = 0;  // filter misses where the target passes both filters
  std::size_t compounding_solved_product = 0;
  std::size_t compounding_solved_geometric = 0;
  std::size_t non_compounding_solved_product = 0;
  std::size_t non_compounding_solved_geometric = 0;
};

/// Splits the intersection queries the filter strategy misses at `k` by how
/// many attribute filters the target passes, and counts how many of each
/// class the product and geometric strategies hit. The rank vectors are
/// parallel to `queries`.
CompoundingResult compounding_analysis(const EmbeddingModel& model,
                                       const std::vector<double>& thresholds,
                                       const std::vector<QueryRecord>& queries,
                                       const std::vector<std::size_t>& filter_ranks,
                                       const std::vector<std::size_t>& product_ranks,
                                       const std::vector<std::size_t>& geometric_ranks,
                                       std::size_t k);

struct ReportRow {
  QueryType query_type = QueryType::simple;
  StrategyKind strategy = StrategyKind::geometric;
  RankSummary summary;
};

struct EvalReport {
  std::vector<ReportRow> rows;
  std::vector<SpectrumRow> spectrum;
  std::optional<CompoundingResult> compounding;
  std::size_t compounding_k = 10;
};

/// query_type, strategy, k, metric, value, n_queries: three HR rows and one
/// NDCG row (k = "-") per report row.
std::string format_report_tsv(const EvalReport& report);

/// Human-readable tables.
std::string format_report_summary(const EvalReport& report);

}  // namespace boxrec
