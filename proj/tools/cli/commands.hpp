#pragma once

// Subcommand bodies. Each reads its settings from a RunConfig, writes
// results to `out` and progress to `log`, and throws boxrec errors on
// failure (the app maps them to exit codes).

#include <array>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "boxrec/eval.hpp"
#include "boxrec/pipeline.hpp"
#include "boxrec/trainer.hpp"
#include "run_config.hpp"

namespace boxrec::cli {

struct Streams {
  std::ostream& out;
  std::ostream& log;
};

/// Dataset-statistics block for a split.
std::string format_split_counts(const SplitArtifacts& split);

/// Ingests (or generates), filters, splits and writes data.split_dir.
SplitArtifacts cmd_split(const RunConfig& config, Streams io);

struct TrainOutcome {
  std::unique_ptr<EmbeddingModel> model;  // as reloaded from the checkpoint
  EvalScore initial;
  double best_ndcg = 0.0;
  std::size_t best_epoch = 0;
  std::size_t epochs = 0;
};

/// Trains one model on `split` and keeps the best snapshot in
/// `checkpoint_dir`; the per-epoch log is rewritten at `log_path`.
TrainOutcome train_to_checkpoint(const ModelConfig& model_config, const TrainConfig& train_config,
                                 const SplitArtifacts& split, std::size_t eval_negatives,
                                 std::uint64_t eval_seed, const std::filesystem::path& checkpoint_dir,
                                 const std::filesystem::path& log_path, std::ostream& log);

TrainOutcome cmd_train(const RunConfig& config, Streams io);

struct EvalOptions {
  std::vector<StrategyKind> strategies;
  std::vector<QueryType> query_types;
  RankOptions rank;
  std::size_t max_queries = 0;
  std::uint64_t seed = 0;
  std::vector<Regime> regimes;
  QueryType regime_query_type = QueryType::inter;
  bool compounding = false;
  std::size_t compounding_k = 10;
  bool dump = false;

  static EvalOptions from(const RunConfig& config);
};

/// Trains a fresh model on a spectrum variant of the training data.
using Retrainer = std::function<std::unique_ptr<EmbeddingModel>(const SplitArtifacts& variant, Regime)>;

/// Ranks the requested query sets and writes report.tsv, summary.txt and the
/// optional spectrum, compounding, thresholds and per-query files into `out_dir`.
EvalReport evaluate_to_dir(const EmbeddingModel& model, const SplitArtifacts& split,
                           const EvalOptions& options, const Retrainer& retrain,
                           const std::filesystem::path& out_dir, std::ostream& log);

EvalReport cmd_eval(const RunConfig& config, Streams io);

/// Parses `expression`, ranks every item and prints the top query.top_k.
void cmd_query(const RunConfig& config, const std::string& expression, Streams io);

struct FamilyOutcome {
  Family family = Family::box;
  EvalScore initial;
  double best_ndcg = 0.0;
  std::size_t best_epoch = 0;
  std::size_t epochs = 0;
  EvalReport report;
};

struct SynthOutcome {
  SplitArtifacts split;
  std::vector<FamilyOutcome> families;

  const FamilyOutcome& of(Family f) const;
};

/// Generate, split, train every synth.families member, evaluate; everything
/// lands under synth.out.
SynthOutcome cmd_synth(const RunConfig& config, Streams io);

}  // namespace boxrec::cli
