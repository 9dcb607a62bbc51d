#pragma once

// Noise-contrastive training over the user and attribute training pairs with
// uniform negative sampling, an adaptive-moment optimizer and NDCG-based
// model selection.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "boxrec/dataset.hpp"
#include "boxrec/models.hpp"
#include "boxrec/random.hpp"

namespace boxrec {

struct TrainConfig {
  double learning_rate = 0.001;
  std::size_t batch_size = 128;
  /// Negatives per positive; unset means 20 for boxes, 5 for vectors.
  std::optional<std::size_t> num_negatives;
  /// w: the user term is weighted by w and the attribute term by 1 - w.
  /// Unset means 0.7 for boxes, 0.5 for vectors.
  std::optional<double> attribute_loss_weight;
  std::size_t max_epochs = 100;
  std::size_t patience = 5;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Never draw a row entity's own training items as its negatives.
  bool exclude_positives = false;

  /// Copy with family defaults filled in; validates.
  TrainConfig resolved(Family family) const;
  void validate() const;
};

/// First and second moment estimates, shaped like the parameter blocks.
struct AdamState {
  std::vector<std::vector<double>> first;
  std::vector<std::vector<double>> second;
  std::uint64_t step = 0;

  static AdamState for_model(const EmbeddingModel& model);
};

struct TrainingExample {
  EntityClass row_class = EntityClass::user;
  Pair pair;
};

struct Batch {
  std::vector<TrainingExample> examples;
  std::vector<std::vector<Index>> negatives;  // one list per example
};

/// log(1 - exp(-energy)) with energy clamped to >= 1e-7, stable on both sides of ln 2.
double log1m_exp_neg(double energy);

/// E(row, m) - mean_i log(1 - exp(-E(row, negative_i))). When `grads` is
/// given, adds weight * d(loss)/d(params) into it.
double nce_loss_term(const EmbeddingModel& model, const TrainingExample& positive,
                     std::span<const Index> negatives, Gradients* grads = nullptr,
                     double weight = 1.0);

/// w * mean(user terms) + (1 - w) * mean(attribute terms). A component with
/// no pairs in the batch contributes nothing.
double batch_loss(const EmbeddingModel& model, const Batch& batch, double user_weight,
                  Gradients* grads = nullptr);

/// One bias-corrected adaptive-moment update; calls model.sync().
void optimizer_step(EmbeddingModel& model, AdamState& state, const Gradients& grads,
                    const TrainConfig& config);

/// k i.i.d. uniform items. Items listed in `excluded` (sorted) are redrawn.
std::vector<Index> sample_negatives(Rng& rng, std::size_t k, std::size_t item_vocab_size,
                                    std::span<const Index> excluded = {});

struct EvalScore {
  double ndcg = 0.0;
  double hr10 = 0.0;
};

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double eval_ndcg = 0.0;
  double eval_hr10 = 0.0;
  std::uint64_t elapsed_ms = 0;
};

struct TrainResult {
  std::unique_ptr<EmbeddingModel> best;
  std::vector<EpochLog> log;
  EvalScore initial;
  std::size_t best_epoch = 0;
  double best_ndcg = 0.0;
};

using EvalHook = std::function<EvalScore(const EmbeddingModel&)>;

struct TrainCallbacks {
  /// A new best snapshot (the model passed is that snapshot).
  std::function<void(const EmbeddingModel&, const EpochLog&)> on_best;
  /// After every epoch, with the log so far.
  std::function<void(const std::vector<EpochLog>&)> on_epoch;
};

/// Trains `model` in place on the train partitions of `split`. After each
/// epoch `eval` scores the model and the best-NDCG snapshot is kept. Stops after `patience` epochs without strict
/// improvement or at max_epochs. Without an eval hook every epoch counts as
/// an improvement.
TrainResult train(EmbeddingModel& model, const Dataset& split, const TrainConfig& config,
                  const EvalHook& eval = {}, const TrainCallbacks& callbacks = {});

/// TSV: epoch, train_loss, eval_ndcg, eval_hr10, elapsed_ms.
std::string format_training_log(const std::vector<EpochLog>& log);

}  // namespace boxrec
