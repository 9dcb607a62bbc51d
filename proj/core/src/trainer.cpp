#include "boxrec/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "boxrec/errors.hpp"
#include "boxrec/io.hpp"

namespace boxrec {
namespace {

constexpr double kMinEnergy = 1e-7;

}  // namespace

TrainConfig TrainConfig::resolved(Family family) const {
  TrainConfig out = *this;
  if (!out.num_negatives) out.num_negatives = family == Family::box ? 20 : 5;
  if (!out.attribute_loss_weight) out.attribute_loss_weight = family == Family::box ? 0.7 : 0.5;
  out.validate();
  return out;
}

void TrainConfig::validate() const {
  BOXREC_REQUIRE(learning_rate >= 0 && std::isfinite(learning_rate), "learning rate must be >= 0");
  BOXREC_REQUIRE(batch_size >= 1, "batch size must be >= 1");
  BOXREC_REQUIRE(!num_negatives || *num_negatives >= 1, "need at least one negative");
  BOXREC_REQUIRE(!attribute_loss_weight || (*attribute_loss_weight >= 0 && *attribute_loss_weight <= 1),
                 "loss weight must lie in [0, 1]");
  BOXREC_REQUIRE(patience >= 1, "patience must be >= 1");
  BOXREC_REQUIRE(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1, "moment decay must lie in [0, 1)");
  BOXREC_REQUIRE(epsilon > 0, "optimizer epsilon must be positive");
}

AdamState AdamState::for_model(const EmbeddingModel& model) {
  AdamState s;
  s.first = model.make_gradients();
  s.second = model.make_gradients();
  return s;
}

double log1m_exp_neg(double energy) {
  const double e = std::max(energy, kMinEnergy);
  if (e < std::numbers::ln2) return std::log(-std::expm1(-e));
  return std::log1p(-std::exp(-e));
}

double nce_loss_term(const EmbeddingModel& model, const TrainingExample& positive,
                     std::span<const Index> negatives, Gradients* grads, double weight) {
  BOXREC_REQUIRE(!negatives.empty(), "nce_loss_term: no negatives");
  const auto cls = positive.row_class;
  const Index row = positive.pair.row;
  const double k = static_cast<double>(negatives.size());
  if (!grads) {
    double loss = model.energy(cls, row, positive.pair.item);
    double neg = 0.0;
    for (Index m : negatives) neg += log1m_exp_neg(model.energy(cls, row, m));
    return loss - neg / k;
  }
  thread_local LocalGrad local;
  double loss = model.energy_with_grad(cls, row, positive.pair.item, local);
  model.accumulate(local, cls, row, positive.pair.item, weight, *grads);
  double neg = 0.0;
  for (Index m : negatives) {
    const double e = model.energy_with_grad(cls, row, m, local);
    neg += log1m_exp_neg(e);
    // d/dE [-log(1 - e^-E)] = -1 / expm1(E); flat below the clamp
    if (e > kMinEnergy) model.accumulate(local, cls, row, m, -weight / (k * std::expm1(e)), *grads);
  }
  return loss - neg / k;
}

double batch_loss(const EmbeddingModel& model, const Batch& batch, double user_weight,
                  Gradients* grads) {
  BOXREC_REQUIRE(!batch.examples.empty(), "batch_loss: empty batch");
  BOXREC_REQUIRE(batch.negatives.size() == batch.examples.size(), "one negative list per example");
  std::size_t n_user = 0, n_attr = 0;
  for (const auto& ex : batch.examples) (ex.row_class == EntityClass::user ? n_user : n_attr)++;
  const double user_scale = n_user ? user_weight / static_cast<double>(n_user) : 0.0;
  const double attr_scale = n_attr ? (1.0 - user_weight) / static_cast<double>(n_attr) : 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < batch.examples.size(); ++i) {
    const auto& ex = batch.examples[i];
    const double scale = ex.row_class == EntityClass::user ? user_scale : attr_scale;
    if (scale == 0.0) continue;
    total += scale * nce_loss_term(model, ex, batch.negatives[i], grads, scale);
  }
  return total;
}

void optimizer_step(EmbeddingModel& model, AdamState& state, const Gradients& grads,
                    const TrainConfig& config) {
  auto params = model.parameter_blocks();
  BOXREC_REQUIRE(grads.size() == params.size() && state.first.size() == params.size() &&
                     state.second.size() == params.size(),
                 "optimizer_step: block count mismatch");
  for (std::size_t b = 0; b < params.size(); ++b) {
    BOXREC_REQUIRE(grads[b].size() == params[b].size() && state.first[b].size() == params[b].size() &&
                       state.second[b].size() == params[b].size(),
                   "optimizer_step: gradient shape mismatch");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t b = 0; b < params.size(); ++b) {
    auto p = params[b];
    auto& m = state.first[b];
    auto& v = state.second[b];
    const auto& g = grads[b];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
      p[i] -= config.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + config.epsilon);
    }
  }
  model.sync();
}

std::vector<Index> sample_negatives(Rng& rng, std::size_t k, std::size_t item_vocab_size,
                                    std::span<const Index> excluded) {
  BOXREC_REQUIRE(k >= 1, "sample_negatives: k must be >= 1");
  BOXREC_REQUIRE(item_vocab_size > excluded.size(), "sample_negatives: every item is excluded");
  std::vector<Index> out(k);
  for (auto& m : out) {
    do {
      m = rng.index(item_vocab_size);
    } while (!excluded.empty() && std::binary_search(excluded.begin(), excluded.end(), m));
  }
  return out;
}

TrainResult train(EmbeddingModel& model, const Dataset& split, const TrainConfig& raw_config,
                  const EvalHook& eval, const TrainCallbacks& callbacks) {
  const TrainConfig config = raw_config.resolved(model.family());
  const std::size_t k = *config.num_negatives;
  const double w = *config.attribute_loss_weight;

  std::vector<TrainingExample> examples;
  for (const auto& p : split.user_items.pairs(Partition::train)) examples.push_back({EntityClass::user, p});
  for (const auto& p : split.attribute_items.pairs(Partition::train)) {
    examples.push_back({EntityClass::attribute, p});
  }
  BOXREC_REQUIRE(!examples.empty(), "train: empty training split");

  std::vector<std::vector<Index>> user_positives, attr_positives;
  if (config.exclude_positives) {
    user_positives = split.user_items.items_by_row(Partition::train);
    attr_positives = split.attribute_items.items_by_row(Partition::train);
  }
  const std::size_t n_items = model.sizes().items;

  Rng rng(config.seed);
  AdamState adam = AdamState::for_model(model);
  Gradients grads = model.make_gradients();
  TrainResult result;
  if (eval) result.initial = eval(model);
  result.best_ndcg = -std::numeric_limits<double>::infinity();

  const auto start = std::chrono::steady_clock::now();
  std::size_t stale = 0;
  Batch batch;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    rng.shuffle(examples.begin(), examples.end());
    double loss_sum = 0.0;
    std::size_t n_batches = 0;
    for (std::size_t start_i = 0; start_i < examples.size(); start_i += config.batch_size) {
      const std::size_t end_i = std::min(examples.size(), start_i + config.batch_size);
      batch.examples.assign(examples.begin() + static_cast<std::ptrdiff_t>(start_i),
                            examples.begin() + static_cast<std::ptrdiff_t>(end_i));
      batch.negatives.resize(batch.examples.size());
      for (std::size_t i = 0; i < batch.examples.size(); ++i) {
        const auto& ex = batch.examples[i];
        std::span<const Index> excluded;
        if (config.exclude_positives) {
          excluded = ex.row_class == EntityClass::user ? user_positives[ex.pair.row]
                                                       : attr_positives[ex.pair.row];
        }
        batch.negatives[i] = sample_negatives(rng, k, n_items, excluded);
      }
      for (auto& g : grads) std::fill(g.begin(), g.end(), 0.0);
      loss_sum += batch_loss(model, batch, w, &grads);
      ++n_batches;
      optimizer_step(model, adam, grads, config);
    }

    EpochLog row;
    row.epoch = epoch;
    row.train_loss = loss_sum / static_cast<double>(n_batches);
    if (eval) {
      const EvalScore s = eval(model);
      row.eval_ndcg = s.ndcg;
      row.eval_hr10 = s.hr10;
    }
    row.elapsed_ms = static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start)
            .count());
    result.log.push_back(row);

    const bool improved = !eval || row.eval_ndcg > result.best_ndcg;
    if (improved) {
      result.best_ndcg = row.eval_ndcg;
      result.best_epoch = epoch;
      result.best = model.clone();
      stale = 0;
      if (callbacks.on_best) callbacks.on_best(*result.best, row);
    } else {
      ++stale;
    }
    if (callbacks.on_epoch) callbacks.on_epoch(result.log);
    if (stale >= config.patience) break;
  }
  if (!result.best) result.best = model.clone();
  return result;
}

std::string format_training_log(const std::vector<EpochLog>& log) {
  std::ostringstream out;
  out << "epoch\ttrain_loss\teval_ndcg\teval_hr10\telapsed_ms\n";
  for (const auto& r : log) {
    out << r.epoch << '\t' << format_real(r.train_loss) << '\t' << format_real(r.eval_ndcg) << '\t'
        << format_real(r.eval_hr10) << '\t' << r.elapsed_ms << '\n';
  }
  return out.str();
}

}  // namespace boxrec
