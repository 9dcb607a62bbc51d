#include <cmath>
#include <map>
#include <vector>

#include "boxrec/errors.hpp"
#include "boxrec/trainer.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace boxrec;
using testing::rel_close;

namespace {

// One user and one item, both the box [0, 4] at unit temperatures.
BoxModel unit_interval_model(GumbelTemps temps = {1.0, 1.0}) {
  BoxModel model(1, temps, {1, 1, 1});
  const double width = std::log(std::expm1(4.0));  // softplus(width) = 4
  for (EntityClass c : {EntityClass::user, EntityClass::item, EntityClass::attribute}) {
    model.table(c).min_params.values = {0.0};
    model.table(c).width_params.values = {width};
  }
  model.sync();
  return model;
}

Dataset toy_dataset(std::size_t users, std::size_t items, std::size_t attributes, std::uint64_t seed) {
  Dataset d;
  for (std::size_t i = 0; i < users; ++i) d.vocab.users.add("u" + std::to_string(i));
  for (std::size_t i = 0; i < items; ++i) d.vocab.items.add("m" + std::to_string(i));
  for (std::size_t i = 0; i < attributes; ++i) d.vocab.attributes.add("a" + std::to_string(i));
  d.user_items = InteractionSet(users, items);
  d.attribute_items = InteractionSet(attributes, items);
  Rng rng(seed);
  for (std::size_t u = 0; u < users; ++u) {
    for (int j = 0; j < 6; ++j) d.user_items.add({u, rng.index(items)}, j == 0 ? Partition::eval : Partition::train);
  }
  for (std::size_t a = 0; a < attributes; ++a) {
    for (int j = 0; j < 8; ++j) d.attribute_items.add({a, rng.index(items)});
  }
  return d;
}

std::unique_ptr<EmbeddingModel> toy_model(Family f, const Dataset& d, std::uint64_t seed) {
  ModelConfig c;
  c.family = f;
  c.dim = 4;
  c.temps = {0.1, 0.1};
  c.seed = seed;
  return init_model(c, d.vocab.sizes());
}

}  // namespace

TEST_CASE("log(1 - exp(-E)) on both sides of ln 2") {
  for (double e : {1e-6, 1e-4}) CHECK(rel_close(log1m_exp_neg(e), std::log(e) - e / 2 + e * e / 24, 1e-12));
  for (double e : {0.01, 0.5, oracle::kLn2, 0.7, 3.0, 40.0}) {
    CHECK(rel_close(log1m_exp_neg(e), std::log(1.0 - std::exp(-e)), 1e-9, 1e-15));
  }
  CHECK(log1m_exp_neg(0.0) == log1m_exp_neg(1e-7));
  CHECK(std::isfinite(log1m_exp_neg(-5.0)));
  CHECK(log1m_exp_neg(800.0) == 0.0);
}

TEST_CASE("contrastive term on self-contained unit boxes") {
  const BoxModel model = unit_interval_model();
  CHECK(rel_close(model.energy(EntityClass::user, 0, 0), oracle::kSelfEnergy, 1e-12));
  const Index negatives[] = {0};
  const double loss = nce_loss_term(model, {EntityClass::user, {0, 0}}, negatives);
  CHECK(rel_close(loss, oracle::kNceOneNegative, 1e-12));
  CHECK_THROWS_AS(nce_loss_term(model, {EntityClass::user, {0, 0}}, {}), ContractViolation);
}

TEST_CASE("contrastive term ignores the order of negatives") {
  const Dataset d = toy_dataset(3, 12, 2, 1);
  auto model = toy_model(Family::box, d, 3);
  std::vector<Index> neg = {1, 5, 7, 7, 11, 2};
  const double a = nce_loss_term(*model, {EntityClass::user, {1, 3}}, neg);
  std::reverse(neg.begin(), neg.end());
  const double b = nce_loss_term(*model, {EntityClass::user, {1, 3}}, neg);
  CHECK(rel_close(a, b, 1e-14));
}

TEST_CASE("ideal containment drives the loss to zero at small temperatures") {
  // user box [0, 4] holds the positive [1, 2]; the negative [10, 11] is disjoint
  BoxModel model(1, {1e-3, 1e-3}, {1, 2, 1});
  auto set = [&](EntityClass c, Index i, double lo, double len) {
    model.table(c).min_params.row(i)[0] = lo;
    model.table(c).width_params.row(i)[0] = std::log(std::expm1(len));
  };
  set(EntityClass::user, 0, 0.0, 4.0);
  set(EntityClass::item, 0, 1.0, 1.0);
  set(EntityClass::item, 1, 10.0, 1.0);
  model.sync();
  const Index negatives[] = {1};
  const double loss = nce_loss_term(model, {EntityClass::user, {0, 0}}, negatives);
  CHECK(loss >= 0.0);
  CHECK(loss < 1e-3);
}

TEST_CASE("batch weighting") {
  const BoxModel model = unit_interval_model();
  Batch batch;
  batch.examples = {{EntityClass::user, {0, 0}}, {EntityClass::attribute, {0, 0}}};
  batch.negatives = {{0}, {0}};
  // equal terms: any weight gives the single-term value
  for (double w : {0.0, 0.5, 0.7, 1.0}) {
    CHECK(rel_close(batch_loss(model, batch, w), oracle::kNceOneNegative, 1e-12));
  }

  Gradients g = model.make_gradients();
  batch_loss(model, batch, 1.0, &g);
  // blocks are ordered (min, width) per class: user, item, attribute
  REQUIRE(g.size() == 6);
  CHECK(g[4][0] == 0.0);
  CHECK(g[5][0] == 0.0);
  CHECK(g[1][0] != 0.0);

  // only attribute pairs: the user term is absent and contributes nothing
  Batch attr_only;
  attr_only.examples = {{EntityClass::attribute, {0, 0}}};
  attr_only.negatives = {{0}};
  CHECK(rel_close(batch_loss(model, attr_only, 0.7), 0.3 * oracle::kNceOneNegative, 1e-12));
  CHECK_THROWS_AS(batch_loss(model, Batch{}, 0.5), ContractViolation);
}

TEST_CASE("batch gradients match finite differences") {
  const Dataset d = toy_dataset(5, 5, 5, 2);
  Rng rng(8);
  for (Family f : {Family::box, Family::mf}) {
    for (int rep = 0; rep < 3; ++rep) {
      auto model = toy_model(f, d, rng.next_u64());
      for (auto block : model->parameter_blocks()) for (auto& v : block) v += rng.uniform(-0.3, 0.3);
      model->sync();
      Batch batch;
      for (int i = 0; i < 6; ++i) {
        const auto cls = i % 3 == 0 ? EntityClass::attribute : EntityClass::user;
        batch.examples.push_back({cls, {rng.index(5), rng.index(5)}});
        batch.negatives.push_back(sample_negatives(rng, 3, 5));
      }
      Gradients g = model->make_gradients();
      batch_loss(*model, batch, 0.7, &g);
      auto blocks = model->parameter_blocks();
      for (std::size_t b = 0; b < blocks.size(); ++b) {
        for (std::size_t i = 0; i < blocks[b].size(); ++i) {
          const double fd = testing::central_difference(&blocks[b][i], 1e-5, [&] {
            model->sync();
            return batch_loss(*model, batch, 0.7);
          });
          model->sync();
          CHECK(rel_close(g[b][i], fd, 1e-4, 1e-7));
        }
      }
    }
  }
}

TEST_CASE("adaptive-moment step") {
  BoxModel model = unit_interval_model();
  TrainConfig cfg;
  cfg.learning_rate = 0.01;
  AdamState state = AdamState::for_model(model);
  const auto before = std::as_const(model).parameter_blocks()[0][0];

  Gradients zero = model.make_gradients();
  optimizer_step(model, state, zero, cfg);
  CHECK(std::as_const(model).parameter_blocks()[0][0] == before);

  Gradients g = model.make_gradients();
  g[0][0] = 3.0;
  optimizer_step(model, state, g, cfg);
  // second step with a fresh gradient: bias correction keeps the move close to lr
  const double moved = before - std::as_const(model).parameter_blocks()[0][0];
  CHECK(moved > 0.0);
  CHECK(moved <= cfg.learning_rate * 1.0001);

  AdamState fresh = AdamState::for_model(model);
  const double start = std::as_const(model).parameter_blocks()[0][0];
  optimizer_step(model, fresh, g, cfg);
  CHECK(rel_close(start - std::as_const(model).parameter_blocks()[0][0], cfg.learning_rate, 1e-6));

  Gradients wrong = model.make_gradients();
  wrong.pop_back();
  CHECK_THROWS_AS(optimizer_step(model, fresh, wrong, cfg), ContractViolation);
  Gradients ragged = model.make_gradients();
  ragged[1].push_back(0.0);
  CHECK_THROWS_AS(optimizer_step(model, fresh, ragged, cfg), ContractViolation);
}

TEST_CASE("negative sampling") {
  Rng rng(5);
  CHECK(sample_negatives(rng, 4, 1) == std::vector<Index>(4, 0));
  CHECK_THROWS_AS(sample_negatives(rng, 0, 3), ContractViolation);
  const Index all[] = {0, 1, 2};
  CHECK_THROWS_AS(sample_negatives(rng, 1, 3, all), ContractViolation);

  const std::size_t n = 10, draws = 1000000;
  std::vector<double> counts(n, 0.0);
  for (Index m : sample_negatives(rng, draws, n)) counts[m] += 1;
  double chi2 = 0.0;
  const double expected = static_cast<double>(draws) / n;
  for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
  CHECK(chi2 < 27.88);  // chi-square, 9 dof, p = 0.001

  const Index excluded[] = {2, 5, 7};
  for (Index m : sample_negatives(rng, 10000, n, excluded)) {
    CHECK_FALSE(std::binary_search(std::begin(excluded), std::end(excluded), m));
  }
}

TEST_CASE("training loop bookkeeping") {
  const Dataset d = toy_dataset(8, 20, 3, 4);
  TrainConfig cfg;
  cfg.batch_size = 16;
  cfg.max_epochs = 6;
  cfg.seed = 11;

  SUBCASE("stalled evaluation stops after patience") {
    auto model = toy_model(Family::box, d, 1);
    cfg.learning_rate = 0.0;
    cfg.patience = 1;
    std::size_t calls = 0;
    const EvalHook hook = [&](const EmbeddingModel&) {
      ++calls;
      return EvalScore{0.25, 0.5};
    };
    std::size_t bests = 0, epochs_seen = 0;
    TrainCallbacks cb;
    cb.on_best = [&](const EmbeddingModel&, const EpochLog&) { ++bests; };
    cb.on_epoch = [&](const std::vector<EpochLog>& log) { epochs_seen = log.size(); };
    const TrainResult r = train(*model, d, cfg, hook, cb);
    CHECK(r.log.size() == 2);
    CHECK(epochs_seen == 2);
    CHECK(bests == 1);
    CHECK(calls == 3);  // initial + two epochs
    CHECK(r.best_epoch == 1);
    CHECK(r.initial.ndcg == 0.25);
  }

  SUBCASE("best snapshot follows the eval hook") {
    auto model = toy_model(Family::mf, d, 2);
    cfg.learning_rate = 0.01;
    cfg.patience = 10;
    const std::vector<double> seq = {0.1, 0.3, 0.2, 0.5, 0.4, 0.45, 0.3};
    std::size_t i = 0;
    std::map<std::size_t, double> first_param;
    const EvalHook hook = [&](const EmbeddingModel&) { return EvalScore{seq.at(i++), 0.0}; };
    TrainCallbacks cb;
    cb.on_best = [&](const EmbeddingModel& m, const EpochLog& row) {
      first_param[row.epoch] = m.parameter_blocks()[0][0];
    };
    const TrainResult r = train(*model, d, cfg, hook, cb);
    CHECK(r.log.size() == 6);
    CHECK(r.best_epoch == 3);
    CHECK(r.best_ndcg == 0.5);
    CHECK(first_param.size() == 2);  // epochs 1 and 3
    CHECK(r.best->parameter_blocks()[0][0] == first_param.at(3));
    for (const auto& row : r.log) CHECK(std::isfinite(row.train_loss));
    const std::string tsv = format_training_log(r.log);
    CHECK(std::count(tsv.begin(), tsv.end(), '\n') == 7);
    CHECK(tsv.rfind("epoch\ttrain_loss\teval_ndcg\teval_hr10\telapsed_ms\n", 0) == 0);
  }
}

TEST_CASE("training is reproducible for a fixed seed") {
  const Dataset d = toy_dataset(8, 20, 3, 6);
  TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.max_epochs = 3;
  cfg.learning_rate = 0.01;
  cfg.seed = 99;
  for (Family f : {Family::box, Family::mf}) {
    auto a = toy_model(f, d, 5);
    auto b = toy_model(f, d, 5);
    train(*a, d, cfg);
    train(*b, d, cfg);
    const auto pa = std::as_const(*a).parameter_blocks();
    const auto pb = std::as_const(*b).parameter_blocks();
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(std::equal(pa[i].begin(), pa[i].end(), pb[i].begin()));
  }
}

TEST_CASE("loss stays finite for extreme parameters") {
  const Dataset d = toy_dataset(4, 10, 2, 7);
  Rng rng(13);
  for (int rep = 0; rep < 20; ++rep) {
    auto model = toy_model(Family::box, d, rng.next_u64());
    for (auto block : model->parameter_blocks()) for (auto& v : block) v = rng.uniform(-1e3, 1e3);
    model->sync();
    Batch batch;
    for (int i = 0; i < 8; ++i) {
      batch.examples.push_back({i % 2 ? EntityClass::user : EntityClass::attribute, {rng.index(2), rng.index(10)}});
      batch.negatives.push_back(sample_negatives(rng, 4, 10));
    }
    Gradients g = model->make_gradients();
    CHECK(std::isfinite(batch_loss(*model, batch, 0.7, &g)));
    for (const auto& block : g) for (double v : block) CHECK(std::isfinite(v));
  }
}

TEST_CASE("optimizing a fixed batch lowers its loss") {
  const Dataset d = toy_dataset(4, 10, 2, 8);
  for (Family f : {Family::box, Family::mf}) {
    auto model = toy_model(f, d, 21);
    Rng rng(3);
    const auto positives = d.user_items.items_by_row();
    Batch batch;
    for (const auto& p : d.user_items.pairs(Partition::train)) {
      batch.examples.push_back({EntityClass::user, p});
      batch.negatives.push_back(sample_negatives(rng, 5, 10, positives[p.row]));
    }
    TrainConfig cfg;
    cfg.learning_rate = 0.05;
    AdamState state = AdamState::for_model(*model);
    Gradients g = model->make_gradients();
    const double first = batch_loss(*model, batch, 1.0);
    for (int step = 0; step < 100; ++step) {
      for (auto& b : g) std::fill(b.begin(), b.end(), 0.0);
      batch_loss(*model, batch, 1.0, &g);
      optimizer_step(*model, state, g, cfg);
    }
    CHECK(batch_loss(*model, batch, 1.0) < 0.5 * first);
  }
}
