#include <benchmark/benchmark.h>

#include <vector>

#include "boxrec/geometry.hpp"
#include "boxrec/models.hpp"
#include "boxrec/random.hpp"
#include "boxrec/trainer.hpp"

using namespace boxrec;

namespace {

Box random_box(Rng& rng, std::size_t dim) {
  std::vector<double> lo(dim), hi(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    lo[d] = rng.uniform(0.0, 0.1);
    hi[d] = lo[d] + rng.uniform(0.9, 1.0);
  }
  return Box(lo, hi);
}

void BM_IntersectionVolume(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  const auto n = static_cast<std::size_t>(state.range(1));
  Rng rng(1);
  std::vector<Box> boxes;
  for (std::size_t i = 0; i < n; ++i) boxes.push_back(random_box(rng, dim));
  const std::vector<BoxView> views(boxes.begin(), boxes.end());
  for (auto _ : state) benchmark::DoNotOptimize(log_gumbel_intersection_volume(views, {2.0, 0.01}));
}
BENCHMARK(BM_IntersectionVolume)->ArgsProduct({{8, 64}, {2, 4}});

void BM_EnergyWithGrad(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  const Box c = random_box(rng, dim), m = random_box(rng, dim);
  const std::vector<BoxView> container{c};
  std::vector<BoxGrad> gc(1);
  BoxGrad gm;
  for (auto _ : state) benchmark::DoNotOptimize(energy_with_grad(container, m, {2.0, 0.01}, gc, gm));
}
BENCHMARK(BM_EnergyWithGrad)->Arg(8)->Arg(64);

void BM_NegationQueryScore(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  const Box u = random_box(rng, dim), a1 = random_box(rng, dim), a2 = random_box(rng, dim), m = random_box(rng, dim);
  const std::vector<BoxView> positives{u, a1};
  for (auto _ : state) benchmark::DoNotOptimize(query_score(positives, a2.view(), m, {2.0, 0.01}));
}
BENCHMARK(BM_NegationQueryScore)->Arg(8)->Arg(64);

// One optimizer step on a 128-positive batch.
void BM_TrainStep(benchmark::State& state) {
  ModelConfig mc;
  mc.family = state.range(0) ? Family::box : Family::mf;
  mc.dim = mc.family == Family::box ? 64 : 128;
  auto model = init_model(mc, {500, 1000, 40});
  TrainConfig tc = TrainConfig{}.resolved(mc.family);
  Rng rng(4);
  Batch batch;
  for (int i = 0; i < 128; ++i) {
    batch.examples.push_back({i % 3 ? EntityClass::user : EntityClass::attribute, {rng.index(40), rng.index(1000)}});
    batch.negatives.push_back(sample_negatives(rng, *tc.num_negatives, 1000));
  }
  AdamState adam = AdamState::for_model(*model);
  Gradients grads = model->make_gradients();
  for (auto _ : state) {
    for (auto& g : grads) std::fill(g.begin(), g.end(), 0.0);
    benchmark::DoNotOptimize(batch_loss(*model, batch, *tc.attribute_loss_weight, &grads));
    optimizer_step(*model, adam, grads, tc);
  }
  state.SetLabel(std::string(to_string(mc.family)));
}
BENCHMARK(BM_TrainStep)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);

}  // namespace
