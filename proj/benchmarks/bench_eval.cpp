#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "boxrec/eval.hpp"
#include "boxrec/synthetic.hpp"

using namespace boxrec;

namespace {

struct Fixture {
  SplitArtifacts split;
  std::unique_ptr<EmbeddingModel> model;
};

const Fixture& fixture(Family family) {
  static Fixture box, mf;
  Fixture& f = family == Family::box ? box : mf;
  if (!f.model) {
    SyntheticConfig sc;
    sc.seed = 7;
    f.split = run_split(filter_min_frequency(synthetic_generate(sc).dataset), SplitConfig{});
    ModelConfig mc;
    mc.family = family;
    mc.dim = family == Family::box ? 8 : 16;
    mc.temps = {0.1, 0.1};
    f.model = init_model(mc, f.split.data.vocab.sizes());
  }
  return f;
}

void BM_SampledEval(benchmark::State& state) {
  const auto& f = fixture(Family::box);
  for (auto _ : state) benchmark::DoNotOptimize(sampled_eval(*f.model, f.split.data, 100, 0).ndcg);
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * f.split.data.user_items.count(Partition::eval)));
}
BENCHMARK(BM_SampledEval)->Unit(benchmark::kMillisecond);

// Full-vocabulary ranking of the first 200 negation queries.
void BM_FullVocabEval(benchmark::State& state) {
  const Family family = state.range(0) ? Family::box : Family::mf;
  const auto kind = static_cast<StrategyKind>(state.range(1));
  const auto& f = fixture(family);
  std::vector<QueryRecord> queries(f.split.queries.neg.begin(),
                                   f.split.queries.neg.begin() + std::min<std::ptrdiff_t>(200, f.split.queries.neg.size()));
  Strategy strategy{kind, {}};
  if (kind == StrategyKind::filter) {
    strategy.thresholds = fit_filter_thresholds(*f.model, f.split.data.attribute_items).per_attribute;
  }
  for (auto _ : state) benchmark::DoNotOptimize(full_vocab_eval(*f.model, strategy, queries).summary.hr10);
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * queries.size()));
  state.SetLabel(std::string(to_string(family)) + "-" + std::string(to_string(kind)));
}
BENCHMARK(BM_FullVocabEval)
    ->ArgsProduct({{1, 0}, {static_cast<int>(StrategyKind::filter), static_cast<int>(StrategyKind::product),
                            static_cast<int>(StrategyKind::geometric)}})
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
