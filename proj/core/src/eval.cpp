#include "boxrec/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include "boxrec/errors.hpp"
#include "boxrec/io.hpp"
#include "boxrec/random.hpp"

namespace boxrec {
namespace {

// Distinct items outside `positives` (sorted), drawn uniformly.
void draw_true_negatives(Rng& rng, std::size_t n_items, std::span<const Index> positives,
                         std::size_t n, std::vector<char>& chosen_mark, std::vector<Index>& out) {
  out.clear();
  const std::size_t available = n_items - positives.size();
  const auto is_positive = [&](Index m) { return std::binary_search(positives.begin(), positives.end(), m); };
  if (available < 4 * n) {
    std::vector<Index> pool;
    pool.reserve(available);
    for (Index m = 0; m < n_items; ++m) {
      if (!is_positive(m)) pool.push_back(m);
    }
    // partial Fisher-Yates
    for (std::size_t i = 0; i < n; ++i) {
      std::swap(pool[i], pool[i + rng.index(pool.size() - i)]);
      out.push_back(pool[i]);
    }
    return;
  }
  while (out.size() < n) {
    const Index m = rng.index(n_items);
    if (chosen_mark[m] || is_positive(m)) continue;
    chosen_mark[m] = 1;
    out.push_back(m);
  }
  for (Index m : out) chosen_mark[m] = 0;
}

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

SampledEvalResult sampled_eval(const EmbeddingModel& model, const Dataset& split,
                               std::size_t n_negatives, std::uint64_t seed) {
  BOXREC_REQUIRE(n_negatives >= 1, "sampled_eval: need at least one negative");
  const std::size_t n_items = model.sizes().items;
  const auto positives_by_user = split.user_items.items_by_row();
  Rng rng(seed);
  std::vector<char> mark(n_items, 0);
  std::vector<Index> negatives;
  std::vector<double> scores;
  std::vector<Index> candidates;

  SampledEvalResult out;
  for (const Pair& p : split.user_items.pairs(Partition::eval)) {
    const auto& positives = positives_by_user[p.row];
    if (n_items - positives.size() < n_negatives) {
      ++out.skipped;
      continue;
    }
    draw_true_negatives(rng, n_items, positives, n_negatives, mark, negatives);
    const double target = model.entity_score(EntityClass::user, p.row, p.item);
    std::size_t rank = 1;
    for (Index m : negatives) {
      const double s = model.entity_score(EntityClass::user, p.row, m);
      if (s > target || (s == target && m < p.item)) ++rank;
    }
    out.ndcg += ndcg(rank);
    out.hr10 += hit_rate_at_k(rank, 10);
    ++out.evaluated;
  }
  if (out.evaluated) {
    out.ndcg /= static_cast<double>(out.evaluated);
    out.hr10 /= static_cast<double>(out.evaluated);
  }
  return out;
}

EvalHook make_sampled_eval_hook(const Dataset& split, std::size_t n_negatives, std::uint64_t seed) {
  return [&split, n_negatives, seed](const EmbeddingModel& model) {
    const auto r = sampled_eval(model, split, n_negatives, seed);
    return EvalScore{r.ndcg, r.hr10};
  };
}

std::string_view to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::filter: return "filter";
    case StrategyKind::product: return "product";
    case StrategyKind::geometric: return "geometric";
  }
  return "?";
}

StrategyKind parse_strategy(std::string_view s) {
  for (auto k : kStrategyKinds) {
    if (to_string(k) == s) return k;
  }
  throw InputError("unknown strategy '" + std::string(s) + "' (expected filter, product or geometric)");
}

FilterThresholds fit_filter_thresholds(const EmbeddingModel& model,
                                       const InteractionSet& attribute_items) {
  const std::size_t n_items = model.sizes().items;
  const std::size_t n_attrs = model.sizes().attributes;
  BOXREC_REQUIRE(attribute_items.rows() == n_attrs && attribute_items.items() == n_items,
                 "fit_filter_thresholds: relation does not match the model");
  const auto train = attribute_items.items_by_row(Partition::train);
  FilterThresholds out;
  out.per_attribute.resize(n_attrs);
  std::vector<double> scores(n_items);
  std::unique_ptr<bool[]> positive(new bool[n_items]);
  for (Index a = 0; a < n_attrs; ++a) {
    std::fill(positive.get(), positive.get() + n_items, false);
    for (Index m : train[a]) positive[m] = true;
    for (Index m = 0; m < n_items; ++m) scores[m] = model.entity_score(EntityClass::attribute, a, m);
    const auto fit = best_f1_threshold(scores, std::span<const bool>(positive.get(), n_items));
    out.per_attribute[a] = fit.threshold;
    if (train[a].empty()) out.without_positives.push_back(a);
  }
  return out;
}

AggregateScore aggregate_score(const EmbeddingModel& model, const Strategy& strategy,
                               const QueryShape& query, Index item) {
  query.validate();
  switch (strategy.kind) {
    case StrategyKind::geometric:
      return {model.geometric_score(query, item), true};
    case StrategyKind::product: {
      double s = query.user ? model.entity_score(EntityClass::user, *query.user, item) : 1.0;
      for (Index a : query.positive_attributes) s *= model.entity_score(EntityClass::attribute, a, item);
      if (query.negated_attribute) {
        s *= 1.0 - model.entity_score(EntityClass::attribute, *query.negated_attribute, item);
      }
      return {s, true};
    }
    case StrategyKind::filter: {
      const auto threshold = [&](Index a) {
        BOXREC_REQUIRE(a < strategy.thresholds.size(), "filter strategy has no threshold for attribute");
        return strategy.thresholds[a];
      };
      bool in = true;
      for (Index a : query.positive_attributes) {
        const double t = threshold(a);
        in = model.entity_score(EntityClass::attribute, a, item) >= t && in;
      }
      if (query.negated_attribute) {
        const Index a = *query.negated_attribute;
        const double t = threshold(a);
        in = model.entity_score(EntityClass::attribute, a, item) < t && in;
      }
      const double s = query.user ? model.entity_score(EntityClass::user, *query.user, item) : 0.0;
      return {s, in};
    }
  }
  throw ContractViolation("unknown strategy");
}

QueryRanker::QueryRanker(const EmbeddingModel& model, const Strategy& strategy, RankOptions options,
                         const Dataset* split)
    : model_(model), strategy_(strategy), options_(options) {
  if (options_.mask_train_items) {
    BOXREC_REQUIRE(split != nullptr, "masking training items needs the split");
    train_items_ = split->user_items.items_by_row(Partition::train);
  }
  scores_.resize(model.sizes().items);
  in_.resize(model.sizes().items);
}

std::span<const double> QueryRanker::entity_scores(EntityClass c, Index e) {
  auto& cache = c == EntityClass::user ? user_cache_ : attribute_cache_;
  if (cache.empty()) cache.resize(model_.sizes().of(c));
  BOXREC_REQUIRE(e < cache.size(), "query entity out of range");
  auto& row = cache[e];
  if (row.empty()) {
    row.resize(scores_.size());
    for (Index m = 0; m < row.size(); ++m) row[m] = model_.entity_score(c, e, m);
  }
  return row;
}

// Same arithmetic as aggregate_score, with per-entity scores looked up.
void QueryRanker::score_all(const QueryShape& query) {
  query.validate();
  const std::size_t n = scores_.size();
  if (strategy_.kind == StrategyKind::geometric) {
    for (Index m = 0; m < n; ++m) {
      scores_[m] = model_.geometric_score(query, m);
      in_[m] = 1;
    }
    return;
  }
  std::span<const double> user;
  if (query.user) user = entity_scores(EntityClass::user, *query.user);
  std::vector<std::span<const double>> pos;
  for (Index a : query.positive_attributes) pos.push_back(entity_scores(EntityClass::attribute, a));
  std::span<const double> neg;
  if (query.negated_attribute) neg = entity_scores(EntityClass::attribute, *query.negated_attribute);

  if (strategy_.kind == StrategyKind::product) {
    for (Index m = 0; m < n; ++m) {
      double s = query.user ? user[m] : 1.0;
      for (const auto& p : pos) s *= p[m];
      if (query.negated_attribute) s *= 1.0 - neg[m];
      scores_[m] = s;
      in_[m] = 1;
    }
    return;
  }
  const auto threshold = [&](Index a) {
    BOXREC_REQUIRE(a < strategy_.thresholds.size(), "filter strategy has no threshold for attribute");
    return strategy_.thresholds[a];
  };
  std::vector<double> pos_thr;
  for (Index a : query.positive_attributes) pos_thr.push_back(threshold(a));
  const double neg_thr = query.negated_attribute ? threshold(*query.negated_attribute) : 0.0;
  for (Index m = 0; m < n; ++m) {
    bool in = true;
    for (std::size_t i = 0; i < pos.size(); ++i) in = in && pos[i][m] >= pos_thr[i];
    if (query.negated_attribute) in = in && neg[m] < neg_thr;
    scores_[m] = query.user ? user[m] : 0.0;
    in_[m] = in ? 1 : 0;
  }
}

bool QueryRanker::ahead(Index a, Index b) const {
  if (in_[a] != in_[b]) return in_[a] > in_[b];
  if (scores_[a] != scores_[b]) return scores_[a] > scores_[b];
  return a < b;
}

bool QueryRanker::masked(const QueryShape& query, Index item, Index target) const {
  if (!options_.mask_train_items || !query.user || item == target) return false;
  const auto& items = train_items_[*query.user];
  return std::binary_search(items.begin(), items.end(), item);
}

std::size_t QueryRanker::rank(const QueryRecord& query) {
  BOXREC_REQUIRE(query.target < scores_.size(), "query target out of range");
  score_all(query.shape);
  const Index t = query.target;
  std::size_t rank = 1;
  for (Index m = 0; m < scores_.size(); ++m) {
    if (m == t || masked(query.shape, m, t)) continue;
    const bool tie = in_[m] == in_[t] && scores_[m] == scores_[t];
    if (tie ? (options_.ties == TieMode::pessimistic || m < t) : ahead(m, t)) ++rank;
  }
  return rank;
}

std::vector<Index> QueryRanker::ranking(const QueryShape& query) {
  score_all(query);
  std::vector<Index> order;
  order.reserve(scores_.size());
  const Index none = std::numeric_limits<Index>::max();
  for (Index m = 0; m < scores_.size(); ++m) {
    if (!masked(query, m, none)) order.push_back(m);
  }
  std::sort(order.begin(), order.end(), [this](Index a, Index b) { return ahead(a, b); });
  return order;
}

QueryEvalResult full_vocab_eval(const EmbeddingModel& model, const Strategy& strategy,
                                const std::vector<QueryRecord>& queries, const RankOptions& options,
                                const Dataset* split) {
  QueryRanker ranker(model, strategy, options, split);
  QueryEvalResult out;
  out.ranks.reserve(queries.size());
  out.target_scores.reserve(queries.size());
  for (const auto& q : queries) {
    out.ranks.push_back(ranker.rank(q));
    out.target_scores.push_back(ranker.scores()[q.target]);
  }
  out.summary = summarize_ranks(out.ranks);
  return out;
}

SpectrumRow spectrum_report(std::string method, std::size_t k, const std::array<double, 4>& hr) {
  SpectrumRow row{std::move(method), k, hr, std::nullopt};
  row.gap = spectrum_gap(hr[0], hr[3]);
  return row;
}

CompoundingResult compounding_analysis(const EmbeddingModel& model,
                                       const std::vector<double>& thresholds,
                                       const std::vector<QueryRecord>& queries,
                                       const std::vector<std::size_t>& filter_ranks,
                                       const std::vector<std::size_t>& product_ranks,
                                       const std::vector<std::size_t>& geometric_ranks,
                                       std::size_t k) {
  BOXREC_REQUIRE(filter_ranks.size() == queries.size() && product_ranks.size() == queries.size() &&
                     geometric_ranks.size() == queries.size(),
                 "compounding_analysis: one rank per query");
  CompoundingResult out;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const auto& q = queries[i];
    BOXREC_REQUIRE(q.type() == QueryType::inter, "compounding_analysis takes intersection queries");
    if (filter_ranks[i] <= k) continue;
    ++out.filter_errors;
    int passed = 0;
    for (Index a : q.shape.positive_attributes) {
      BOXREC_REQUIRE(a < thresholds.size(), "compounding_analysis: missing threshold");
      if (model.entity_score(EntityClass::attribute, a, q.target) >= thresholds[a]) ++passed;
    }
    const bool product_hit = product_ranks[i] <= k;
    const bool geometric_hit = geometric_ranks[i] <= k;
    if (passed == 2) {
      ++out.excluded;
    } else if (passed == 1) {
      ++out.compounding;
      out.compounding_solved_product += product_hit;
      out.compounding_solved_geometric += geometric_hit;
    } else {
      ++out.non_compounding;
      out.non_compounding_solved_product += product_hit;
      out.non_compounding_solved_geometric += geometric_hit;
    }
  }
  return out;
}

std::string format_report_tsv(const EvalReport& report) {
  std::ostringstream out;
  out << "query_type\tstrategy\tk\tmetric\tvalue\tn_queries\n";
  for (const auto& row : report.rows) {
    const auto prefix = std::string(to_string(row.query_type)) + '\t' + std::string(to_string(row.strategy));
    for (std::size_t k : {10, 20, 50}) {
      out << prefix << '\t' << k << "\thr\t" << format_real(row.summary.hr(k)) << '\t'
          << row.summary.count << '\n';
    }
    out << prefix << "\t-\tndcg\t" << format_real(row.summary.ndcg) << '\t' << row.summary.count << '\n';
  }
  return out.str();
}

std::string format_report_summary(const EvalReport& report) {
  std::ostringstream out;
  if (!report.rows.empty()) {
    out << "query_type  strategy    HR@10   HR@20   HR@50   NDCG    n\n";
    for (const auto& row : report.rows) {
      char line[160];
      std::snprintf(line, sizeof line, "%-11s %-11s %-7s %-7s %-7s %-7s %zu\n",
                    std::string(to_string(row.query_type)).c_str(),
                    std::string(to_string(row.strategy)).c_str(), fixed(row.summary.hr10).c_str(),
                    fixed(row.summary.hr20).c_str(), fixed(row.summary.hr50).c_str(),
                    fixed(row.summary.ndcg).c_str(), row.summary.count);
      out << line;
    }
  }
  if (!report.spectrum.empty()) {
    out << "\nspectrum (HR@k)\nmethod               k   weakest  weak_user  weak_attr  set_theo  gap\n";
    for (const auto& row : report.spectrum) {
      char line[200];
      std::snprintf(line, sizeof line, "%-20s %-3zu %-8s %-10s %-10s %-9s %s\n", row.method.c_str(), row.k,
                    fixed(row.hr[0]).c_str(), fixed(row.hr[1]).c_str(), fixed(row.hr[2]).c_str(),
                    fixed(row.hr[3]).c_str(),
                    row.gap ? (fixed(100.0 * *row.gap, 1) + "%").c_str() : "undefined");
      out << line;
    }
  }
  if (report.compounding) {
    const auto& c = *report.compounding;
    const auto frac = [](std::size_t a, std::size_t b) { return b ? fixed(double(a) / double(b)) : std::string("-"); };
    out << "\ncompounding errors (filter misses at k=" << report.compounding_k << ")\n"
        << "filter errors      " << c.filter_errors << '\n'
        << "compounding        " << c.compounding << "  solved: product " << frac(c.compounding_solved_product, c.compounding)
        << ", geometric " << frac(c.compounding_solved_geometric, c.compounding) << '\n'
        << "non-compounding    " << c.non_compounding << "  solved: product "
        << frac(c.non_compounding_solved_product, c.non_compounding) << ", geometric "
        << frac(c.non_compounding_solved_geometric, c.non_compounding) << '\n'
        << "passes both        " << c.excluded << '\n';
  }
  return out.str();
}

}  // namespace boxrec
