#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "boxrec/checkpoint.hpp"
#include "boxrec/errors.hpp"
#include "boxrec/io.hpp"
#include "boxrec/random.hpp"
#include "boxrec/synthetic.hpp"
#include "query_expr.hpp"

namespace fs = std::filesystem;

namespace boxrec::cli {
namespace {

constexpr std::size_t kReportKs[] = {10, 20, 50};

std::string tsv_real(double v) { return std::isnan(v) ? std::string("-") : format_real(v); }

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

Dataset load_source(const RunConfig& config, const fs::path& source_dir, std::ostream& log) {
  if (config.get_bool("data.synthetic")) {
    const auto syn = synthetic_generate(config.synthetic_config());
    write_synthetic_tsv(source_dir, syn);
    log << "generated synthetic data in " << source_dir.string() << "\n";
    return ingest(source_dir / "user_item.tsv", source_dir / "attribute_item.tsv");
  }
  const auto& users = config.get("data.user_items");
  const auto& attrs = config.get("data.attribute_items");
  if (users.empty() || attrs.empty()) {
    throw InputError("split needs data.user_items and data.attribute_items (or data.synthetic = true)");
  }
  return ingest(users, attrs, config.get_optional_real("data.min_rating"));
}

// Indices of the queries to evaluate: all, or a seeded sample kept in file order.
std::vector<std::size_t> pick_queries(std::size_t n, std::size_t max_queries, std::uint64_t seed,
                                      QueryType type) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  if (max_queries == 0 || n <= max_queries) return idx;
  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(type)));
  rng.shuffle(idx.begin(), idx.end());
  idx.resize(max_queries);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::string format_spectrum_tsv(const std::vector<SpectrumRow>& rows) {
  std::ostringstream out;
  out << "method\tk\tweakest\tweak_user\tweak_attribute\tset_theoretic\tgap\n";
  for (const auto& r : rows) {
    out << r.method << '\t' << r.k;
    for (double v : r.hr) out << '\t' << tsv_real(v);
    out << '\t' << (r.gap ? format_real(*r.gap) : std::string("-")) << '\n';
  }
  return out.str();
}

std::string format_compounding_tsv(const CompoundingResult& c, std::size_t k) {
  std::ostringstream out;
  out << "k\tclass\tcount\tsolved_product\tsolved_geometric\n"
      << k << "\tcompounding\t" << c.compounding << '\t' << c.compounding_solved_product << '\t'
      << c.compounding_solved_geometric << '\n'
      << k << "\tnon_compounding\t" << c.non_compounding << '\t' << c.non_compounding_solved_product << '\t'
      << c.non_compounding_solved_geometric << '\n'
      << k << "\tpasses_both\t" << c.excluded << "\t-\t-\n"
      << k << "\tfilter_errors\t" << c.filter_errors << "\t-\t-\n";
  return out.str();
}

ModelConfig synth_model_config(const RunConfig& config, Family family) {
  ModelConfig mc = config.model_config();
  mc.family = family;
  if (family == Family::box) {
    mc.dim = config.get_uint("synth.box_dim");
    mc.temps = {config.get_real("synth.box_tau"), config.get_real("synth.box_nu")};
  } else {
    mc.dim = config.get_uint("synth.mf_dim");
  }
  return mc;
}

TrainConfig synth_train_config(const RunConfig& config, Family family) {
  TrainConfig tc = config.train_config();
  const std::string f(to_string(family));
  tc.learning_rate = config.get_real("synth." + f + "_learning_rate");
  tc.max_epochs = config.get_uint("synth." + f + "_max_epochs");
  return tc;
}

bool contains(const std::vector<std::string>& list, std::string_view s) {
  return std::find(list.begin(), list.end(), s) != list.end();
}

}  // namespace

std::string format_split_counts(const SplitArtifacts& split) {
  const auto& d = split.data;
  std::ostringstream out;
  out << "#Users\t#Items\t#Attributes\t#Train D_U\t#Eval D_U\t#Train D_A\t#Eval D_A\t"
         "#Q simple\t#Q inter\t#Q neg\n"
      << d.vocab.users.size() << '\t' << d.vocab.items.size() << '\t' << d.vocab.attributes.size() << '\t'
      << d.user_items.count(Partition::train) << '\t' << d.user_items.count(Partition::eval) << '\t'
      << d.attribute_items.count(Partition::train) << '\t' << d.attribute_items.count(Partition::eval) << '\t'
      << split.queries.simple.size() << '\t' << split.queries.inter.size() << '\t' << split.queries.neg.size()
      << '\n';
  return out.str();
}

SplitArtifacts cmd_split(const RunConfig& config, Streams io) {
  const fs::path dir = config.get("data.split_dir");
  const SplitConfig split_config = config.split_config();
  const Dataset raw = load_source(config, dir / "source", io.log);
  io.log << "ingested " << raw.user_items.size() << " user-item and " << raw.attribute_items.size()
         << " attribute-item pairs\n";
  const Dataset filtered = filter_min_frequency(raw, config.frequency_thresholds());
  SplitArtifacts split = run_split(filtered, split_config);
  write_split_dir(dir, split);
  io.log << "wrote " << dir.string() << "\n";
  io.out << format_split_counts(split);
  return split;
}

TrainOutcome train_to_checkpoint(const ModelConfig& model_config, const TrainConfig& train_config,
                                 const SplitArtifacts& split, std::size_t eval_negatives,
                                 std::uint64_t eval_seed, const fs::path& checkpoint_dir,
                                 const fs::path& log_path, std::ostream& log) {
  auto model = init_model(model_config, split.data.vocab.sizes());
  ensure_parent(checkpoint_dir);
  ensure_parent(log_path);
  write_file(log_path, format_training_log({}));

  EvalHook hook;
  if (split.data.user_items.count(Partition::eval) > 0) {
    hook = make_sampled_eval_hook(split.data, eval_negatives, eval_seed);
  } else {
    log << "no held-out user pairs; keeping the last epoch\n";
  }
  TrainCallbacks callbacks;
  callbacks.on_best = [&](const EmbeddingModel& best, const EpochLog&) {
    save_checkpoint(checkpoint_dir, best, split.data.vocab, model_config.seed);
  };
  callbacks.on_epoch = [&](const std::vector<EpochLog>& rows) {
    write_file(log_path, format_training_log(rows));
    const auto& r = rows.back();
    log << "epoch " << r.epoch << "  loss " << format_real(r.train_loss) << "  ndcg "
        << format_real(r.eval_ndcg) << "  hr@10 " << format_real(r.eval_hr10) << "\n";
  };
  log << "training " << to_string(model_config.family) << " (dim " << model->dim() << ")\n";
  TrainResult result = train(*model, split.data, train_config, hook, callbacks);
  if (result.log.empty()) save_checkpoint(checkpoint_dir, *result.best, split.data.vocab, model_config.seed);

  TrainOutcome out;
  out.model = load_checkpoint(checkpoint_dir).model;
  out.initial = result.initial;
  out.best_ndcg = result.best_ndcg;
  out.best_epoch = result.best_epoch;
  out.epochs = result.log.size();
  return out;
}

TrainOutcome cmd_train(const RunConfig& config, Streams io) {
  const auto split = read_split_dir(config.get("data.split_dir"));
  const fs::path checkpoint = config.get("model.checkpoint");
  auto outcome = train_to_checkpoint(config.model_config(), config.train_config(), split,
                                     config.get_uint("train.eval_negatives"),
                                     config.get_uint("train.eval_seed"), checkpoint,
                                     config.get("train.log"), io.log);
  io.out << "initial_ndcg\t" << format_real(outcome.initial.ndcg) << "\nbest_ndcg\t"
         << format_real(outcome.best_ndcg) << "\nbest_epoch\t" << outcome.best_epoch << "\nepochs\t"
         << outcome.epochs << "\n";
  return outcome;
}

EvalOptions EvalOptions::from(const RunConfig& config) {
  EvalOptions o;
  for (const auto& s : config.get_list("eval.strategies")) o.strategies.push_back(parse_strategy(s));
  for (const auto& t : config.get_list("eval.query_types")) o.query_types.push_back(parse_query_type(t));
  if (o.strategies.empty()) throw InputError("eval.strategies is empty");
  if (o.query_types.empty()) throw InputError("eval.query_types is empty");
  o.rank.mask_train_items = config.get_bool("eval.mask_train");
  const auto& ties = config.get("eval.ties");
  if (ties == "index") {
    o.rank.ties = TieMode::by_index;
  } else if (ties == "pessimistic") {
    o.rank.ties = TieMode::pessimistic;
  } else {
    throw InputError("eval.ties must be index or pessimistic, got '" + ties + "'");
  }
  o.max_queries = config.get_uint("eval.max_queries");
  o.seed = config.get_uint("eval.seed");
  const auto regimes = config.get_list("eval.regimes");
  if (regimes.size() == 1 && regimes[0] == "all") {
    o.regimes.assign(std::begin(kRegimes), std::end(kRegimes));
  } else {
    for (const auto& r : regimes) o.regimes.push_back(parse_regime(r));
  }
  o.regime_query_type = parse_query_type(config.get("eval.regime_query_type"));
  o.compounding = config.get_bool("eval.compounding");
  o.compounding_k = config.get_uint("eval.compounding_k");
  o.dump = config.get_bool("eval.dump");
  return o;
}

EvalReport evaluate_to_dir(const EmbeddingModel& model, const SplitArtifacts& split,
                           const EvalOptions& options, const Retrainer& retrain, const fs::path& out_dir,
                           std::ostream& log) {
  fs::create_directories(out_dir);
  const auto uses = [&](StrategyKind k) {
    return std::find(options.strategies.begin(), options.strategies.end(), k) != options.strategies.end();
  };

  std::array<std::vector<std::size_t>, 3> picked;
  std::array<std::vector<QueryRecord>, 3> queries;
  for (QueryType t : kQueryTypes) {
    const auto& all = split.queries.of(t);
    picked[static_cast<int>(t)] = pick_queries(all.size(), options.max_queries, options.seed, t);
    for (std::size_t i : picked[static_cast<int>(t)]) queries[static_cast<int>(t)].push_back(all[i]);
  }

  const auto fit = [&](const EmbeddingModel& m, const Dataset& data) {
    auto thr = fit_filter_thresholds(m, data.attribute_items);
    log << "fitted filter thresholds for " << thr.per_attribute.size() << " attributes";
    if (!thr.without_positives.empty()) log << " (" << thr.without_positives.size() << " without training items)";
    log << "\n";
    return thr;
  };
  std::optional<FilterThresholds> thresholds;
  if (uses(StrategyKind::filter) || options.compounding) {
    thresholds = fit(model, split.data);
    std::ostringstream out;
    out << "attribute\tthreshold\n";
    for (Index a = 0; a < thresholds->per_attribute.size(); ++a) {
      out << split.data.vocab.attributes.id(a) << '\t' << format_real(thresholds->per_attribute[a]) << '\n';
    }
    write_file(out_dir / "thresholds.tsv", out.str());
  }
  const auto strategy_of = [&](StrategyKind k, const FilterThresholds* thr) {
    Strategy s{k, {}};
    if (k == StrategyKind::filter) s.thresholds = thr->per_attribute;
    return s;
  };

  EvalReport report;
  nlohmann::ordered_json line;
  std::string dump;
  // ranks[type][strategy] for reuse by the compounding analysis
  std::array<std::array<std::vector<std::size_t>, 3>, 3> ranks;
  for (QueryType t : options.query_types) {
    const auto& qs = queries[static_cast<int>(t)];
    for (StrategyKind k : options.strategies) {
      const auto result = full_vocab_eval(model, strategy_of(k, thresholds ? &*thresholds : nullptr), qs,
                                          options.rank, &split.data);
      report.rows.push_back({t, k, result.summary});
      ranks[static_cast<int>(t)][static_cast<int>(k)] = result.ranks;
      log << to_string(t) << "/" << to_string(k) << ": HR@10 " << format_real(result.summary.hr10) << "  HR@50 "
          << format_real(result.summary.hr50) << "  (" << qs.size() << " queries)\n";
      if (options.dump) {
        for (std::size_t i = 0; i < qs.size(); ++i) {
          line = nlohmann::ordered_json::object();
          line["query_type"] = to_string(t);
          line["strategy"] = to_string(k);
          line["query_id"] = picked[static_cast<int>(t)][i];
          line["rank"] = result.ranks[i];
          line["score"] = result.target_scores[i];
          dump += line.dump() + "\n";
        }
      }
    }
  }

  if (options.compounding) {
    const auto& qs = queries[static_cast<int>(QueryType::inter)];
    auto& r = ranks[static_cast<int>(QueryType::inter)];
    for (StrategyKind k : kStrategyKinds) {
      if (r[static_cast<int>(k)].size() != qs.size() || qs.empty()) {
        r[static_cast<int>(k)] = full_vocab_eval(model, strategy_of(k, &*thresholds), qs, options.rank, &split.data).ranks;
      }
    }
    report.compounding_k = options.compounding_k;
    report.compounding = compounding_analysis(model, thresholds->per_attribute, qs, r[0], r[1], r[2],
                                              options.compounding_k);
    write_file(out_dir / "compounding.tsv", format_compounding_tsv(*report.compounding, options.compounding_k));
  }

  if (!options.regimes.empty()) {
    const auto& qs = queries[static_cast<int>(options.regime_query_type)];
    const auto& full = split.queries.of(options.regime_query_type);
    constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
    // hr[strategy][k][regime]
    std::array<std::array<std::array<double, 4>, 3>, 3> hr;
    for (auto& per_k : hr) {
      for (auto& per_regime : per_k) per_regime.fill(kMissing);
    }
    for (Regime regime : options.regimes) {
      std::unique_ptr<EmbeddingModel> owned;
      const EmbeddingModel* m = &model;
      SplitArtifacts variant;
      const SplitArtifacts* data = &split;
      if (regime != Regime::set_theoretic) {
        variant.data = spectrum_variant(split.data, full, regime);
        variant.queries = split.queries;
        variant.config = split.config;
        log << "spectrum: training on the " << to_string(regime) << " variant\n";
        owned = retrain(variant, regime);
        m = owned.get();
        data = &variant;
      }
      std::optional<FilterThresholds> thr;
      if (uses(StrategyKind::filter)) thr = fit(*m, data->data);
      for (StrategyKind k : options.strategies) {
        const auto res = full_vocab_eval(*m, strategy_of(k, thr ? &*thr : nullptr), qs, options.rank, &data->data);
        for (std::size_t ki = 0; ki < 3; ++ki) {
          hr[static_cast<int>(k)][ki][static_cast<int>(regime)] = res.summary.hr(kReportKs[ki]);
        }
      }
    }
    for (StrategyKind k : options.strategies) {
      for (std::size_t ki = 0; ki < 3; ++ki) {
        const auto& h = hr[static_cast<int>(k)][ki];
        SpectrumRow row = spectrum_report(std::string(to_string(model.family())) + "-" + std::string(to_string(k)),
                                          kReportKs[ki], h);
        if (std::isnan(h[0]) || std::isnan(h[3])) row.gap.reset();
        report.spectrum.push_back(row);
      }
    }
    write_file(out_dir / "spectrum.tsv", format_spectrum_tsv(report.spectrum));
  }

  write_file(out_dir / "report.tsv", format_report_tsv(report));
  write_file(out_dir / "summary.txt", format_report_summary(report));
  if (options.dump) write_file(out_dir / "queries.jsonl", dump);
  return report;
}

EvalReport cmd_eval(const RunConfig& config, Streams io) {
  const auto split = read_split_dir(config.get("data.split_dir"));
  const fs::path checkpoint_dir = config.get("model.checkpoint");
  const Checkpoint ck = load_checkpoint(checkpoint_dir);
  if (!(ck.vocab.users == split.data.vocab.users && ck.vocab.items == split.data.vocab.items &&
        ck.vocab.attributes == split.data.vocab.attributes)) {
    throw InputError("checkpoint " + checkpoint_dir.string() + " was not trained on split " +
                     config.get("data.split_dir") + " (vocabularies differ)");
  }
  const fs::path out_dir = config.get("eval.out");

  ModelConfig mc = config.model_config();
  mc.family = ck.model->family();
  mc.dim = ck.model->dim();
  if (const auto* box = dynamic_cast<const BoxModel*>(ck.model.get())) mc.temps = box->temps();
  const TrainConfig tc = config.train_config();
  const Retrainer retrain = [&](const SplitArtifacts& variant, Regime regime) {
    const fs::path dir = out_dir / ("regime_" + std::string(to_string(regime)));
    return train_to_checkpoint(mc, tc, variant, config.get_uint("train.eval_negatives"),
                               config.get_uint("train.eval_seed"), dir / "checkpoint", dir / "train_log.tsv", io.log)
        .model;
  };
  auto report = evaluate_to_dir(*ck.model, split, EvalOptions::from(config), retrain, out_dir, io.log);
  io.out << format_report_summary(report);
  return report;
}

void cmd_query(const RunConfig& config, const std::string& expression, Streams io) {
  const auto expr = parse_query_expression(expression);
  const Checkpoint ck = load_checkpoint(config.get("model.checkpoint"));
  const QueryShape shape = resolve_query(expr, ck.vocab);
  const StrategyKind kind = parse_strategy(config.get("query.strategy"));
  Strategy strategy{kind, {}};
  if (kind == StrategyKind::filter) {
    const auto split = read_split_dir(config.get("data.split_dir"));
    io.log << "fitting filter thresholds on " << config.get("data.split_dir") << "\n";
    strategy.thresholds = fit_filter_thresholds(*ck.model, split.data.attribute_items).per_attribute;
  }
  QueryRanker ranker(*ck.model, strategy);
  const auto order = ranker.ranking(shape);
  const std::size_t k = std::min(config.get_uint("query.top_k"), order.size());
  io.out << "rank\titem\tscore" << (kind == StrategyKind::filter ? "\tin" : "") << "\n";
  for (std::size_t r = 0; r < k; ++r) {
    const Index m = order[r];
    io.out << r + 1 << '\t' << ck.vocab.items.id(m) << '\t' << format_real(ranker.scores()[m]);
    if (kind == StrategyKind::filter) io.out << '\t' << (ranker.in()[m] ? "in" : "out");
    io.out << '\n';
  }
}

const FamilyOutcome& SynthOutcome::of(Family f) const {
  for (const auto& o : families) {
    if (o.family == f) return o;
  }
  throw LookupError("family " + std::string(to_string(f)) + " was not part of this experiment");
}

SynthOutcome cmd_synth(const RunConfig& config, Streams io) {
  const fs::path out = config.get("synth.out");
  fs::create_directories(out);
  write_file(out / "config.txt", config.dump());

  const auto syn = synthetic_generate(config.synthetic_config());
  write_synthetic_tsv(out / "data", syn);
  const Dataset raw = ingest(out / "data" / "user_item.tsv", out / "data" / "attribute_item.tsv");
  SynthOutcome outcome;
  outcome.split = run_split(filter_min_frequency(raw, config.frequency_thresholds()), config.split_config());
  write_split_dir(out / "split", outcome.split);
  io.out << format_split_counts(outcome.split);

  const auto spectrum_families = config.get_list("synth.spectrum_families");
  std::ostringstream summary;
  summary << "family\tinitial_ndcg\tbest_ndcg\tbest_epoch\tepochs\n";
  std::string reports;
  for (const auto& name : config.get_list("synth.families")) {
    const Family family = parse_family(name);
    const ModelConfig mc = synth_model_config(config, family);
    const TrainConfig tc = synth_train_config(config, family);
    const fs::path dir = out / std::string(to_string(family));
    const auto eval_negatives = config.get_uint("train.eval_negatives");
    const auto eval_seed = config.get_uint("train.eval_seed");
    auto trained = train_to_checkpoint(mc, tc, outcome.split, eval_negatives, eval_seed, dir / "checkpoint",
                                       dir / "train_log.tsv", io.log);

    EvalOptions options = EvalOptions::from(config);
    options.strategies.assign(std::begin(kStrategyKinds), std::end(kStrategyKinds));
    options.compounding = true;
    options.regimes.clear();
    if (contains(spectrum_families, name)) options.regimes.assign(std::begin(kRegimes), std::end(kRegimes));
    const Retrainer retrain = [&](const SplitArtifacts& variant, Regime regime) {
      const fs::path rdir = dir / "eval" / ("regime_" + std::string(to_string(regime)));
      return train_to_checkpoint(mc, tc, variant, eval_negatives, eval_seed, rdir / "checkpoint",
                                 rdir / "train_log.tsv", io.log)
          .model;
    };
    FamilyOutcome fo;
    fo.family = family;
    fo.initial = trained.initial;
    fo.best_ndcg = trained.best_ndcg;
    fo.best_epoch = trained.best_epoch;
    fo.epochs = trained.epochs;
    fo.report = evaluate_to_dir(*trained.model, outcome.split, options, retrain, dir / "eval", io.log);
    summary << name << '\t' << format_real(fo.initial.ndcg) << '\t' << format_real(fo.best_ndcg) << '\t'
            << fo.best_epoch << '\t' << fo.epochs << '\n';
    reports += "\n== " + name + "\n" + format_report_summary(fo.report);
    outcome.families.push_back(std::move(fo));
  }
  const std::string text = summary.str() + reports;
  write_file(out / "summary.txt", text);
  io.out << text;
  return outcome;
}

}  // namespace boxrec::cli
