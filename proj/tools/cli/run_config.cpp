#include "run_config.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>

#include "boxrec/errors.hpp"
#include "boxrec/io.hpp"

namespace boxrec::cli {

const std::vector<KeySpec>& config_keys() {
  static const std::vector<KeySpec> keys = {
      {"data.user_items", "", "user-item TSV (user, item[, rating])"},
      {"data.attribute_items", "", "attribute-item TSV (attribute, item)"},
      {"data.min_rating", "", "keep user-item rows with rating >= this (empty keeps all)"},
      {"data.min_user_count", "5", "drop users with fewer interactions"},
      {"data.min_item_count", "5", "drop items with fewer user interactions"},
      {"data.min_attribute_count", "20", "drop attributes with fewer items"},
      {"data.split_dir", "split", "split directory"},
      {"data.synthetic", "false", "split: generate a synthetic dataset instead of reading TSVs"},
      {"data.synthetic_users", "500", "synthetic users"},
      {"data.synthetic_items", "1000", "synthetic items"},
      {"data.synthetic_attributes", "40", "synthetic attributes"},
      {"data.synthetic_latent_dim", "4", "dimension of the synthetic ground-truth space"},
      {"data.synthetic_dropout", "0.1", "fraction of true user memberships left unobserved"},
      {"data.seed", "0", "synthetic generator seed"},

      {"split.max_sample_size", "0", "simple queries to draw (0: a tenth of D_U)"},
      {"split.epsilon_mode", "independence_expectation", "independence_expectation or fixed"},
      {"split.epsilon", "0", "lower bound on pair overlap when epsilon_mode = fixed"},
      {"split.alpha", "0.5", "upper bound on pair overlap as a fraction of each operand"},
      {"split.seed", "0", "sampler seed"},

      {"model.family", "box", "box or mf"},
      {"model.dim", "0", "embedding dimension (0: 64 for box, 128 for mf)"},
      {"model.tau", "2.0", "box intersection temperature"},
      {"model.nu", "0.01", "box volume temperature"},
      {"model.init_min_lo", "0.0", "box min corner init lower bound"},
      {"model.init_min_hi", "0.1", "box min corner init upper bound"},
      {"model.init_width_lo", "0.9", "box width init lower bound"},
      {"model.init_width_hi", "1.0", "box width init upper bound"},
      {"model.init_stddev", "0.1", "mf init standard deviation"},
      {"model.seed", "0", "initialization seed"},
      {"model.checkpoint", "checkpoint", "checkpoint directory"},

      {"train.learning_rate", "0.001", "optimizer step size"},
      {"train.batch_size", "128", "positives per batch"},
      {"train.negatives", "auto", "negatives per positive (auto: 20 box, 5 mf)"},
      {"train.attribute_loss_weight", "auto", "weight w of the user term; attributes get 1 - w (auto: 0.7 box, 0.5 mf)"},
      {"train.max_epochs", "100", "epoch limit"},
      {"train.patience", "5", "epochs without NDCG improvement before stopping"},
      {"train.beta1", "0.9", "first moment decay"},
      {"train.beta2", "0.999", "second moment decay"},
      {"train.epsilon", "1e-8", "optimizer epsilon"},
      {"train.exclude_positives", "false", "never sample a row's training items as negatives"},
      {"train.eval_negatives", "100", "negatives per tuple in model-selection eval"},
      {"train.eval_seed", "0", "negative sampling seed for model-selection eval"},
      {"train.seed", "0", "shuffling and negative sampling seed"},
      {"train.log", "train_log.tsv", "per-epoch log"},

      {"eval.out", "eval", "report directory"},
      {"eval.strategies", "filter,product,geometric", "aggregation strategies"},
      {"eval.query_types", "simple,inter,neg", "query sets to rank"},
      {"eval.mask_train", "false", "drop the user's training items from the ranking"},
      {"eval.ties", "index", "index (smaller index first) or pessimistic"},
      {"eval.max_queries", "0", "evaluate a seeded sample of at most this many queries per type (0: all)"},
      {"eval.seed", "0", "query subsampling seed"},
      {"eval.regimes", "", "spectrum regimes to train and rank: 'all' or a list (empty: none)"},
      {"eval.regime_query_type", "inter", "query set the spectrum is measured on"},
      {"eval.compounding", "false", "classify filter misses on intersection queries"},
      {"eval.compounding_k", "10", "cutoff for the compounding analysis"},
      {"eval.dump", "false", "write per-query ranks as JSON lines"},

      {"query.strategy", "geometric", "filter, product or geometric"},
      {"query.top_k", "10", "items to print"},

      {"synth.out", "synth", "experiment directory"},
      {"synth.families", "box,mf", "families to train"},
      {"synth.box_dim", "8", "box dimension"},
      {"synth.box_tau", "0.1", "box intersection temperature"},
      {"synth.box_nu", "0.1", "box volume temperature"},
      {"synth.box_learning_rate", "0.01", "box step size"},
      {"synth.box_max_epochs", "15", "box epoch limit"},
      {"synth.mf_dim", "16", "mf dimension"},
      {"synth.mf_learning_rate", "0.01", "mf step size"},
      {"synth.mf_max_epochs", "20", "mf epoch limit"},
      {"synth.spectrum_families", "box", "families that get the spectrum experiment"},
  };
  return keys;
}

std::string flag_name(std::string_view key) {
  std::string out = "--";
  for (char c : key) out += c == '_' ? '-' : c;
  return out;
}

RunConfig::RunConfig() {
  for (const auto& k : config_keys()) values_.emplace(k.key, k.default_value);
}

void RunConfig::set(std::string_view key, std::string value) {
  std::string canonical(key);
  std::replace(canonical.begin(), canonical.end(), '-', '_');
  auto it = values_.find(canonical);
  if (it == values_.end()) throw InputError("unknown configuration key '" + std::string(key) + "'");
  it->second = std::move(value);
}

void RunConfig::merge_file(const std::filesystem::path& path) {
  const auto kv = read_key_values(path);
  for (const auto& [k, v] : kv) {
    try {
      set(k, v);
    } catch (const InputError& e) {
      throw InputError(path.string() + ": " + e.what());
    }
  }
}

void RunConfig::override_seeds(std::uint64_t seed) {
  for (auto& [k, v] : values_) {
    if (k.ends_with(".seed") || k.ends_with("_seed")) v = std::to_string(seed);
  }
}

void RunConfig::apply_environment() {
  if (const char* s = std::getenv("BOXREC_SEED"); s && *s) {
    try {
      override_seeds(parse_uint(s));
    } catch (const InputError&) {
      throw InputError("BOXREC_SEED must be a non-negative integer, got '" + std::string(s) + "'");
    }
  }
}

const std::string& RunConfig::get(std::string_view key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ContractViolation("undeclared configuration key '" + std::string(key) + "'");
  return it->second;
}

namespace {

template <class F>
auto parse_key(std::string_view key, const std::string& value, F&& parse) {
  try {
    return parse(value);
  } catch (const InputError& e) {
    throw InputError(std::string(key) + ": " + e.what());
  }
}

}  // namespace

std::size_t RunConfig::get_uint(std::string_view key) const {
  return parse_key(key, get(key), [](const std::string& v) { return static_cast<std::size_t>(parse_uint(v)); });
}

double RunConfig::get_real(std::string_view key) const {
  return parse_key(key, get(key), [](const std::string& v) { return parse_real(v); });
}

bool RunConfig::get_bool(std::string_view key) const {
  const auto& v = get(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw InputError(std::string(key) + ": expected true or false, got '" + v + "'");
}

std::optional<double> RunConfig::get_optional_real(std::string_view key) const {
  const auto& v = get(key);
  if (v.empty() || v == "auto") return std::nullopt;
  return get_real(key);
}

std::optional<std::size_t> RunConfig::get_optional_uint(std::string_view key) const {
  const auto& v = get(key);
  if (v.empty() || v == "auto") return std::nullopt;
  return get_uint(key);
}

std::vector<std::string> RunConfig::get_list(std::string_view key) const {
  std::vector<std::string> out;
  std::stringstream in(get(key));
  std::string item;
  while (std::getline(in, item, ',')) {
    auto t = trim(item);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

std::string RunConfig::dump() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

ModelConfig RunConfig::model_config() const {
  ModelConfig c;
  c.family = parse_family(get("model.family"));
  c.dim = get_uint("model.dim");
  c.temps = {get_real("model.tau"), get_real("model.nu")};
  c.seed = get_uint("model.seed");
  c.init_min_lo = get_real("model.init_min_lo");
  c.init_min_hi = get_real("model.init_min_hi");
  c.init_width_lo = get_real("model.init_width_lo");
  c.init_width_hi = get_real("model.init_width_hi");
  c.init_vector_stddev = get_real("model.init_stddev");
  return c;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig c;
  c.learning_rate = get_real("train.learning_rate");
  c.batch_size = get_uint("train.batch_size");
  c.num_negatives = get_optional_uint("train.negatives");
  c.attribute_loss_weight = get_optional_real("train.attribute_loss_weight");
  c.max_epochs = get_uint("train.max_epochs");
  c.patience = get_uint("train.patience");
  c.seed = get_uint("train.seed");
  c.beta1 = get_real("train.beta1");
  c.beta2 = get_real("train.beta2");
  c.epsilon = get_real("train.epsilon");
  c.exclude_positives = get_bool("train.exclude_positives");
  c.validate();
  return c;
}

SplitConfig RunConfig::split_config() const {
  SplitConfig c;
  c.max_sample_size = get_uint("split.max_sample_size");
  c.epsilon_mode = parse_epsilon_mode(get("split.epsilon_mode"));
  c.epsilon_fixed = get_real("split.epsilon");
  c.alpha = get_real("split.alpha");
  c.seed = get_uint("split.seed");
  c.validate();
  return c;
}

FrequencyThresholds RunConfig::frequency_thresholds() const {
  return {get_uint("data.min_user_count"), get_uint("data.min_item_count"),
          get_uint("data.min_attribute_count")};
}

SyntheticConfig RunConfig::synthetic_config() const {
  SyntheticConfig c;
  c.n_users = get_uint("data.synthetic_users");
  c.n_items = get_uint("data.synthetic_items");
  c.n_attributes = get_uint("data.synthetic_attributes");
  c.latent_dim = get_uint("data.synthetic_latent_dim");
  c.dropout = get_real("data.synthetic_dropout");
  c.seed = get_uint("data.seed");
  c.validate();
  return c;
}

}  // namespace boxrec::cli
