#include "boxrec/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <string>

#include "boxrec/errors.hpp"
#include "boxrec/io.hpp"
#include "boxrec/random.hpp"

namespace fs = std::filesystem;

namespace boxrec {
namespace {

struct RawPair {
  std::string row;
  std::string item;
};

std::vector<RawPair> read_interactions(const fs::path& path, std::optional<double> min_rating) {
  if (!fs::exists(path)) throw InputError("input file not found: " + path.string());
  std::vector<RawPair> out;
  for_each_tsv_row(path, [&](std::size_t line, const std::vector<std::string_view>& cols) {
    if (cols.size() < 2 || cols.size() > 3) {
      throw ParseError(path.string(), line, "expected row_id<TAB>item_id[<TAB>value]");
    }
    const auto row = trim(cols[0]);
    const auto item = trim(cols[1]);
    if (row.empty() || item.empty()) throw ParseError(path.string(), line, "empty id");
    if (cols.size() == 3) {
      const double value = parse_real(cols[2], path.string(), line);
      if (min_rating && value < *min_rating) return;
    }
    out.push_back({std::string(row), std::string(item)});
  });
  return out;
}

}  // namespace

Dataset ingest(const fs::path& user_item_path, const fs::path& attribute_item_path,
               std::optional<double> min_rating) {
  const auto user_rows = read_interactions(user_item_path, min_rating);
  const auto attr_rows = read_interactions(attribute_item_path, min_rating);

  Dataset data;
  std::vector<Pair> up, ap;
  for (const auto& r : user_rows) up.push_back({data.vocab.users.add(r.row), data.vocab.items.add(r.item)});
  for (const auto& r : attr_rows) {
    ap.push_back({data.vocab.attributes.add(r.row), data.vocab.items.add(r.item)});
  }
  data.user_items = InteractionSet(data.vocab.users.size(), data.vocab.items.size());
  data.attribute_items = InteractionSet(data.vocab.attributes.size(), data.vocab.items.size());
  for (const auto& p : up) data.user_items.add(p);
  for (const auto& p : ap) data.attribute_items.add(p);
  BOXREC_REQUIRE(!data.user_items.empty(), "no user-item interactions in " + user_item_path.string());
  BOXREC_REQUIRE(!data.attribute_items.empty(),
                 "no attribute-item interactions in " + attribute_item_path.string());
  return data;
}

Dataset filter_min_frequency(const Dataset& data, const FrequencyThresholds& thresholds) {
  BOXREC_REQUIRE(!data.user_items.empty() && !data.attribute_items.empty(),
                 "filter_min_frequency: empty input");
  const auto upairs = data.user_items.pairs();
  const auto apairs = data.attribute_items.pairs();
  std::vector<char> user_alive(data.vocab.users.size(), 1);
  std::vector<char> item_alive(data.vocab.items.size(), 1);
  std::vector<char> attr_alive(data.vocab.attributes.size(), 1);

  for (bool changed = true; changed;) {
    changed = false;
    std::vector<std::size_t> user_count(user_alive.size(), 0), item_count(item_alive.size(), 0);
    for (const auto& p : upairs) {
      if (user_alive[p.row] && item_alive[p.item]) {
        ++user_count[p.row];
        ++item_count[p.item];
      }
    }
    for (std::size_t u = 0; u < user_alive.size(); ++u) {
      if (user_alive[u] && user_count[u] < thresholds.min_user) user_alive[u] = 0, changed = true;
    }
    for (std::size_t m = 0; m < item_alive.size(); ++m) {
      if (item_alive[m] && item_count[m] < thresholds.min_item) item_alive[m] = 0, changed = true;
    }
    std::vector<std::size_t> attr_count(attr_alive.size(), 0);
    for (const auto& p : apairs) {
      if (attr_alive[p.row] && item_alive[p.item]) ++attr_count[p.row];
    }
    for (std::size_t a = 0; a < attr_alive.size(); ++a) {
      if (attr_alive[a] && attr_count[a] < thresholds.min_attribute) attr_alive[a] = 0, changed = true;
    }
  }

  auto reindex = [](const Vocab& old, const std::vector<char>& alive, Vocab& out) {
    std::vector<Index> map(old.size(), static_cast<Index>(-1));
    for (Index i = 0; i < old.size(); ++i) {
      if (alive[i]) map[i] = out.add(old.id(i));
    }
    return map;
  };
  Dataset out;
  const auto umap = reindex(data.vocab.users, user_alive, out.vocab.users);
  const auto imap = reindex(data.vocab.items, item_alive, out.vocab.items);
  const auto amap = reindex(data.vocab.attributes, attr_alive, out.vocab.attributes);
  BOXREC_REQUIRE(!out.vocab.users.empty() && !out.vocab.items.empty() && !out.vocab.attributes.empty(),
                 "frequency filtering removed every user, item or attribute");
  out.user_items = InteractionSet(out.vocab.users.size(), out.vocab.items.size());
  out.attribute_items = InteractionSet(out.vocab.attributes.size(), out.vocab.items.size());
  for (const auto& p : upairs) {
    if (user_alive[p.row] && item_alive[p.item]) out.user_items.add({umap[p.row], imap[p.item]});
  }
  for (const auto& p : apairs) {
    if (attr_alive[p.row] && item_alive[p.item]) out.attribute_items.add({amap[p.row], imap[p.item]});
  }
  return out;
}

std::string_view to_string(EpsilonMode m) {
  return m == EpsilonMode::fixed ? "fixed" : "independence_expectation";
}

EpsilonMode parse_epsilon_mode(std::string_view s) {
  if (s == "fixed") return EpsilonMode::fixed;
  if (s == "independence_expectation" || s == "independence") {
    return EpsilonMode::independence_expectation;
  }
  throw ContractViolation("unknown epsilon mode '" + std::string(s) + "'");
}

void SplitConfig::validate() const {
  BOXREC_REQUIRE(alpha > 0 && alpha < 1, "split alpha must lie in (0, 1)");
  BOXREC_REQUIRE(epsilon_fixed >= 0, "split epsilon must be non-negative");
}

SimpleSplit split_simple(const Dataset& data, const SplitConfig& config) {
  config.validate();
  BOXREC_REQUIRE(!data.user_items.empty() && !data.attribute_items.empty(), "split_simple: empty input");
  const std::size_t target =
      config.max_sample_size ? config.max_sample_size
                             : std::max<std::size_t>(1, data.user_items.size() / 10);

  SimpleSplit out{data, {}, 0};
  auto& U = out.data.user_items;
  auto& A = out.data.attribute_items;
  for (const auto& p : U.pairs()) U.set_partition(p, Partition::train);
  for (const auto& p : A.pairs()) A.set_partition(p, Partition::train);

  // Marginals frozen from the original matrices.
  const auto items_of_attr = data.attribute_items.items_by_row();
  const auto users_of_item = data.user_items.rows_by_item();
  const auto items_of_user = data.user_items.items_by_row();
  std::vector<double> p_attr(items_of_attr.size()), p_item(users_of_item.size()), p_user(items_of_user.size());
  for (std::size_t a = 0; a < p_attr.size(); ++a) p_attr[a] = static_cast<double>(items_of_attr[a].size());
  for (std::size_t m = 0; m < p_item.size(); ++m) p_item[m] = static_cast<double>(users_of_item[m].size());
  for (std::size_t u = 0; u < p_user.size(); ++u) p_user[u] = static_cast<double>(items_of_user[u].size());

  Rng rng(config.seed);
  std::vector<double> w;
  const std::size_t max_attempts = 100 * target;
  while (out.queries.size() < target && out.attempts < max_attempts) {
    ++out.attempts;
    const std::size_t a = rng.weighted(p_attr);
    if (a == p_attr.size()) break;
    const auto& items = items_of_attr[a];
    w.resize(items.size());
    for (std::size_t k = 0; k < items.size(); ++k) w[k] = p_item[items[k]];
    const std::size_t mk = rng.weighted(w);
    if (mk == items.size()) continue;
    const Index m = items[mk];
    const auto& users = users_of_item[m];
    w.resize(users.size());
    for (std::size_t k = 0; k < users.size(); ++k) w[k] = p_user[users[k]];
    const std::size_t uk = rng.weighted(w);
    if (uk == users.size()) continue;
    const Index u = users[uk];
    if (U.in({u, m}, Partition::eval)) continue;
    U.set_partition({u, m}, Partition::eval);
    A.set_partition({a, m}, Partition::eval);
    out.queries.push_back(make_simple_query(u, a, m));
  }
  BOXREC_REQUIRE(!out.queries.empty(), "split sampler stalled before producing any query");
  return out;
}

ViablePairs viable_pairs(const InteractionSet& attribute_items, const SplitConfig& config) {
  config.validate();
  const auto sets = attribute_items.items_by_row();
  const double n_items = static_cast<double>(attribute_items.items());
  const double alpha = config.alpha;
  ViablePairs out;
  for (Index a1 = 0; a1 < sets.size(); ++a1) {
    for (Index a2 = 0; a2 < sets.size(); ++a2) {
      if (a1 == a2) continue;
      const auto& s1 = sets[a1];
      const auto& s2 = sets[a2];
      std::size_t common = 0;
      for (std::size_t i = 0, j = 0; i < s1.size() && j < s2.size();) {
        if (s1[i] < s2[j]) ++i;
        else if (s2[j] < s1[i]) ++j;
        else ++common, ++i, ++j;
      }
      const double n1 = static_cast<double>(s1.size());
      const double n2 = static_cast<double>(s2.size());
      const double inter = static_cast<double>(common);
      const double diff = n1 - inter;
      const double not2 = n_items - n2;
      const bool fixed = config.epsilon_mode == EpsilonMode::fixed;
      const double eps_inter = fixed ? config.epsilon_fixed : n1 * n2 / n_items;
      const double eps_diff = fixed ? config.epsilon_fixed : n1 * not2 / n_items;
      if (inter > eps_inter && inter < alpha * n1 && inter < alpha * n2) {
        out.intersection.emplace_back(a1, a2);
      }
      if (diff > eps_diff && diff < alpha * n1 && diff < alpha * not2) {
        out.difference.emplace_back(a1, a2);
      }
    }
  }
  return out;
}

std::pair<std::vector<QueryRecord>, std::vector<QueryRecord>> generate_complex(
    const Dataset& split, const ViablePairs& viable) {
  const auto& A = split.attribute_items;
  const std::set<AttributePair> inter_ok(viable.intersection.begin(), viable.intersection.end());
  std::vector<std::vector<Index>> diff_partners(A.rows());
  for (const auto& [a1, a2] : viable.difference) diff_partners[a1].push_back(a2);

  // eval attributes of each item
  std::vector<std::vector<Index>> eval_attrs(A.items());
  for (const auto& p : A.pairs(Partition::eval)) eval_attrs[p.item].push_back(p.row);

  std::vector<QueryRecord> inter, neg;
  for (const auto& [u, m] : split.user_items.pairs(Partition::eval)) {
    const auto& attrs = eval_attrs[m];
    for (std::size_t i = 0; i < attrs.size(); ++i) {
      for (std::size_t j = i + 1; j < attrs.size(); ++j) {
        const Index a1 = std::min(attrs[i], attrs[j]);
        const Index a2 = std::max(attrs[i], attrs[j]);
        if (inter_ok.contains({a1, a2}) || inter_ok.contains({a2, a1})) {
          inter.push_back(make_inter_query(u, a1, a2, m));
        }
      }
      for (Index a2 : diff_partners[attrs[i]]) {
        if (!A.contains({a2, m})) neg.push_back(make_neg_query(u, attrs[i], a2, m));
      }
    }
  }
  for (auto* v : {&inter, &neg}) {
    std::sort(v->begin(), v->end());
    v->erase(std::unique(v->begin(), v->end()), v->end());
  }
  return {std::move(inter), std::move(neg)};
}

std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::weakest: return "weakest";
    case Regime::weak_user: return "weak_user";
    case Regime::weak_attribute: return "weak_attribute";
    case Regime::set_theoretic: return "set_theoretic";
  }
  return "?";
}

Regime parse_regime(std::string_view s) {
  for (Regime r : kRegimes) {
    if (to_string(r) == s) return r;
  }
  throw ContractViolation("unknown regime '" + std::string(s) + "'");
}

Dataset spectrum_variant(const Dataset& split, const std::vector<QueryRecord>& queries,
                         Regime regime) {
  Dataset out = split;
  const bool add_user = regime == Regime::weakest || regime == Regime::weak_user;
  const bool add_attr = regime == Regime::weakest || regime == Regime::weak_attribute;
  for (const auto& q : queries) {
    if (add_user && q.shape.user) {
      const Pair p{*q.shape.user, q.target};
      if (out.user_items.contains(p)) out.user_items.set_partition(p, Partition::train);
    }
    if (add_attr) {
      for (Index a : q.shape.positive_attributes) {
        const Pair p{a, q.target};
        if (out.attribute_items.contains(p)) out.attribute_items.set_partition(p, Partition::train);
      }
    }
  }
  return out;
}

SplitArtifacts run_split(const Dataset& filtered, SplitConfig config) {
  if (config.max_sample_size == 0) {
    config.max_sample_size = std::max<std::size_t>(1, filtered.user_items.size() / 10);
  }
  auto simple = split_simple(filtered, config);
  const auto viable = viable_pairs(simple.data.attribute_items, config);
  auto [inter, neg] = generate_complex(simple.data, viable);
  SplitArtifacts out;
  out.data = std::move(simple.data);
  out.queries.simple = std::move(simple.queries);
  out.queries.inter = std::move(inter);
  out.queries.neg = std::move(neg);
  out.config = config;
  out.viable_intersection = viable.intersection.size();
  out.viable_difference = viable.difference.size();
  out.attempts = simple.attempts;
  return out;
}

// ---------------------------------------------------------------------------
// Split directory

namespace {

void write_pairs(const fs::path& path, const InteractionSet& set, Partition part, const Vocab& rows,
                 const Vocab& items) {
  std::string out;
  for (const auto& p : set.pairs(part)) out += rows.id(p.row) + "\t" + items.id(p.item) + "\n";
  write_file(path, out);
}

void read_pairs(const fs::path& path, InteractionSet& set, Partition part, const Vocab& rows,
                const Vocab& items) {
  for_each_tsv_row(path, [&](std::size_t line, const std::vector<std::string_view>& cols) {
    if (cols.size() != 2) throw ParseError(path.string(), line, "expected row_id<TAB>item_id");
    const auto r = rows.find(cols[0]);
    const auto m = items.find(cols[1]);
    if (!r || !m) throw ParseError(path.string(), line, "id not in split vocabulary");
    if (!set.add({*r, *m}, part)) throw ParseError(path.string(), line, "duplicate pair");
  });
}

void write_queries(const fs::path& path, const std::vector<QueryRecord>& qs, const Vocabularies& v) {
  std::string out;
  for (const auto& q : qs) {
    out += v.users.id(*q.shape.user);
    for (Index a : q.shape.positive_attributes) out += "\t" + v.attributes.id(a);
    if (q.shape.negated_attribute) out += "\t" + v.attributes.id(*q.shape.negated_attribute);
    out += "\t" + v.items.id(q.target) + "\n";
  }
  write_file(path, out);
}

std::vector<QueryRecord> read_queries(const fs::path& path, QueryType type, const Vocabularies& v) {
  std::vector<QueryRecord> out;
  const std::size_t expected = type == QueryType::simple ? 3 : 4;
  for_each_tsv_row(path, [&](std::size_t line, const std::vector<std::string_view>& cols) {
    if (cols.size() != expected) throw ParseError(path.string(), line, "wrong column count");
    auto look = [&](const Vocab& voc, std::string_view id) {
      auto i = voc.find(id);
      if (!i) throw ParseError(path.string(), line, "unknown id '" + std::string(id) + "'");
      return *i;
    };
    const Index u = look(v.users, cols[0]);
    const Index a1 = look(v.attributes, cols[1]);
    if (type == QueryType::simple) {
      out.push_back(make_simple_query(u, a1, look(v.items, cols[2])));
      return;
    }
    const Index a2 = look(v.attributes, cols[2]);
    const Index m = look(v.items, cols[3]);
    out.push_back(type == QueryType::inter ? make_inter_query(u, a1, a2, m) : make_neg_query(u, a1, a2, m));
  });
  return out;
}

}  // namespace

void write_split_dir(const fs::path& dir, const SplitArtifacts& split) {
  fs::create_directories(dir);
  const auto& d = split.data;
  write_vocabularies(dir, d.vocab);
  write_pairs(dir / "du_train.tsv", d.user_items, Partition::train, d.vocab.users, d.vocab.items);
  write_pairs(dir / "du_eval.tsv", d.user_items, Partition::eval, d.vocab.users, d.vocab.items);
  write_pairs(dir / "da_train.tsv", d.attribute_items, Partition::train, d.vocab.attributes, d.vocab.items);
  write_pairs(dir / "da_eval.tsv", d.attribute_items, Partition::eval, d.vocab.attributes, d.vocab.items);
  write_queries(dir / "queries_simple.tsv", split.queries.simple, d.vocab);
  write_queries(dir / "queries_inter.tsv", split.queries.inter, d.vocab);
  write_queries(dir / "queries_neg.tsv", split.queries.neg, d.vocab);

  std::ostringstream m;
  m << "seed=" << split.config.seed << "\n"
    << "epsilon_mode=" << to_string(split.config.epsilon_mode) << "\n"
    << "epsilon=" << format_real(split.config.epsilon_fixed) << "\n"
    << "alpha=" << format_real(split.config.alpha) << "\n"
    << "max_sample_size=" << split.config.max_sample_size << "\n"
    << "attempts=" << split.attempts << "\n"
    << "users=" << d.vocab.users.size() << "\n"
    << "items=" << d.vocab.items.size() << "\n"
    << "attributes=" << d.vocab.attributes.size() << "\n"
    << "du_train=" << d.user_items.count(Partition::train) << "\n"
    << "du_eval=" << d.user_items.count(Partition::eval) << "\n"
    << "da_train=" << d.attribute_items.count(Partition::train) << "\n"
    << "da_eval=" << d.attribute_items.count(Partition::eval) << "\n"
    << "queries_simple=" << split.queries.simple.size() << "\n"
    << "queries_inter=" << split.queries.inter.size() << "\n"
    << "queries_neg=" << split.queries.neg.size() << "\n"
    << "viable_intersection=" << split.viable_intersection << "\n"
    << "viable_difference=" << split.viable_difference << "\n";
  write_file(dir / "split_manifest.txt", m.str());
}

SplitArtifacts read_split_dir(const fs::path& dir) {
  if (!fs::exists(dir / "split_manifest.txt")) {
    throw InputError("not a split directory (no split_manifest.txt): " + dir.string());
  }
  SplitArtifacts out;
  auto& d = out.data;
  d.vocab = read_vocabularies(dir);
  d.user_items = InteractionSet(d.vocab.users.size(), d.vocab.items.size());
  d.attribute_items = InteractionSet(d.vocab.attributes.size(), d.vocab.items.size());
  read_pairs(dir / "du_train.tsv", d.user_items, Partition::train, d.vocab.users, d.vocab.items);
  read_pairs(dir / "du_eval.tsv", d.user_items, Partition::eval, d.vocab.users, d.vocab.items);
  read_pairs(dir / "da_train.tsv", d.attribute_items, Partition::train, d.vocab.attributes, d.vocab.items);
  read_pairs(dir / "da_eval.tsv", d.attribute_items, Partition::eval, d.vocab.attributes, d.vocab.items);
  out.queries.simple = read_queries(dir / "queries_simple.tsv", QueryType::simple, d.vocab);
  out.queries.inter = read_queries(dir / "queries_inter.tsv", QueryType::inter, d.vocab);
  out.queries.neg = read_queries(dir / "queries_neg.tsv", QueryType::neg, d.vocab);

  const auto manifest = dir / "split_manifest.txt";
  const auto kv = read_key_values(manifest);
  auto get = [&](const char* key) -> std::string {
    auto it = kv.find(key);
    return it == kv.end() ? std::string() : it->second;
  };
  const std::string where = manifest.string();
  if (auto s = get("seed"); !s.empty()) out.config.seed = parse_uint(s, where, 0);
  if (auto s = get("epsilon_mode"); !s.empty()) out.config.epsilon_mode = parse_epsilon_mode(s);
  if (auto s = get("epsilon"); !s.empty()) out.config.epsilon_fixed = parse_real(s, where, 0);
  if (auto s = get("alpha"); !s.empty()) out.config.alpha = parse_real(s, where, 0);
  if (auto s = get("max_sample_size"); !s.empty()) out.config.max_sample_size = parse_uint(s, where, 0);
  if (auto s = get("attempts"); !s.empty()) out.attempts = parse_uint(s, where, 0);
  if (auto s = get("viable_intersection"); !s.empty()) out.viable_intersection = parse_uint(s, where, 0);
  if (auto s = get("viable_difference"); !s.empty()) out.viable_difference = parse_uint(s, where, 0);
  return out;
}

}  // namespace boxrec
