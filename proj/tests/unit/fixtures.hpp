#pragma once

// Shared fixtures for the unit and acceptance tests: a model with scripted
// scores, random instances and exhaustive reference implementations.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "boxrec/errors.hpp"
#include "boxrec/models.hpp"
#include "boxrec/pipeline.hpp"
#include "boxrec/random.hpp"

namespace fixtures {

using namespace boxrec;

// Scores supplied by callbacks; enough of a model for ranking code.
class ScriptedModel final : public EmbeddingModel {
 public:
  using EntityFn = std::function<double(EntityClass, Index, Index)>;
  using QueryFn = std::function<double(const QueryShape&, Index)>;

  ScriptedModel(VocabSizes sizes, EntityFn entity, QueryFn query = {})
      : sizes_(sizes), entity_(std::move(entity)), query_(std::move(query)) {}

  Family family() const override { return Family::mf; }
  std::size_t dim() const override { return 1; }
  VocabSizes sizes() const override { return sizes_; }
  std::unique_ptr<EmbeddingModel> clone() const override { return std::make_unique<ScriptedModel>(*this); }
  double entity_score(EntityClass c, Index e, Index m) const override {
    check_index(c, e);
    check_index(EntityClass::item, m);
    return entity_(c, e, m);
  }
  double geometric_score(const QueryShape& q, Index m) const override { return query_(q, m); }
  double energy(EntityClass c, Index e, Index m) const override { return -std::log(entity_score(c, e, m)); }
  double energy_with_grad(EntityClass, Index, Index, LocalGrad&) const override {
    throw ContractViolation("not trainable");
  }
  void accumulate(const LocalGrad&, EntityClass, Index, Index, double, Gradients&) const override {}
  std::vector<std::span<double>> parameter_blocks() override { return {}; }
  std::vector<std::span<const double>> parameter_blocks() const override { return {}; }

 private:
  VocabSizes sizes_;
  EntityFn entity_;
  QueryFn query_;
};

inline double hashed_uniform(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  const std::uint64_t h = derive_seed(derive_seed(a, b), c);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

/// Every score an independent uniform draw fixed by (salt, query, item).
inline ScriptedModel random_model(VocabSizes sizes, std::uint64_t salt) {
  return ScriptedModel(
      sizes, [salt](EntityClass c, Index e, Index m) { return hashed_uniform(salt + static_cast<int>(c), e, m); },
      [salt](const QueryShape& q, Index m) {
        std::uint64_t key = q.user.value_or(99991);
        for (Index a : q.positive_attributes) key = derive_seed(key, a);
        if (q.negated_attribute) key = derive_seed(key, 1000003 + *q.negated_attribute);
        return hashed_uniform(salt, key, m);
      });
}

/// Users each holding `per_user` eval items and five train items.
inline Dataset users_with_eval(std::size_t users, std::size_t items, std::size_t per_user, std::uint64_t seed) {
  Dataset d;
  for (std::size_t i = 0; i < users; ++i) d.vocab.users.add("u" + std::to_string(i));
  for (std::size_t i = 0; i < items; ++i) d.vocab.items.add("m" + std::to_string(i));
  d.vocab.attributes.add("a0");
  d.user_items = InteractionSet(users, items);
  d.attribute_items = InteractionSet(1, items);
  d.attribute_items.add({0, 0});
  Rng rng(seed);
  for (Index u = 0; u < users; ++u) {
    while (d.user_items.count(Partition::eval) < (u + 1) * per_user) {
      d.user_items.add({u, rng.index(items)}, Partition::eval);
    }
    for (int j = 0; j < 5; ++j) d.user_items.add({u, rng.index(items)});
  }
  return d;
}

/// Position of `target` after a stable descending sort.
inline std::size_t brute_rank(std::span<const double> scores, std::size_t target) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
  return static_cast<std::size_t>(std::find(order.begin(), order.end(), target) - order.begin()) + 1;
}

/// Random users and attributes. Every fourth attribute is broad with a hole,
/// so both viability sets are populated.
inline Dataset random_instance(std::size_t users, std::size_t items, std::size_t attributes, std::size_t per_user,
                               std::size_t per_attribute, std::uint64_t seed) {
  Dataset d;
  for (std::size_t i = 0; i < users; ++i) d.vocab.users.add("u" + std::to_string(i));
  for (std::size_t i = 0; i < items; ++i) d.vocab.items.add("m" + std::to_string(i));
  for (std::size_t i = 0; i < attributes; ++i) d.vocab.attributes.add("a" + std::to_string(i));
  d.user_items = InteractionSet(users, items);
  d.attribute_items = InteractionSet(attributes, items);
  Rng rng(seed);
  for (Index u = 0; u < users; ++u) {
    for (std::size_t j = 0; j < per_user; ++j) d.user_items.add({u, rng.index(items)});
  }
  for (Index a = 0; a < attributes; ++a) {
    const Index center = rng.index(items);
    if (a % 4 == 3) {
      for (Index m = 0; m < items; ++m) {
        const bool in_hole = (m + items - center) % items < items / 4;
        if (rng.uniform() < (in_hole ? 0.1 : 0.95)) d.attribute_items.add({a, m});
      }
      continue;
    }
    const std::size_t n = per_attribute / 2 + rng.index(per_attribute);
    for (std::size_t j = 0; j < n; ++j) {
      const Index m = rng.uniform() < 0.6 ? (center + rng.index(items / 4)) % items : rng.index(items);
      d.attribute_items.add({a, m});
    }
  }
  return d;
}

using ItemSet = std::set<Index>;

inline std::vector<ItemSet> item_sets(const InteractionSet& s) {
  std::vector<ItemSet> out(s.rows());
  for (const auto& p : s.pairs()) out[p.row].insert(p.item);
  return out;
}

/// Exhaustive viability sets with the independence-expectation epsilon.
inline ViablePairs brute_viable(const InteractionSet& A, double alpha) {
  const auto sets = item_sets(A);
  const double n = static_cast<double>(A.items());
  ViablePairs out;
  for (Index a1 = 0; a1 < sets.size(); ++a1) {
    for (Index a2 = 0; a2 < sets.size(); ++a2) {
      if (a1 == a2) continue;
      std::vector<Index> shared;
      std::set_intersection(sets[a1].begin(), sets[a1].end(), sets[a2].begin(), sets[a2].end(),
                            std::back_inserter(shared));
      const double s1 = static_cast<double>(sets[a1].size()), s2 = static_cast<double>(sets[a2].size());
      const double both = static_cast<double>(shared.size());
      const double only1 = s1 - both;
      if (both > s1 * s2 / n && both < alpha * s1 && both < alpha * s2) out.intersection.emplace_back(a1, a2);
      if (only1 > s1 * (n - s2) / n && only1 < alpha * s1 && only1 < alpha * (n - s2)) {
        out.difference.emplace_back(a1, a2);
      }
    }
  }
  return out;
}

/// Every (intersection, negation) query an eval (u, m) admits, by enumeration
/// over all attribute pairs.
inline std::pair<std::set<QueryRecord>, std::set<QueryRecord>> brute_complex(const Dataset& split,
                                                                             const ViablePairs& v) {
  const std::set<AttributePair> inter_ok(v.intersection.begin(), v.intersection.end());
  const std::set<AttributePair> diff_ok(v.difference.begin(), v.difference.end());
  const auto& A = split.attribute_items;
  std::set<QueryRecord> inter, neg;
  for (const auto& [u, m] : split.user_items.pairs(Partition::eval)) {
    for (Index a1 = 0; a1 < A.rows(); ++a1) {
      for (Index a2 = 0; a2 < A.rows(); ++a2) {
        if (a1 == a2 || !A.in({a1, m}, Partition::eval)) continue;
        if (a1 < a2 && A.in({a2, m}, Partition::eval) && inter_ok.contains({a1, a2})) {
          inter.insert(make_inter_query(u, a1, a2, m));
        }
        if (!A.contains({a2, m}) && diff_ok.contains({a1, a2})) neg.insert(make_neg_query(u, a1, a2, m));
      }
    }
  }
  return {inter, neg};
}

}  // namespace fixtures
