#include "boxrec/synthetic.hpp"

#include <string>

#include "boxrec/errors.hpp"
#include "boxrec/io.hpp"
#include "boxrec/random.hpp"

namespace boxrec {

void SyntheticConfig::validate() const {
  BOXREC_REQUIRE(n_users > 0 && n_items > 0 && n_attributes > 0 && latent_dim > 0,
                 "synthetic sizes must be positive");
  BOXREC_REQUIRE(dropout >= 0 && dropout < 1, "dropout must lie in [0, 1)");
  BOXREC_REQUIRE(0 < user_width_lo && user_width_lo <= user_width_hi && user_width_hi <= 1,
                 "user widths must lie in (0, 1]");
  BOXREC_REQUIRE(0 < attribute_width_lo && attribute_width_lo <= attribute_width_hi &&
                     attribute_width_hi <= 1,
                 "attribute widths must lie in (0, 1]");
}

bool Region::contains(std::span<const double> point) const {
  for (std::size_t d = 0; d < point.size(); ++d) {
    if (point[d] < lo[d] || point[d] > hi[d]) return false;
  }
  return true;
}

bool SyntheticData::member(EntityClass c, Index entity, Index item) const {
  switch (c) {
    case EntityClass::user: return user_regions.at(entity).contains(item_points.at(item));
    case EntityClass::attribute: return attribute_regions.at(entity).contains(item_points.at(item));
    case EntityClass::item: return entity == item;
  }
  return false;
}

bool SyntheticData::answers(const QueryShape& shape, Index item) const {
  shape.validate();
  if (shape.user && !member(EntityClass::user, *shape.user, item)) return false;
  for (Index a : shape.positive_attributes) {
    if (!member(EntityClass::attribute, a, item)) return false;
  }
  if (shape.negated_attribute && member(EntityClass::attribute, *shape.negated_attribute, item)) {
    return false;
  }
  return true;
}

SyntheticData synthetic_generate(const SyntheticConfig& config) {
  config.validate();
  Rng rng(config.seed);
  const std::size_t L = config.latent_dim;
  SyntheticData out;

  out.item_points.resize(config.n_items, std::vector<double>(L));
  for (auto& p : out.item_points) {
    for (auto& x : p) x = rng.uniform();
  }

  auto interval = [&](double w_lo, double w_hi, double& lo, double& hi) {
    const double w = rng.uniform(w_lo, w_hi);
    lo = rng.uniform(0.0, 1.0 - w);
    hi = lo + w;
  };

  out.user_regions.resize(config.n_users, Region{std::vector<double>(L), std::vector<double>(L)});
  for (auto& r : out.user_regions) {
    for (std::size_t d = 0; d < L; ++d) interval(config.user_width_lo, config.user_width_hi, r.lo[d], r.hi[d]);
  }

  out.attribute_regions.resize(config.n_attributes,
                               Region{std::vector<double>(L, 0.0), std::vector<double>(L, 1.0)});
  for (auto& r : out.attribute_regions) {
    const std::size_t constrained = (L >= 2 && rng.uniform() < 0.5) ? 2 : 1;
    const std::size_t d1 = rng.index(L);
    interval(config.attribute_width_lo, config.attribute_width_hi, r.lo[d1], r.hi[d1]);
    if (constrained == 2) {
      std::size_t d2 = rng.index(L - 1);
      if (d2 >= d1) ++d2;
      interval(config.attribute_width_lo, config.attribute_width_hi, r.lo[d2], r.hi[d2]);
    }
  }

  auto& data = out.dataset;
  for (std::size_t u = 0; u < config.n_users; ++u) data.vocab.users.add("u" + std::to_string(u));
  for (std::size_t m = 0; m < config.n_items; ++m) data.vocab.items.add("i" + std::to_string(m));
  for (std::size_t a = 0; a < config.n_attributes; ++a) data.vocab.attributes.add("a" + std::to_string(a));
  data.user_items = InteractionSet(config.n_users, config.n_items);
  data.attribute_items = InteractionSet(config.n_attributes, config.n_items);
  for (Index u = 0; u < config.n_users; ++u) {
    for (Index m = 0; m < config.n_items; ++m) {
      if (!out.user_regions[u].contains(out.item_points[m])) continue;
      // one draw per true membership keeps the stream aligned across dropout values
      const bool dropped = rng.uniform() < config.dropout;
      if (!dropped) data.user_items.add({u, m});
    }
  }
  for (Index a = 0; a < config.n_attributes; ++a) {
    for (Index m = 0; m < config.n_items; ++m) {
      if (out.attribute_regions[a].contains(out.item_points[m])) data.attribute_items.add({a, m});
    }
  }
  return out;
}

void write_synthetic_tsv(const std::filesystem::path& dir, const SyntheticData& data) {
  std::filesystem::create_directories(dir);
  const auto& d = data.dataset;
  std::string users, attrs;
  for (const auto& p : d.user_items.pairs()) users += d.vocab.users.id(p.row) + "\t" + d.vocab.items.id(p.item) + "\n";
  for (const auto& p : d.attribute_items.pairs()) {
    attrs += d.vocab.attributes.id(p.row) + "\t" + d.vocab.items.id(p.item) + "\n";
  }
  write_file(dir / "user_item.tsv", users);
  write_file(dir / "attribute_item.tsv", attrs);
}

}  // namespace boxrec
