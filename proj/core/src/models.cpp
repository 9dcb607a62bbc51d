#include "boxrec/models.hpp"

#include <cmath>
#include <string>

#include "boxrec/errors.hpp"
#include "boxrec/random.hpp"

namespace boxrec {
namespace {

std::size_t slot(EntityClass c) { return static_cast<std::size_t>(c); }

}  // namespace

std::string_view to_string(EntityClass c) {
  switch (c) {
    case EntityClass::user: return "user";
    case EntityClass::item: return "item";
    case EntityClass::attribute: return "attribute";
  }
  return "?";
}

std::string_view to_string(Family f) { return f == Family::box ? "box" : "mf"; }

Family parse_family(std::string_view s) {
  if (s == "box") return Family::box;
  if (s == "mf") return Family::mf;
  throw ContractViolation("unknown model family '" + std::string(s) + "' (expected box or mf)");
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double inverse_softplus(double y) {
  BOXREC_REQUIRE(y > 0, "inverse_softplus: argument must be positive");
  // log(e^y - 1), rearranged for large y
  return y > 30 ? y + std::log1p(-std::exp(-y)) : std::log(std::expm1(y));
}

std::size_t VocabSizes::of(EntityClass c) const {
  switch (c) {
    case EntityClass::user: return users;
    case EntityClass::item: return items;
    case EntityClass::attribute: return attributes;
  }
  return 0;
}

ParameterTable::ParameterTable(EntityClass c, std::size_t n, std::size_t d)
    : entity_class(c), count(n), dim(d), values(n * d, 0.0) {}

std::size_t ModelConfig::resolved_dim() const {
  if (dim != 0) return dim;
  return family == Family::box ? kDefaultBoxDim : kDefaultVectorDim;
}

void ModelConfig::validate() const {
  if (family == Family::box) {
    temps.validate();
    BOXREC_REQUIRE(init_min_lo <= init_min_hi, "init min range is empty");
    BOXREC_REQUIRE(0 < init_width_lo && init_width_lo <= init_width_hi,
                   "init width range must be positive");
  } else {
    BOXREC_REQUIRE(init_vector_stddev >= 0, "init stddev must be non-negative");
  }
}

// ---------------------------------------------------------------------------

Gradients EmbeddingModel::make_gradients() const {
  Gradients grads;
  for (auto block : parameter_blocks()) grads.emplace_back(block.size(), 0.0);
  return grads;
}

std::size_t EmbeddingModel::reals_per_entity() const {
  return family() == Family::box ? 2 * dim() : dim();
}

void EmbeddingModel::check_index(EntityClass c, Index i) const {
  if (i >= sizes().of(c)) {
    throw LookupError(std::string(to_string(c)) + " index " + std::to_string(i) +
                      " out of range (" + std::to_string(sizes().of(c)) + ")");
  }
}

// ---------------------------------------------------------------------------
// BoxModel

BoxModel::BoxModel(std::size_t dim, GumbelTemps temps, VocabSizes sizes)
    : dim_(dim), temps_(temps), sizes_(sizes) {
  BOXREC_REQUIRE(dim > 0, "box dimension must be positive");
  temps_.validate();
  for (EntityClass c : kEntityClasses) {
    tables_[slot(c)] = {ParameterTable(c, sizes.of(c), dim), ParameterTable(c, sizes.of(c), dim)};
  }
  sync();
}

std::unique_ptr<EmbeddingModel> BoxModel::clone() const { return std::make_unique<BoxModel>(*this); }

BoxParameterTable& BoxModel::table(EntityClass c) {
  dirty_ = true;
  return tables_[slot(c)];
}
const BoxParameterTable& BoxModel::table(EntityClass c) const { return tables_[slot(c)]; }

void BoxModel::sync() {
  for (EntityClass c : kEntityClasses) {
    const auto& t = tables_[slot(c)];
    auto& max = realized_max_[slot(c)];
    max.resize(t.min_params.values.size());
    for (std::size_t k = 0; k < max.size(); ++k) {
      max[k] = t.min_params.values[k] + softplus(t.width_params.values[k]);
    }
  }
  dirty_ = false;
}

BoxView BoxModel::box(EntityClass c, Index i) const {
  BOXREC_REQUIRE(!dirty_, "box parameters changed without sync()");
  check_index(c, i);
  return {tables_[slot(c)].min_params.row(i),
          std::span<const double>(realized_max_[slot(c)].data() + i * dim_, dim_)};
}

Box BoxModel::realize(EntityClass c, Index i) const {
  const BoxView v = box(c, i);
  return Box({v.min.begin(), v.min.end()}, {v.max.begin(), v.max.end()});
}

double BoxModel::entity_score(EntityClass c, Index entity, Index item) const {
  const BoxView container = box(c, entity);
  return containment_score({&container, 1}, box(EntityClass::item, item), temps_);
}

double BoxModel::geometric_score(const QueryShape& query, Index item) const {
  query.validate();
  BoxView positives[3];
  std::size_t n = 0;
  if (query.user) positives[n++] = box(EntityClass::user, *query.user);
  for (Index a : query.positive_attributes) positives[n++] = box(EntityClass::attribute, a);
  std::optional<BoxView> negated;
  if (query.negated_attribute) negated = box(EntityClass::attribute, *query.negated_attribute);
  return query_score({positives, n}, negated, box(EntityClass::item, item), temps_);
}

double BoxModel::energy(EntityClass c, Index row, Index item) const {
  const BoxView container = box(c, row);
  return boxrec::energy({&container, 1}, box(EntityClass::item, item), temps_);
}

double BoxModel::energy_with_grad(EntityClass c, Index row, Index item, LocalGrad& grad) const {
  thread_local BoxGrad row_grad;
  thread_local BoxGrad item_grad;
  const BoxView container = box(c, row);
  const double e = boxrec::energy_with_grad({&container, 1}, box(EntityClass::item, item), temps_,
                                            {&row_grad, 1}, item_grad);
  // max = min + softplus(width): d/dmin_param = d_min + d_max, d/dwidth = d_max * sigmoid(width)
  auto chain = [&](const BoxGrad& g, const BoxParameterTable& t, Index i, std::vector<double>& out) {
    out.resize(2 * dim_);
    const auto width = t.width_params.row(i);
    for (std::size_t d = 0; d < dim_; ++d) {
      out[d] = g.d_min[d] + g.d_max[d];
      out[dim_ + d] = g.d_max[d] * sigmoid(width[d]);
    }
  };
  chain(row_grad, tables_[slot(c)], row, grad.row);
  chain(item_grad, tables_[slot(EntityClass::item)], item, grad.item);
  return e;
}

void BoxModel::accumulate(const LocalGrad& local, EntityClass c, Index row, Index item,
                          double weight, Gradients& grads) const {
  auto add = [&](EntityClass cls, Index i, const std::vector<double>& g) {
    auto& mins = grads[2 * slot(cls)];
    auto& widths = grads[2 * slot(cls) + 1];
    for (std::size_t d = 0; d < dim_; ++d) {
      mins[i * dim_ + d] += weight * g[d];
      widths[i * dim_ + d] += weight * g[dim_ + d];
    }
  };
  add(c, row, local.row);
  add(EntityClass::item, item, local.item);
}

std::vector<std::span<double>> BoxModel::parameter_blocks() {
  dirty_ = true;
  std::vector<std::span<double>> blocks;
  for (EntityClass c : kEntityClasses) {
    blocks.emplace_back(tables_[slot(c)].min_params.values);
    blocks.emplace_back(tables_[slot(c)].width_params.values);
  }
  return blocks;
}

std::vector<std::span<const double>> BoxModel::parameter_blocks() const {
  std::vector<std::span<const double>> blocks;
  for (EntityClass c : kEntityClasses) {
    blocks.emplace_back(tables_[slot(c)].min_params.values);
    blocks.emplace_back(tables_[slot(c)].width_params.values);
  }
  return blocks;
}

// ---------------------------------------------------------------------------
// MfModel

MfModel::MfModel(std::size_t dim, VocabSizes sizes) : dim_(dim), sizes_(sizes) {
  BOXREC_REQUIRE(dim > 0, "vector dimension must be positive");
  for (EntityClass c : kEntityClasses) tables_[slot(c)] = ParameterTable(c, sizes.of(c), dim);
}

std::unique_ptr<EmbeddingModel> MfModel::clone() const { return std::make_unique<MfModel>(*this); }

VectorParameterTable& MfModel::table(EntityClass c) { return tables_[slot(c)]; }
const VectorParameterTable& MfModel::table(EntityClass c) const { return tables_[slot(c)]; }

namespace {
double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) s += a[d] * b[d];
  return s;
}
}  // namespace

double MfModel::score(EntityClass c, Index entity, Index item) const {
  check_index(c, entity);
  check_index(EntityClass::item, item);
  return sigmoid(dot(tables_[slot(c)].row(entity), tables_[slot(EntityClass::item)].row(item)));
}

double MfModel::entity_score(EntityClass c, Index entity, Index item) const {
  return score(c, entity, item);
}

double MfModel::geometric_score(const QueryShape& query, Index item) const {
  query.validate();
  check_index(EntityClass::item, item);
  const auto target = tables_[slot(EntityClass::item)].row(item);
  // q . m expanded term by term: (u + a1 + a2 - n) . m
  double s = 0.0;
  if (query.user) {
    check_index(EntityClass::user, *query.user);
    s += dot(tables_[slot(EntityClass::user)].row(*query.user), target);
  }
  const auto& attrs = tables_[slot(EntityClass::attribute)];
  for (Index a : query.positive_attributes) {
    check_index(EntityClass::attribute, a);
    s += dot(attrs.row(a), target);
  }
  if (query.negated_attribute) {
    check_index(EntityClass::attribute, *query.negated_attribute);
    s -= dot(attrs.row(*query.negated_attribute), target);
  }
  return sigmoid(s);
}

double MfModel::energy(EntityClass c, Index row, Index item) const {
  check_index(c, row);
  check_index(EntityClass::item, item);
  return softplus(-dot(tables_[slot(c)].row(row), tables_[slot(EntityClass::item)].row(item)));
}

double MfModel::energy_with_grad(EntityClass c, Index row, Index item, LocalGrad& grad) const {
  check_index(c, row);
  check_index(EntityClass::item, item);
  const auto r = tables_[slot(c)].row(row);
  const auto m = tables_[slot(EntityClass::item)].row(item);
  const double s = dot(r, m);
  // E = -log sigmoid(s) = softplus(-s); dE/ds = -sigmoid(-s)
  const double g = -sigmoid(-s);
  grad.row.resize(dim_);
  grad.item.resize(dim_);
  for (std::size_t d = 0; d < dim_; ++d) {
    grad.row[d] = g * m[d];
    grad.item[d] = g * r[d];
  }
  return softplus(-s);
}

void MfModel::accumulate(const LocalGrad& local, EntityClass c, Index row, Index item,
                         double weight, Gradients& grads) const {
  auto& rows = grads[slot(c)];
  auto& items = grads[slot(EntityClass::item)];
  for (std::size_t d = 0; d < dim_; ++d) {
    rows[row * dim_ + d] += weight * local.row[d];
    items[item * dim_ + d] += weight * local.item[d];
  }
}

std::vector<std::span<double>> MfModel::parameter_blocks() {
  std::vector<std::span<double>> blocks;
  for (auto& t : tables_) blocks.emplace_back(t.values);
  return blocks;
}

std::vector<std::span<const double>> MfModel::parameter_blocks() const {
  std::vector<std::span<const double>> blocks;
  for (const auto& t : tables_) blocks.emplace_back(t.values);
  return blocks;
}

// ---------------------------------------------------------------------------

std::unique_ptr<EmbeddingModel> init_model(const ModelConfig& config, const VocabSizes& sizes) {
  config.validate();
  for (EntityClass c : kEntityClasses) {
    BOXREC_REQUIRE(sizes.of(c) > 0, "vocabulary for " + std::string(to_string(c)) + " is empty");
  }
  const std::size_t dim = config.resolved_dim();
  Rng rng(config.seed);
  if (config.family == Family::box) {
    auto model = std::make_unique<BoxModel>(dim, config.temps, sizes);
    for (EntityClass c : kEntityClasses) {
      auto& t = model->table(c);
      for (auto& v : t.min_params.values) v = rng.uniform(config.init_min_lo, config.init_min_hi);
      for (auto& v : t.width_params.values) {
        v = inverse_softplus(rng.uniform(config.init_width_lo, config.init_width_hi));
      }
    }
    model->sync();
    return model;
  }
  auto model = std::make_unique<MfModel>(dim, sizes);
  for (EntityClass c : kEntityClasses) {
    for (auto& v : model->table(c).values) v = config.init_vector_stddev * rng.normal();
  }
  return model;
}

}  // namespace boxrec
