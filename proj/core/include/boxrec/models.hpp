#pragma once

// Parameter stores and scoring front-ends for the two model families: box
// embeddings (min corner + softplus width per entity) and logistic matrix
// factorization (one vector per entity). Users, attributes and items share
// one embedding space.

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "boxrec/geometry.hpp"

namespace boxrec {

enum class EntityClass : std::uint8_t { user, item, attribute };
enum class Family : std::uint8_t { box, mf };

std::string_view to_string(EntityClass c);
std::string_view to_string(Family f);
Family parse_family(std::string_view s);

inline constexpr EntityClass kEntityClasses[] = {EntityClass::user, EntityClass::item,
                                                 EntityClass::attribute};

struct VocabSizes {
  std::size_t users = 0;
  std::size_t items = 0;
  std::size_t attributes = 0;

  std::size_t of(EntityClass c) const;
  bool operator==(const VocabSizes&) const = default;
};

/// count x dim row-major matrix of reals for one entity class.
struct ParameterTable {
  EntityClass entity_class = EntityClass::user;
  std::size_t count = 0;
  std::size_t dim = 0;
  std::vector<double> values;

  ParameterTable() = default;
  ParameterTable(EntityClass c, std::size_t count, std::size_t dim);

  std::span<double> row(Index i) { return {values.data() + i * dim, dim}; }
  std::span<const double> row(Index i) const { return {values.data() + i * dim, dim}; }
};

/// Box parameters: realized box is [min, min + softplus(width)].
struct BoxParameterTable {
  ParameterTable min_params;
  ParameterTable width_params;

  std::size_t count() const noexcept { return min_params.count; }
};

using VectorParameterTable = ParameterTable;

struct ModelConfig {
  Family family = Family::box;
  /// 0 selects the family default (64 for boxes, 128 for vectors, equal
  /// reals per entity).
  std::size_t dim = 0;
  GumbelTemps temps{2.0, 0.01};
  std::uint64_t seed = 0;
  // Box initialization ranges: min corner and realized width, uniform per coordinate.
  double init_min_lo = 0.0;
  double init_min_hi = 0.1;
  double init_width_lo = 0.9;
  double init_width_hi = 1.0;
  double init_vector_stddev = 0.1;

  std::size_t resolved_dim() const;
  void validate() const;
};

inline constexpr std::size_t kDefaultBoxDim = 64;
inline constexpr std::size_t kDefaultVectorDim = 128;

/// Gradient of a single (row, item) energy with respect to the raw
/// parameters of the row entity and the item.
struct LocalGrad {
  std::vector<double> row;
  std::vector<double> item;
};

/// Dense gradient buffers matching EmbeddingModel::parameter_blocks().
using Gradients = std::vector<std::vector<double>>;

class EmbeddingModel {
 public:
  virtual ~EmbeddingModel() = default;

  virtual Family family() const = 0;
  virtual std::size_t dim() const = 0;
  virtual VocabSizes sizes() const = 0;
  virtual std::unique_ptr<EmbeddingModel> clone() const = 0;

  /// Per-entity normalized score of `item` for a single user or attribute.
  virtual double entity_score(EntityClass c, Index entity, Index item) const = 0;
  /// Score of `item` for a whole query, composed in embedding space.
  virtual double geometric_score(const QueryShape& query, Index item) const = 0;

  /// Training energy of the pair; lower means the item belongs to the row entity.
  virtual double energy(EntityClass c, Index row, Index item) const = 0;
  virtual double energy_with_grad(EntityClass c, Index row, Index item, LocalGrad& grad) const = 0;
  /// grads += weight * local, scattered into the row's and item's slots.
  virtual void accumulate(const LocalGrad& local, EntityClass c, Index row, Index item,
                          double weight, Gradients& grads) const = 0;

  /// Every trainable array in a fixed order. Mutating through these requires
  /// a call to sync() before scoring again.
  virtual std::vector<std::span<double>> parameter_blocks() = 0;
  virtual std::vector<std::span<const double>> parameter_blocks() const = 0;
  virtual void sync() {}

  Gradients make_gradients() const;
  std::size_t reals_per_entity() const;

 protected:
  void check_index(EntityClass c, Index i) const;
};

class BoxModel final : public EmbeddingModel {
 public:
  BoxModel(std::size_t dim, GumbelTemps temps, VocabSizes sizes);

  Family family() const override { return Family::box; }
  std::size_t dim() const override { return dim_; }
  VocabSizes sizes() const override { return sizes_; }
  std::unique_ptr<EmbeddingModel> clone() const override;

  double entity_score(EntityClass c, Index entity, Index item) const override;
  double geometric_score(const QueryShape& query, Index item) const override;
  double energy(EntityClass c, Index row, Index item) const override;
  double energy_with_grad(EntityClass c, Index row, Index item, LocalGrad& grad) const override;
  void accumulate(const LocalGrad& local, EntityClass c, Index row, Index item, double weight,
                  Gradients& grads) const override;
  std::vector<std::span<double>> parameter_blocks() override;
  std::vector<std::span<const double>> parameter_blocks() const override;
  void sync() override;

  const GumbelTemps& temps() const noexcept { return temps_; }
  BoxParameterTable& table(EntityClass c);
  const BoxParameterTable& table(EntityClass c) const;

  /// Realized box [min, min + softplus(width)].
  BoxView box(EntityClass c, Index i) const;
  Box realize(EntityClass c, Index i) const;

 private:
  std::size_t dim_;
  GumbelTemps temps_;
  VocabSizes sizes_;
  BoxParameterTable tables_[3];
  std::vector<double> realized_max_[3];
  bool dirty_ = false;
};

class MfModel final : public EmbeddingModel {
 public:
  MfModel(std::size_t dim, VocabSizes sizes);

  Family family() const override { return Family::mf; }
  std::size_t dim() const override { return dim_; }
  VocabSizes sizes() const override { return sizes_; }
  std::unique_ptr<EmbeddingModel> clone() const override;

  double entity_score(EntityClass c, Index entity, Index item) const override;
  double geometric_score(const QueryShape& query, Index item) const override;
  double energy(EntityClass c, Index row, Index item) const override;
  double energy_with_grad(EntityClass c, Index row, Index item, LocalGrad& grad) const override;
  void accumulate(const LocalGrad& local, EntityClass c, Index row, Index item, double weight,
                  Gradients& grads) const override;
  std::vector<std::span<double>> parameter_blocks() override;
  std::vector<std::span<const double>> parameter_blocks() const override;

  VectorParameterTable& table(EntityClass c);
  const VectorParameterTable& table(EntityClass c) const;

  /// sigma(vec(entity) . vec(item))
  double score(EntityClass c, Index entity, Index item) const;

 private:
  std::size_t dim_;
  VocabSizes sizes_;
  VectorParameterTable tables_[3];
};

/// Fresh parameters for `config.family`, deterministic in `config.seed`.
std::unique_ptr<EmbeddingModel> init_model(const ModelConfig& config, const VocabSizes& sizes);

double sigmoid(double x);
double softplus(double x);
/// Inverse of softplus for positive y.
double inverse_softplus(double y);

}  // namespace boxrec
