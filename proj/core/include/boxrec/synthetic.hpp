#pragma once

// Synthetic ground truth for desk-scale experiments: items are points in the
// unit cube, users and attributes are axis-parallel regions, and membership
// is exact point-in-region. Any set-theoretic query can be answered exactly.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "boxrec/dataset.hpp"

namespace boxrec {

struct SyntheticConfig {
  std::size_t n_users = 500;
  std::size_t n_items = 1000;
  std::size_t n_attributes = 40;
  std::size_t latent_dim = 4;
  std::uint64_t seed = 0;
  /// Fraction of true user-item memberships dropped from D_U.
  double dropout = 0.1;
  // Users constrain every latent dimension with widths in this range.
  double user_width_lo = 0.35;
  double user_width_hi = 0.65;
  // Attributes constrain one or two dimensions with widths in this range.
  double attribute_width_lo = 0.3;
  double attribute_width_hi = 0.85;

  void validate() const;
};

struct Region {
  std::vector<double> lo;
  std::vector<double> hi;

  bool contains(std::span<const double> point) const;
};

struct SyntheticData {
  Dataset dataset;  // ids u<k>, i<k>, a<k>; every pair tagged train
  std::vector<std::vector<double>> item_points;
  std::vector<Region> user_regions;
  std::vector<Region> attribute_regions;

  /// Ground-truth membership by generator index.
  bool member(EntityClass c, Index entity, Index item) const;
  /// Exact answer of `shape` (indices in generator numbering) for `item`.
  bool answers(const QueryShape& shape, Index item) const;
};

SyntheticData synthetic_generate(const SyntheticConfig& config);

/// Writes user_item.tsv and attribute_item.tsv into `dir`.
void write_synthetic_tsv(const std::filesystem::path& dir, const SyntheticData& data);

}  // namespace boxrec
