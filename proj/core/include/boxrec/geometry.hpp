#pragma once

// Hard and Gumbel (soft) box geometry: volumes, n-ary intersections,
// containment scores, energies and set-theoretic query scores, together with
// their analytic gradients. Everything here is a pure function of its
// arguments and safe to call from any number of threads.

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <vector>

namespace boxrec {

using Index = std::size_t;

/// Non-owning view of an axis-parallel box: per-dimension lower and upper corners.
struct BoxView {
  std::span<const double> min;
  std::span<const double> max;

  std::size_t dim() const noexcept { return min.size(); }
};

/// Owning axis-parallel box. A dimension with max <= min has zero hard volume.
class Box {
 public:
  Box() = default;
  Box(std::vector<double> min, std::vector<double> max);

  /// Box with the same interval [lo, hi] in every one of `dim` dimensions.
  static Box uniform(std::size_t dim, double lo, double hi);

  const std::vector<double>& min() const noexcept { return min_; }
  const std::vector<double>& max() const noexcept { return max_; }
  std::vector<double>& min() noexcept { return min_; }
  std::vector<double>& max() noexcept { return max_; }
  std::size_t dim() const noexcept { return min_.size(); }

  BoxView view() const noexcept { return {min_, max_}; }
  operator BoxView() const noexcept { return view(); }

 private:
  std::vector<double> min_;
  std::vector<double> max_;
};

/// Smoothing temperatures: `intersection` (tau) for the soft min/max of
/// corners, `volume` (nu) for the soft side length.
struct GumbelTemps {
  double intersection = 1.0;
  double volume = 1.0;

  void validate() const;
};

/// Gradient of a scalar with respect to one box's corners.
struct BoxGrad {
  std::vector<double> d_min;
  std::vector<double> d_max;

  void reset(std::size_t dim);
};

/// Which entities make up a query: optional user, up to two positive
/// attributes, optional negated attribute.
struct QueryShape {
  std::optional<Index> user;
  std::vector<Index> positive_attributes;
  std::optional<Index> negated_attribute;

  /// Throws ContractViolation unless the shape is one the engine can score.
  void validate() const;
  bool operator==(const QueryShape&) const = default;
};

/// Gradient of a query score with respect to every participating box.
struct QueryGrad {
  std::vector<BoxGrad> positives;
  BoxGrad negated;
  BoxGrad target;
};

// ---------------------------------------------------------------------------
// Scalar kernels

/// temp * log(sum_i exp(values_i / temp)). Positive temp is a soft maximum,
/// negative temp a soft minimum. Stable for any finite input.
double lse(double temp, std::span<const double> values);
double lse(double temp, std::initializer_list<double> values);

/// lse(temp, {x, 0}) = temp * softplus(x / temp), for temp > 0.
double soft_length(double x, double temp);

/// log(soft_length(x, temp)), finite even where soft_length underflows.
double log_soft_length(double x, double temp);

// ---------------------------------------------------------------------------
// Hard geometry

double hard_volume(BoxView box);
double hard_intersection_volume(std::span<const BoxView> boxes);

// ---------------------------------------------------------------------------
// Gumbel geometry

double gumbel_volume(BoxView box, double volume_temp);
double gumbel_intersection_volume(std::span<const BoxView> boxes, const GumbelTemps& temps);

/// Log-domain soft volume. When `grad` is given it is overwritten with
/// d(log volume)/d(corners).
double log_gumbel_volume(BoxView box, double volume_temp, BoxGrad* grad = nullptr);

/// Log-domain soft intersection volume. When `grads` is non-empty it must
/// have one entry per box; each is overwritten with d(log volume)/d(corners).
double log_gumbel_intersection_volume(std::span<const BoxView> boxes, const GumbelTemps& temps,
                                      std::span<BoxGrad> grads = {});

/// Soft proportion of `target` inside the intersection of `containers`,
/// normalized by the target's own soft volume. In (0, 1].
double containment_score(std::span<const BoxView> containers, BoxView target,
                         const GumbelTemps& temps);

/// log(containment_score) with optional gradients: container_grads (one per
/// container) and target_grad are overwritten.
double log_containment_score(std::span<const BoxView> containers, BoxView target,
                             const GumbelTemps& temps, std::span<BoxGrad> container_grads = {},
                             BoxGrad* target_grad = nullptr);

/// Scores below this are treated as this value before taking the log.
inline constexpr double kMinScore = 1e-38;

/// -log(max(containment_score, kMinScore)). Non-negative.
double energy(std::span<const BoxView> containers, BoxView target, const GumbelTemps& temps);

/// Energy and its gradients (zero in the clamped region).
double energy_with_grad(std::span<const BoxView> containers, BoxView target,
                        const GumbelTemps& temps, std::span<BoxGrad> container_grads,
                        BoxGrad& target_grad);

/// Conjunctive score of `target` inside all positives, minus (when `negated`
/// is present) the part also inside `negated`. In [0, 1].
double query_score(std::span<const BoxView> positives, std::optional<BoxView> negated,
                   BoxView target, const GumbelTemps& temps);

/// query_score plus exact gradients with respect to every box.
double query_score_with_grad(std::span<const BoxView> positives, std::optional<BoxView> negated,
                             BoxView target, const GumbelTemps& temps, QueryGrad& grad);

}  // namespace boxrec
