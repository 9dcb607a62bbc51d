#include "boxrec/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "boxrec/errors.hpp"

namespace boxrec {
namespace {

// Below this, softplus(t) ~ e^t and log(softplus(t)) ~ t - e^t / 2.
constexpr double kSoftplusTail = -30.0;

// log(soft_length(x, temp)) and its derivative in x, sharing one exp/log1p.
struct LogSoftLength {
  double value;
  double slope;
};

LogSoftLength log_soft_length_and_slope(double x, double temp) {
  const double t = x / temp;
  if (t < kSoftplusTail) {
    const double e = std::exp(t);
    return {std::log(temp) + t - 0.5 * e, (1.0 - 0.5 * e) / temp};
  }
  const double e = std::exp(-std::abs(t));
  const double l1 = std::log1p(e);
  const double sp = t > 0 ? t + l1 : l1;  // softplus(t)
  const double sig = t >= 0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
  return {std::log(temp) + std::log(sp), sig / (sp * temp)};
}

void require_same_dim(std::span<const BoxView> boxes) {
  BOXREC_REQUIRE(!boxes.empty(), "box list must be nonempty");
  const std::size_t dim = boxes.front().dim();
  BOXREC_REQUIRE(dim >= 1, "boxes must have at least one dimension");
  for (const auto& b : boxes) {
    BOXREC_REQUIRE(b.min.size() == dim && b.max.size() == dim,
                   "dimension mismatch: expected " + std::to_string(dim) + ", got " +
                       std::to_string(b.min.size()) + "/" + std::to_string(b.max.size()));
  }
}

// Container list plus target, without heap allocation for small queries.
class BoxList {
 public:
  BoxList(std::span<const BoxView> head, BoxView tail) : size_(head.size() + 1) {
    if (size_ <= inline_.size()) {
      std::copy(head.begin(), head.end(), inline_.begin());
      inline_[head.size()] = tail;
    } else {
      heap_.assign(head.begin(), head.end());
      heap_.push_back(tail);
    }
  }
  std::span<const BoxView> span() const {
    return size_ <= inline_.size() ? std::span<const BoxView>(inline_.data(), size_)
                                   : std::span<const BoxView>(heap_);
  }

 private:
  std::size_t size_;
  std::array<BoxView, 6> inline_{};
  std::vector<BoxView> heap_;
};

// Core soft-intersection kernel. `grad_of(i)` returns the BoxGrad for box i
// or nullptr when gradients are not requested.
template <class GradOf>
double log_intersection_impl(std::span<const BoxView> boxes, const GumbelTemps& temps,
                             GradOf&& grad_of) {
  require_same_dim(boxes);
  const std::size_t dim = boxes.front().dim();
  const double tau = temps.intersection;
  const double nu = temps.volume;
  const bool want_grad = grad_of(0) != nullptr;
  if (want_grad) {
    for (std::size_t i = 0; i < boxes.size(); ++i) grad_of(i)->reset(dim);
  }

  thread_local std::vector<double> top_w, bot_w;
  top_w.resize(boxes.size());
  bot_w.resize(boxes.size());
  double total = 0.0;
  for (std::size_t d = 0; d < dim; ++d) {
    // soft-min of upper corners
    double top_ref = boxes[0].max[d];
    for (const auto& b : boxes) top_ref = std::min(top_ref, b.max[d]);
    double top_sum = 0.0;
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      top_w[i] = std::exp(-(boxes[i].max[d] - top_ref) / tau);
      top_sum += top_w[i];
    }
    const double top = top_ref - tau * std::log(top_sum);

    // soft-max of lower corners
    double bot_ref = boxes[0].min[d];
    for (const auto& b : boxes) bot_ref = std::max(bot_ref, b.min[d]);
    double bot_sum = 0.0;
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      bot_w[i] = std::exp((boxes[i].min[d] - bot_ref) / tau);
      bot_sum += bot_w[i];
    }
    const double bot = bot_ref + tau * std::log(bot_sum);

    const auto len = log_soft_length_and_slope(top - bot, nu);
    total += len.value;
    if (want_grad) {
      for (std::size_t i = 0; i < boxes.size(); ++i) {
        BoxGrad& out = *grad_of(i);
        out.d_max[d] = len.slope * top_w[i] / top_sum;
        out.d_min[d] = -len.slope * bot_w[i] / bot_sum;
      }
    }
  }
  return total;
}

}  // namespace

Box::Box(std::vector<double> min, std::vector<double> max)
    : min_(std::move(min)), max_(std::move(max)) {
  BOXREC_REQUIRE(!min_.empty(), "box must have at least one dimension");
  BOXREC_REQUIRE(min_.size() == max_.size(), "box corners differ in length");
  for (std::size_t d = 0; d < min_.size(); ++d) {
    BOXREC_REQUIRE(std::isfinite(min_[d]) && std::isfinite(max_[d]), "box corners must be finite");
  }
}

Box Box::uniform(std::size_t dim, double lo, double hi) {
  return Box(std::vector<double>(dim, lo), std::vector<double>(dim, hi));
}

void GumbelTemps::validate() const {
  BOXREC_REQUIRE(intersection > 0 && std::isfinite(intersection),
                 "intersection temperature must be positive");
  BOXREC_REQUIRE(volume > 0 && std::isfinite(volume), "volume temperature must be positive");
}

void BoxGrad::reset(std::size_t dim) {
  d_min.assign(dim, 0.0);
  d_max.assign(dim, 0.0);
}

void QueryShape::validate() const {
  BOXREC_REQUIRE(positive_attributes.size() <= 2, "at most two positive attributes");
  BOXREC_REQUIRE(user.has_value() || !positive_attributes.empty(),
                 "query needs a user or a positive attribute");
}

double lse(double temp, std::span<const double> values) {
  BOXREC_REQUIRE(!values.empty(), "lse: empty input");
  BOXREC_REQUIRE(temp != 0.0, "lse: zero temperature");
  const double ref = temp > 0 ? *std::max_element(values.begin(), values.end())
                              : *std::min_element(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += std::exp((v - ref) / temp);
  return ref + temp * std::log(sum);
}

double lse(double temp, std::initializer_list<double> values) {
  return lse(temp, std::span<const double>(values.begin(), values.size()));
}

double soft_length(double x, double temp) {
  const double t = x / temp;
  if (t > 0) return x + temp * std::log1p(std::exp(-t));
  return temp * std::log1p(std::exp(t));
}

double log_soft_length(double x, double temp) {
  return log_soft_length_and_slope(x, temp).value;
}

double hard_volume(BoxView box) {
  double vol = 1.0;
  for (std::size_t d = 0; d < box.dim(); ++d) vol *= std::max(box.max[d] - box.min[d], 0.0);
  return vol;
}

double hard_intersection_volume(std::span<const BoxView> boxes) {
  require_same_dim(boxes);
  double vol = 1.0;
  for (std::size_t d = 0; d < boxes.front().dim(); ++d) {
    double top = boxes[0].max[d];
    double bot = boxes[0].min[d];
    for (const auto& b : boxes) {
      top = std::min(top, b.max[d]);
      bot = std::max(bot, b.min[d]);
    }
    vol *= std::max(top - bot, 0.0);
  }
  return vol;
}

double log_gumbel_volume(BoxView box, double volume_temp, BoxGrad* grad) {
  BOXREC_REQUIRE(box.dim() >= 1 && box.min.size() == box.max.size(), "invalid box");
  if (grad) grad->reset(box.dim());
  double total = 0.0;
  for (std::size_t d = 0; d < box.dim(); ++d) {
    const double side = box.max[d] - box.min[d];
    const auto len = log_soft_length_and_slope(side, volume_temp);
    total += len.value;
    if (grad) {
      grad->d_max[d] = len.slope;
      grad->d_min[d] = -len.slope;
    }
  }
  return total;
}

double gumbel_volume(BoxView box, double volume_temp) {
  return std::exp(log_gumbel_volume(box, volume_temp));
}

double log_gumbel_intersection_volume(std::span<const BoxView> boxes, const GumbelTemps& temps,
                                      std::span<BoxGrad> grads) {
  if (grads.empty()) {
    return log_intersection_impl(boxes, temps, [](std::size_t) -> BoxGrad* { return nullptr; });
  }
  BOXREC_REQUIRE(grads.size() == boxes.size(), "one gradient slot per box required");
  return log_intersection_impl(boxes, temps, [&](std::size_t i) { return &grads[i]; });
}

double gumbel_intersection_volume(std::span<const BoxView> boxes, const GumbelTemps& temps) {
  return std::exp(log_gumbel_intersection_volume(boxes, temps));
}

double log_containment_score(std::span<const BoxView> containers, BoxView target,
                             const GumbelTemps& temps, std::span<BoxGrad> container_grads,
                             BoxGrad* target_grad) {
  BOXREC_REQUIRE(!containers.empty(), "containment needs at least one container");
  const BoxList all(containers, target);
  const bool want_grad = target_grad != nullptr;
  BOXREC_REQUIRE(!want_grad || container_grads.size() == containers.size(),
                 "one gradient slot per container required");
  double log_int;
  if (want_grad) {
    log_int = log_intersection_impl(all.span(), temps, [&](std::size_t i) {
      return i < containers.size() ? &container_grads[i] : target_grad;
    });
  } else {
    log_int = log_intersection_impl(all.span(), temps,
                                    [](std::size_t) -> BoxGrad* { return nullptr; });
  }
  double log_vol = 0.0;
  const double nu = temps.volume;
  for (std::size_t d = 0; d < target.dim(); ++d) {
    const double side = target.max[d] - target.min[d];
    const auto len = log_soft_length_and_slope(side, nu);
    log_vol += len.value;
    if (want_grad) {
      target_grad->d_max[d] -= len.slope;
      target_grad->d_min[d] += len.slope;
    }
  }
  // Analytically <= 0; rounding may leave a positive ulp.
  return std::min(log_int - log_vol, 0.0);
}

double containment_score(std::span<const BoxView> containers, BoxView target,
                         const GumbelTemps& temps) {
  return std::exp(log_containment_score(containers, target, temps));
}

double energy(std::span<const BoxView> containers, BoxView target, const GumbelTemps& temps) {
  const double log_score = log_containment_score(containers, target, temps);
  return -std::max(log_score, std::log(kMinScore));
}

double energy_with_grad(std::span<const BoxView> containers, BoxView target,
                        const GumbelTemps& temps, std::span<BoxGrad> container_grads,
                        BoxGrad& target_grad) {
  const double log_score =
      log_containment_score(containers, target, temps, container_grads, &target_grad);
  if (log_score < std::log(kMinScore)) {
    for (auto& g : container_grads) g.reset(target.dim());
    target_grad.reset(target.dim());
    return -std::log(kMinScore);
  }
  for (auto& g : container_grads) {
    for (auto& v : g.d_min) v = -v;
    for (auto& v : g.d_max) v = -v;
  }
  for (auto& v : target_grad.d_min) v = -v;
  for (auto& v : target_grad.d_max) v = -v;
  return -log_score;
}

double query_score(std::span<const BoxView> positives, std::optional<BoxView> negated,
                   BoxView target, const GumbelTemps& temps) {
  BOXREC_REQUIRE(!positives.empty(), "query needs at least one positive box");
  const double base = std::exp(log_containment_score(positives, target, temps));
  if (!negated) return base;
  const BoxList with_negated(positives, *negated);
  const double both = std::exp(log_containment_score(with_negated.span(), target, temps));
  return std::max(base - both, 0.0);
}

double query_score_with_grad(std::span<const BoxView> positives, std::optional<BoxView> negated,
                             BoxView target, const GumbelTemps& temps, QueryGrad& grad) {
  BOXREC_REQUIRE(!positives.empty(), "query needs at least one positive box");
  const std::size_t dim = target.dim();
  grad.positives.resize(positives.size());
  const double base =
      std::exp(log_containment_score(positives, target, temps, grad.positives, &grad.target));
  for (auto& g : grad.positives) {
    for (auto& v : g.d_min) v *= base;
    for (auto& v : g.d_max) v *= base;
  }
  for (auto& v : grad.target.d_min) v *= base;
  for (auto& v : grad.target.d_max) v *= base;
  if (!negated) {
    grad.negated.reset(0);
    return base;
  }

  const BoxList with_negated(positives, *negated);
  std::vector<BoxGrad> inner(positives.size() + 1);
  BoxGrad inner_target;
  const double both = std::exp(
      log_containment_score(with_negated.span(), target, temps, inner, &inner_target));
  for (std::size_t i = 0; i < positives.size(); ++i) {
    for (std::size_t d = 0; d < dim; ++d) {
      grad.positives[i].d_min[d] -= both * inner[i].d_min[d];
      grad.positives[i].d_max[d] -= both * inner[i].d_max[d];
    }
  }
  grad.negated.reset(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    grad.negated.d_min[d] = -both * inner.back().d_min[d];
    grad.negated.d_max[d] = -both * inner.back().d_max[d];
    grad.target.d_min[d] -= both * inner_target.d_min[d];
    grad.target.d_max[d] -= both * inner_target.d_max[d];
  }
  return std::max(base - both, 0.0);
}

}  // namespace boxrec
