#include "boxrec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "boxrec/errors.hpp"

namespace boxrec {

int hit_rate_at_k(std::size_t rank, std::size_t k) {
  BOXREC_REQUIRE(rank >= 1, "rank starts at 1");
  return rank <= k ? 1 : 0;
}

double ndcg(std::size_t rank) {
  BOXREC_REQUIRE(rank >= 1, "rank starts at 1");
  return 1.0 / std::log2(static_cast<double>(rank) + 1.0);
}

std::size_t rank_of(std::span<const double> scores, std::size_t target, TieMode ties) {
  BOXREC_REQUIRE(target < scores.size(), "rank_of: target out of range");
  const double s = scores[target];
  std::size_t rank = 1;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (j == target) continue;
    if (scores[j] > s || (scores[j] == s && (ties == TieMode::pessimistic || j < target))) ++rank;
  }
  return rank;
}

double RankSummary::hr(std::size_t k) const {
  switch (k) {
    case 10: return hr10;
    case 20: return hr20;
    case 50: return hr50;
    default: break;
  }
  throw ContractViolation("RankSummary keeps HR at 10, 20 and 50 only");
}

RankSummary summarize_ranks(std::span<const std::size_t> ranks) {
  RankSummary s;
  s.count = ranks.size();
  if (ranks.empty()) return s;
  for (std::size_t r : ranks) {
    s.hr10 += hit_rate_at_k(r, 10);
    s.hr20 += hit_rate_at_k(r, 20);
    s.hr50 += hit_rate_at_k(r, 50);
    s.ndcg += ndcg(r);
  }
  const double n = static_cast<double>(ranks.size());
  s.hr10 /= n;
  s.hr20 /= n;
  s.hr50 /= n;
  s.ndcg /= n;
  return s;
}

std::optional<double> spectrum_gap(double hr_weakest, double hr_set_theoretic) {
  if (hr_weakest == 0.0) return std::nullopt;
  return (hr_weakest - hr_set_theoretic) / hr_weakest;
}

ThresholdFit best_f1_threshold(std::span<const double> scores, std::span<const bool> positive) {
  BOXREC_REQUIRE(scores.size() == positive.size(), "best_f1_threshold: length mismatch");
  const auto n_pos = static_cast<std::size_t>(std::count(positive.begin(), positive.end(), true));
  if (n_pos == 0) return {std::numeric_limits<double>::infinity(), 0.0};

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Sweep ascending: the threshold just above a group of equal scores drops
  // that group from the predicted set.
  const auto f1 = [&](std::size_t tp, std::size_t predicted) {
    return 2.0 * static_cast<double>(tp) / static_cast<double>(predicted + n_pos);
  };
  std::size_t tp = n_pos;
  std::size_t predicted = scores.size();
  ThresholdFit best{-std::numeric_limits<double>::infinity(), f1(tp, predicted)};
  std::size_t i = 0;
  while (i < order.size()) {
    const double s = scores[order[i]];
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == s) {
      if (positive[order[j]]) --tp;
      --predicted;
      ++j;
    }
    if (j == order.size()) break;
    const double f = f1(tp, predicted);
    if (f > best.f1) best = {s + (scores[order[j]] - s) / 2.0, f};
    i = j;
  }
  return best;
}

}  // namespace boxrec
