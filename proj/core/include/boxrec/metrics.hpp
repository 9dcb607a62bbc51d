#pragma once

// Single-target ranking metrics.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>

namespace boxrec {

/// 1 iff rank <= k. Ranks start at 1.
int hit_rate_at_k(std::size_t rank, std::size_t k);

/// 1 / log2(rank + 1).
double ndcg(std::size_t rank);

enum class TieMode : std::uint8_t {
  by_index,     // equal scores at a smaller index rank ahead
  pessimistic,  // every equal score ranks ahead
};

/// 1 + #{j : s_j > s_t} + #{j : s_j == s_t, j ahead of t under `ties`}.
std::size_t rank_of(std::span<const double> scores, std::size_t target,
                    TieMode ties = TieMode::by_index);

struct RankSummary {
  double hr10 = 0.0;
  double hr20 = 0.0;
  double hr50 = 0.0;
  double ndcg = 0.0;
  std::size_t count = 0;

  double hr(std::size_t k) const;
};

/// Means over ranks, summed in input order. All zeros for no ranks.
RankSummary summarize_ranks(std::span<const std::size_t> ranks);

/// (weakest - set) / weakest; empty when weakest is 0.
std::optional<double> spectrum_gap(double hr_weakest, double hr_set_theoretic);

struct ThresholdFit {
  double threshold = 0.0;
  double f1 = 0.0;
};

/// Threshold t maximizing F1 of {score >= t} against `positive`. Candidates
/// are -inf and midpoints of consecutive distinct scores; ties go to the
/// smallest. No positives gives +inf with F1 0.
ThresholdFit best_f1_threshold(std::span<const double> scores, std::span<const bool> positive);

}  // namespace boxrec
