#pragma once

// Shared helpers for the unit tests: random boxes, finite differences and
// the frozen high-precision constants (see tests/oracles/closed_forms.py).

#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "boxrec/geometry.hpp"
#include "boxrec/random.hpp"

namespace oracle {
inline constexpr double kLn2 = 0.69314718055994530942;
inline constexpr double kSelfVolume04 = 4.0181499279178097404;
inline constexpr double kTwoCopies04 = 2.6844087655644833502;
inline constexpr double kThreeCopies04 = 1.9553598050576280662;
inline constexpr double kFourCopies04 = 1.4844152184195570193;
inline constexpr double kSelfScore = 0.66807083202978788037;
inline constexpr double kSelfEnergy = 0.40336107509417135711;
inline constexpr double kNceOneNegative = 1.5061947574093722269;
inline constexpr double kNegationFourCopies = 0.11720433410559987984;
inline constexpr double kConjunctionThreeCopies = 0.48663186793303359928;
inline constexpr double kSelfDifferenceRatio = 0.24084804516281413478;
inline constexpr double kSigmoid1 = 0.73105857863000487925;
inline constexpr double kSigmoid2 = 0.88079707797788244406;
}  // namespace oracle

namespace testing {

inline bool rel_close(double a, double b, double rel, double abs = 0.0) {
  return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)) + abs;
}

/// Box with min ~ U[lo, hi) and width ~ U[wlo, whi) per dimension.
inline boxrec::Box random_box(boxrec::Rng& rng, std::size_t dim, double lo, double hi, double wlo,
                              double whi) {
  std::vector<double> mn(dim), mx(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    mn[d] = rng.uniform(lo, hi);
    mx[d] = mn[d] + rng.uniform(wlo, whi);
  }
  return boxrec::Box(mn, mx);
}

/// Central difference of f with respect to *x.
inline double central_difference(double* x, double h, const std::function<double()>& f) {
  const double saved = *x;
  *x = saved + h;
  const double up = f();
  *x = saved - h;
  const double down = f();
  *x = saved;
  return (up - down) / (2 * h);
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("boxrec_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
