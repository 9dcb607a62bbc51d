#include <cmath>
#include <vector>

#include "boxrec/errors.hpp"
#include "boxrec/geometry.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace boxrec;
using testing::random_box;
using testing::rel_close;

namespace {

const Box k04 = Box({0.0}, {4.0});

double score_of(std::initializer_list<BoxView> positives, std::optional<BoxView> negated, BoxView target,
                const GumbelTemps& t) {
  std::vector<BoxView> p(positives);
  return query_score(p, negated, target, t);
}

}  // namespace

TEST_CASE("lse") {
  CHECK(rel_close(lse(1.0, {0.0, 0.0}), oracle::kLn2, 1e-12));
  for (double t : {-3.0, -0.5, 0.1, 2.0}) CHECK(lse(t, {1.75}) == doctest::Approx(1.75).epsilon(1e-15));
  CHECK(std::abs(lse(0.001, {1.0, 5.0}) - 5.0) < 1e-3);
  CHECK(std::abs(lse(-0.001, {1.0, 5.0}) - 1.0) < 1e-3);
  // huge magnitudes stay finite thanks to the extremal shift
  CHECK(std::isfinite(lse(0.01, {1e6, 1e6 - 1})));
  CHECK_THROWS_AS(lse(1.0, std::span<const double>{}), ContractViolation);
}

TEST_CASE("hard volumes") {
  CHECK(hard_volume(Box({0, 0}, {1, 1})) == 1.0);
  CHECK(hard_volume(Box({0, 1}, {2, 4})) == 6.0);
  CHECK(hard_volume(Box({0, 3}, {2, 3})) == 0.0);

  const Box a({0}, {2}), b({1}, {3}), c({2}, {3}), d({0}, {1});
  CHECK(hard_intersection_volume(std::vector<BoxView>{a, b}) == 1.0);
  CHECK(hard_intersection_volume(std::vector<BoxView>{d, c}) == 0.0);
  const Box outer({0, 0}, {5, 5}), inner({1, 2}, {2, 4});
  CHECK(hard_intersection_volume(std::vector<BoxView>{outer, inner}) == hard_volume(inner));
  CHECK_THROWS_AS(hard_intersection_volume(std::vector<BoxView>{a, outer}), ContractViolation);
}

TEST_CASE("soft volumes match the closed forms") {
  const GumbelTemps unit{1.0, 1.0};
  CHECK(rel_close(gumbel_volume(k04, 1.0), oracle::kSelfVolume04, 1e-12));
  CHECK(rel_close(gumbel_intersection_volume(std::vector<BoxView>{k04}, unit), oracle::kSelfVolume04, 1e-12));
  CHECK(rel_close(gumbel_intersection_volume(std::vector<BoxView>{k04, k04}, unit), oracle::kTwoCopies04, 1e-12));
  CHECK(rel_close(gumbel_intersection_volume(std::vector<BoxView>{k04, k04, k04}, unit), oracle::kThreeCopies04,
                  1e-12));
  CHECK(rel_close(gumbel_intersection_volume(std::vector<BoxView>{k04, k04, k04, k04}, unit),
                  oracle::kFourCopies04, 1e-12));
  CHECK(rel_close(gumbel_volume(Box({0.3}, {0.3}), 1.0), oracle::kLn2, 1e-12));
  CHECK(std::abs(gumbel_volume(Box({0.0}, {2.5}), 1e-6) - 2.5) < 1e-9);
  CHECK_THROWS_AS(gumbel_intersection_volume(std::vector<BoxView>{k04, Box({0, 0}, {1, 1})}, unit),
                  ContractViolation);
}

TEST_CASE("log soft length stays finite deep in the tail") {
  for (double x : {-1.0, -50.0, -1e3, -1e6}) {
    const double v = log_soft_length(x, 0.01);
    CHECK(std::isfinite(v));
    CHECK(v < std::log(0.01));
  }
  // continuity across the tail switch
  const double t = 0.01;
  CHECK(rel_close(log_soft_length(-30.0 * t * (1 + 1e-12), t), log_soft_length(-30.0 * t * (1 - 1e-12), t), 1e-9));
}

TEST_CASE("zero-temperature limit matches hard geometry") {
  Rng rng(11);
  const GumbelTemps cold{1e-4, 1e-4};
  int checked = 0;
  while (checked < 1000) {
    const std::size_t dim = 1 + rng.index(3);
    Box a = random_box(rng, dim, 0.0, 1.0, 0.3, 1.0);
    Box b = random_box(rng, dim, 0.0, 1.0, 0.3, 1.0);
    bool wide = true;
    for (std::size_t d = 0; d < dim; ++d) {
      wide = wide && std::min(a.max()[d], b.max()[d]) - std::max(a.min()[d], b.min()[d]) >= 0.1;
    }
    if (!wide) continue;
    const std::vector<BoxView> pair{a, b};
    CHECK(std::abs(gumbel_intersection_volume(pair, cold) - hard_intersection_volume(pair)) < 1e-3);
    ++checked;
  }
}

TEST_CASE("containment score and energy") {
  const GumbelTemps unit{1.0, 1.0};
  const std::vector<BoxView> c{k04};
  CHECK(rel_close(containment_score(c, k04, unit), oracle::kSelfScore, 1e-12));
  CHECK(rel_close(energy(c, k04, unit), oracle::kSelfEnergy, 1e-12));

  const Box big({-10, -10}, {10, 10}), small({-1, -1}, {1, 1});
  const GumbelTemps cold{1e-3, 1e-3};
  CHECK(std::abs(containment_score(std::vector<BoxView>{big}, small, cold) - 1.0) < 1e-3);
  CHECK(energy(std::vector<BoxView>{big}, small, cold) < 1e-3);

  const Box far({0}, {1}), near_target({1.0 + 100 * 0.01}, {2.0 + 100 * 0.01});
  CHECK(containment_score(std::vector<BoxView>{far}, near_target, {0.01, 0.01}) < 1e-6);

  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    Box a = random_box(rng, 3, -1, 1, 0.1, 2), m = random_box(rng, 3, -1, 1, 0.1, 2);
    const GumbelTemps t{rng.uniform(0.05, 2.0), rng.uniform(0.05, 2.0)};
    const std::vector<BoxView> one{a};
    const double s = containment_score(one, m, t);
    CHECK(s > 0.0);
    CHECK(s <= 1.0);
    CHECK(rel_close(std::exp(-energy(one, m, t)), s, 1e-14));
  }
}

TEST_CASE("energy is clamped for hopeless containment") {
  const Box a({0}, {1}), m({1e4}, {1e4 + 1});
  const GumbelTemps t{0.01, 0.01};
  const double e = energy(std::vector<BoxView>{a}, m, t);
  CHECK(e == doctest::Approx(-std::log(kMinScore)));
  BoxGrad ga, gm;
  std::vector<BoxGrad> gs(1);
  energy_with_grad(std::vector<BoxView>{a}, m, t, gs, gm);
  for (double g : gs[0].d_min) CHECK(g == 0.0);
  for (double g : gm.d_max) CHECK(g == 0.0);
}

TEST_CASE("query scores") {
  const GumbelTemps unit{1.0, 1.0};
  CHECK(rel_close(score_of({k04, k04}, k04.view(), k04, unit), oracle::kNegationFourCopies, 1e-12));
  CHECK(rel_close(score_of({k04, k04}, std::nullopt, k04, unit), oracle::kConjunctionThreeCopies, 1e-12));

  // a negated box far from the target removes nothing
  const Box u({0, 0}, {2, 2}), a1({0.5, 0}, {2.5, 2}), m({0.5, 0.5}, {1.5, 1.5});
  const Box a2({10, 10}, {11, 11});
  const GumbelTemps t{0.05, 0.05};
  CHECK(std::abs(score_of({u, a1}, a2.view(), m, t) - score_of({u, a1}, std::nullopt, m, t)) < 1e-6);

  CHECK_THROWS_AS(query_score({}, std::nullopt, m, t), ContractViolation);
}

TEST_CASE("inclusion-exclusion holds exactly") {
  Rng rng(3);
  for (int i = 0; i < 2000; ++i) {
    const std::size_t dim = 1 + rng.index(8);
    Box u = random_box(rng, dim, -2, 2, 0.1, 3), a1 = random_box(rng, dim, -2, 2, 0.1, 3);
    Box a2 = random_box(rng, dim, -2, 2, 0.1, 3), m = random_box(rng, dim, -2, 2, 0.1, 3);
    const GumbelTemps t{rng.uniform(0.05, 2.0), rng.uniform(0.05, 2.0)};
    const double base = score_of({u, a1}, std::nullopt, m, t);
    const double both = score_of({u, a1, a2}, std::nullopt, m, t);
    const double neg = score_of({u, a1}, a2.view(), m, t);
    CHECK(std::abs(base - both - neg) <= 1e-12);
    CHECK(both <= base);
    CHECK(neg >= 0.0);
    CHECK(neg <= 1.0);
  }
}

namespace {

// Every corner coordinate of every box, for finite differences.
std::vector<double*> coordinates(std::vector<Box*> boxes) {
  std::vector<double*> out;
  for (Box* b : boxes) {
    for (auto& v : b->min()) out.push_back(&v);
    for (auto& v : b->max()) out.push_back(&v);
  }
  return out;
}

std::vector<double> flatten(std::initializer_list<const BoxGrad*> grads) {
  std::vector<double> out;
  for (const BoxGrad* g : grads) {
    out.insert(out.end(), g->d_min.begin(), g->d_min.end());
    out.insert(out.end(), g->d_max.begin(), g->d_max.end());
  }
  return out;
}

void check_against_fd(const std::vector<double*>& coords, const std::vector<double>& analytic,
                      const std::function<double()>& f) {
  REQUIRE(coords.size() == analytic.size());
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const double fd = testing::central_difference(coords[i], 1e-5, f);
    INFO("coordinate " << i << " analytic " << analytic[i] << " fd " << fd);
    CHECK(rel_close(analytic[i], fd, 1e-4, 1e-7));
  }
}

}  // namespace

TEST_CASE("energy gradients match finite differences") {
  Rng rng(17);
  int configs = 0;
  for (std::size_t dim : {1u, 4u, 16u}) {
    for (double temp : {0.1, 1.0, 2.0}) {
      for (int rep = 0; rep < 6; ++rep, ++configs) {
        Box c = random_box(rng, dim, -0.5, 0.5, 0.5, 2.0);
        Box m = random_box(rng, dim, -0.5, 0.5, 0.5, 2.0);
        const GumbelTemps t{temp, temp * rng.uniform(0.5, 1.5)};
        std::vector<BoxGrad> gc(1);
        BoxGrad gm;
        energy_with_grad(std::vector<BoxView>{c}, m, t, gc, gm);
        check_against_fd(coordinates({&c, &m}), flatten({&gc[0], &gm}),
                         [&] { return energy(std::vector<BoxView>{c}, m, t); });
      }
    }
  }
  CHECK(configs >= 50);
}

TEST_CASE("query score gradients match finite differences for every shape") {
  Rng rng(23);
  int configs = 0;
  for (std::size_t dim : {1u, 4u, 16u}) {
    for (double temp : {0.1, 1.0, 2.0}) {
      for (int rep = 0; rep < 6; ++rep, ++configs) {
        Box u = random_box(rng, dim, -0.5, 0.5, 0.5, 2.0), a1 = random_box(rng, dim, -0.5, 0.5, 0.5, 2.0);
        Box a2 = random_box(rng, dim, -0.5, 0.5, 0.5, 2.0), m = random_box(rng, dim, -0.5, 0.5, 0.5, 2.0);
        const GumbelTemps t{temp, temp * rng.uniform(0.5, 1.5)};
        QueryGrad g;
        // u & a1
        query_score_with_grad(std::vector<BoxView>{u, a1}, std::nullopt, m, t, g);
        check_against_fd(coordinates({&u, &a1, &m}), flatten({&g.positives[0], &g.positives[1], &g.target}),
                         [&] { return score_of({u, a1}, std::nullopt, m, t); });
        // u & a1 & a2
        query_score_with_grad(std::vector<BoxView>{u, a1, a2}, std::nullopt, m, t, g);
        check_against_fd(coordinates({&u, &a1, &a2, &m}),
                         flatten({&g.positives[0], &g.positives[1], &g.positives[2], &g.target}),
                         [&] { return score_of({u, a1, a2}, std::nullopt, m, t); });
        // u & a1 & !a2
        query_score_with_grad(std::vector<BoxView>{u, a1}, a2.view(), m, t, g);
        check_against_fd(coordinates({&u, &a1, &a2, &m}),
                         flatten({&g.positives[0], &g.positives[1], &g.negated, &g.target}),
                         [&] { return score_of({u, a1}, a2.view(), m, t); });
      }
    }
  }
  CHECK(configs >= 50);
}

TEST_CASE("gradient symmetry and saturation") {
  const GumbelTemps unit{1.0, 1.0};
  const Box a({0, 1}, {2, 3});
  const Box b = a;
  const Box m({0.5, 1.5}, {1.5, 2.5});
  std::vector<BoxGrad> g(2);
  BoxGrad gm;
  energy_with_grad(std::vector<BoxView>{a, b}, m, unit, g, gm);
  for (std::size_t d = 0; d < 2; ++d) {
    CHECK(g[0].d_min[d] == g[1].d_min[d]);
    CHECK(g[0].d_max[d] == g[1].d_max[d]);
  }

  const double tau = 0.01;
  const Box c({0}, {1}), far({1 + 100 * tau}, {2 + 100 * tau});
  std::vector<BoxGrad> gc(1);
  energy_with_grad(std::vector<BoxView>{far}, c, {tau, tau}, gc, gm);
  for (const auto* g : {&gc[0], &gm}) {
    CHECK(std::abs(g->d_min[0]) < 1e-6);
    CHECK(std::abs(g->d_max[0]) < 1e-6);
  }
}
