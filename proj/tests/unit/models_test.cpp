#include <cmath>
#include <functional>
#include <vector>

#include "boxrec/errors.hpp"
#include "boxrec/models.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace boxrec;
using testing::rel_close;

namespace {

std::unique_ptr<EmbeddingModel> make(Family f, std::size_t dim, VocabSizes sizes, std::uint64_t seed = 1,
                                     GumbelTemps temps = {1.0, 1.0}) {
  ModelConfig c;
  c.family = f;
  c.dim = dim;
  c.temps = temps;
  c.seed = seed;
  return init_model(c, sizes);
}

// Compare energy_with_grad (scattered by accumulate) with central differences
// on every parameter of the row and item entities.
void check_energy_gradient(EmbeddingModel& model, EntityClass c, Index row, Index item) {
  LocalGrad local;
  model.energy_with_grad(c, row, item, local);
  Gradients grads = model.make_gradients();
  model.accumulate(local, c, row, item, 1.0, grads);
  auto blocks = model.parameter_blocks();
  model.sync();
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    for (std::size_t i = 0; i < blocks[b].size(); ++i) {
      double* p = &blocks[b][i];
      const double fd = testing::central_difference(p, 1e-5, [&] {
        model.sync();
        return model.energy(c, row, item);
      });
      model.sync();
      INFO("block " << b << " index " << i);
      CHECK(rel_close(grads[b][i], fd, 1e-4, 1e-8));
    }
  }
}

}  // namespace

TEST_CASE("initialization is deterministic and well formed") {
  for (Family f : {Family::box, Family::mf}) {
    auto a = make(f, 8, {20, 30, 5}, 42);
    auto b = make(f, 8, {20, 30, 5}, 42);
    auto c = make(f, 8, {20, 30, 5}, 43);
    const auto pa = std::as_const(*a).parameter_blocks();
    const auto pb = std::as_const(*b).parameter_blocks();
    const auto pc = std::as_const(*c).parameter_blocks();
    bool same = true, differs = false;
    for (std::size_t i = 0; i < pa.size(); ++i) {
      same = same && std::equal(pa[i].begin(), pa[i].end(), pb[i].begin());
      differs = differs || !std::equal(pa[i].begin(), pa[i].end(), pc[i].begin());
    }
    CHECK(same);
    CHECK(differs);
  }
  CHECK_THROWS_AS(make(Family::box, 4, {0, 3, 3}), ContractViolation);
  CHECK_THROWS_AS(make(Family::mf, 4, {3, 3, 0}), ContractViolation);
}

TEST_CASE("default dimensions keep parameter parity") {
  ModelConfig box, mf;
  mf.family = Family::mf;
  CHECK(box.resolved_dim() == 64);
  CHECK(mf.resolved_dim() == 128);
  auto b = init_model(box, {2, 2, 2});
  auto m = init_model(mf, {2, 2, 2});
  CHECK(b->reals_per_entity() == m->reals_per_entity());
}

TEST_CASE("initial boxes have positive width and overlap on every dimension") {
  ModelConfig c;
  c.seed = 9;
  auto model = init_model(c, {1000, 1000, 1});
  const auto& box = dynamic_cast<const BoxModel&>(*model);
  for (EntityClass cls : {EntityClass::user, EntityClass::item}) {
    for (Index i = 0; i < 1000; ++i) {
      const auto b = box.box(cls, i);
      for (std::size_t d = 0; d < b.dim(); ++d) CHECK_FALSE(b.max[d] <= b.min[d]);
    }
  }
  Rng rng(4);
  int overlapping = 0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    const auto u = box.box(EntityClass::user, rng.index(1000));
    const auto m = box.box(EntityClass::item, rng.index(1000));
    bool all = true;
    for (std::size_t d = 0; d < u.dim(); ++d) all = all && std::min(u.max[d], m.max[d]) > std::max(u.min[d], m.min[d]);
    overlapping += all;
  }
  CHECK(overlapping >= 0.99 * trials);
}

TEST_CASE("vector scores") {
  MfModel mf(3, {2, 3, 3});
  auto set = [&](EntityClass c, Index i, std::vector<double> v) {
    auto row = mf.table(c).row(i);
    std::copy(v.begin(), v.end(), row.begin());
  };
  CHECK(mf.entity_score(EntityClass::user, 0, 0) == 0.5);

  set(EntityClass::user, 0, {1, 0, 0});
  set(EntityClass::item, 0, {1, 0, 0});
  set(EntityClass::item, 1, {0, 1, 0});
  CHECK(rel_close(mf.entity_score(EntityClass::user, 0, 0), oracle::kSigmoid1, 1e-15));
  CHECK(mf.entity_score(EntityClass::user, 0, 1) == 0.5);

  QueryShape only_user{0, {}, std::nullopt};
  CHECK(mf.geometric_score(only_user, 0) == mf.entity_score(EntityClass::user, 0, 0));

  set(EntityClass::attribute, 0, {0, 1, 0});
  set(EntityClass::attribute, 1, {0.3, -0.2, 0.7});
  set(EntityClass::item, 2, {1, 1, 0});
  CHECK(rel_close(mf.geometric_score({0, {0}, std::nullopt}, 2), oracle::kSigmoid2, 1e-15));
  // adding then subtracting the same attribute cancels
  CHECK(mf.geometric_score({0, {1}, 1}, 2) == doctest::Approx(mf.entity_score(EntityClass::user, 0, 2)).epsilon(1e-14));
  CHECK(mf.geometric_score({0, {0, 1}, std::nullopt}, 2) ==
        doctest::Approx(mf.geometric_score({0, {1, 0}, std::nullopt}, 2)).epsilon(1e-14));

  CHECK_THROWS_AS(mf.entity_score(EntityClass::user, 2, 0), LookupError);
  CHECK_THROWS_AS(mf.geometric_score({0, {7}, std::nullopt}, 0), LookupError);
}

TEST_CASE("box scores delegate to the geometry") {
  auto model = make(Family::box, 4, {3, 5, 4}, 7, {0.2, 0.3});
  auto& box = dynamic_cast<BoxModel&>(*model);
  const Box u = box.realize(EntityClass::user, 1), a = box.realize(EntityClass::attribute, 2);
  const Box a3 = box.realize(EntityClass::attribute, 3);
  const Box m = box.realize(EntityClass::item, 4);
  const GumbelTemps t{0.2, 0.3};
  CHECK(box.entity_score(EntityClass::user, 1, 4) == containment_score(std::vector<BoxView>{u}, m, t));
  CHECK(box.geometric_score({1, {2}, 3}, 4) == query_score(std::vector<BoxView>{u, a}, a3.view(), m, t));
  CHECK(box.energy(EntityClass::attribute, 2, 4) == energy(std::vector<BoxView>{a}, m, t));
  CHECK_THROWS_AS(box.entity_score(EntityClass::user, 3, 0), LookupError);
  CHECK_THROWS_AS(box.geometric_score({1, {2}, 4}, 0), LookupError);
}

TEST_CASE("box query monotonicity and self-intersection") {
  Rng rng(2);
  for (int rep = 0; rep < 50; ++rep) {
    auto model = make(Family::box, 6, {4, 6, 4}, rng.next_u64(), {rng.uniform(0.05, 1), rng.uniform(0.05, 1)});
    auto& box = dynamic_cast<BoxModel&>(*model);
    // perturb so boxes are not all alike
    for (auto block : box.parameter_blocks()) for (auto& v : block) v += rng.uniform(-0.5, 0.5);
    box.sync();
    for (Index m = 0; m < 6; ++m) {
      CHECK(box.geometric_score({0, {1, 2}, std::nullopt}, m) <= box.geometric_score({0, {1}, std::nullopt}, m));
      const double neg = box.geometric_score({0, {1}, 3}, m);
      CHECK(neg >= 0.0);
      CHECK(neg <= 1.0);
    }
  }
  // attribute 0 made identical to user 0: intersecting with a copy never raises the score
  auto model = make(Family::box, 3, {1, 2, 1}, 5);
  auto& box = dynamic_cast<BoxModel&>(*model);
  box.table(EntityClass::attribute).min_params.values = box.table(EntityClass::user).min_params.values;
  box.table(EntityClass::attribute).width_params.values = box.table(EntityClass::user).width_params.values;
  box.sync();
  for (Index m = 0; m < 2; ++m) {
    CHECK(box.geometric_score({0, {0}, std::nullopt}, m) <= box.geometric_score({0, {}, std::nullopt}, m));
  }
}

TEST_CASE("energy gradients through the parameterization") {
  Rng rng(31);
  for (int rep = 0; rep < 10; ++rep) {
    auto box = make(Family::box, 3, {2, 3, 2}, rng.next_u64(), {rng.uniform(0.1, 2), rng.uniform(0.1, 2)});
    for (auto block : box->parameter_blocks()) for (auto& v : block) v += rng.uniform(-0.3, 0.3);
    box->sync();
    check_energy_gradient(*box, EntityClass::user, rng.index(2), rng.index(3));
    check_energy_gradient(*box, EntityClass::attribute, rng.index(2), rng.index(3));

    auto mf = make(Family::mf, 4, {2, 3, 2}, rng.next_u64());
    for (auto block : mf->parameter_blocks()) for (auto& v : block) v = rng.uniform(-1, 1);
    check_energy_gradient(*mf, EntityClass::user, rng.index(2), rng.index(3));
    check_energy_gradient(*mf, EntityClass::attribute, rng.index(2), rng.index(3));
  }
}

TEST_CASE("clones are independent") {
  auto a = make(Family::box, 2, {1, 1, 1});
  auto b = a->clone();
  for (auto block : a->parameter_blocks()) for (auto& v : block) v += 1.0;
  a->sync();
  CHECK(a->entity_score(EntityClass::user, 0, 0) != doctest::Approx(-1));
  const auto pa = std::as_const(*a).parameter_blocks();
  const auto pb = std::as_const(*b).parameter_blocks();
  CHECK(pa[0][0] == pb[0][0] + 1.0);
}
