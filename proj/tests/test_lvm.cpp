#include "doctest.h"
#include "fgrn/errors.hpp"
#include "fgrn/lvm.hpp"
#include "fixtures.hpp"

using namespace fgrn;
using fixtures::to_vec;
using fixtures::variable;

namespace {

LvmSpec six_observed(bool with_class) {
  LvmSpec spec;
  spec.hidden_dims = {20};
  for (int j = 0; j < 6; ++j) spec.observed.push_back(variable("Y" + std::to_string(j), 3));
  if (with_class) spec.class_variable = variable("L", 2);
  return spec;
}

Model small_class_model(std::uint64_t seed) {
  LvmSpec spec;
  spec.hidden_dims = {2};
  spec.observed = {variable("A", 2), variable("B", 2)};
  spec.class_variable = variable("L", 2);
  spec.seed = seed;
  Model m = build(spec);
  m.sources[0].set_prior(Message({0.35, 0.65}));
  return m;
}

oracle::Tables exact(const Model& m, const oracle::Observations& obs) {
  return oracle::enumerate(fixtures::to_oracle(m), obs, std::vector<bool>(m.bottom_count(), true),
                           std::vector<bool>(m.hidden_count(), true));
}

}  // namespace

TEST_CASE("build: diverter arity counts sources and blocks") {
  CHECK(build(six_observed(false)).diverter.arity() == 7);
  CHECK(build(six_observed(true)).diverter.arity() == 8);
}

TEST_CASE("build: product space for two hidden variables") {
  LvmSpec spec;
  spec.hidden_dims = {2, 3};
  spec.observed = {variable("A", 4), variable("B", 2)};
  const Model m = build(spec);
  CHECK(m.product_size() == 6);
  REQUIRE(m.selectors.size() == 2);
  CHECK(m.selectors[0].entries == std::vector<std::uint32_t>{0, 0, 0, 1, 1, 1});
  for (const auto& b : m.blocks) CHECK(b.theta().rows() == 6);
  CHECK(m.diverter.arity() == 4);
  CHECK(m.diverter.dimension() == 6);
}

TEST_CASE("build: naive Bayes class block is a frozen identity") {
  LvmSpec spec;
  spec.hidden_dims = {3};
  spec.observed = {variable("A", 2)};
  spec.class_variable = variable("L", 3);
  spec.naive_bayes = true;
  const Model m = build(spec);
  CHECK(m.blocks.back().theta() == RowStochasticMatrix::identity(3));
  CHECK(m.blocks.back().frozen());
  CHECK(m.naive_bayes);
}

TEST_CASE("build: invalid specs") {
  LvmSpec spec;
  spec.observed = {variable("A", 2)};
  CHECK_THROWS_AS(build(spec), InvalidSpec);
  spec.hidden_dims = {1};
  CHECK_THROWS_AS(build(spec), InvalidSpec);
  spec.hidden_dims = {2};
  spec.naive_bayes = true;
  CHECK_THROWS_AS(build(spec), InvalidSpec);
  spec.class_variable = variable("L", 3);
  CHECK_THROWS_AS(build(spec), InvalidSpec);
  spec.naive_bayes = false;
  spec.observed = {};
  CHECK_THROWS_AS(build(spec), InvalidSpec);
  spec.observed = {VariableInfo{"A", {"x", "x"}}};
  CHECK_THROWS_AS(build(spec), InvalidSpec);
}

TEST_CASE("build: the seed fixes the initial matrices") {
  CHECK(build(six_observed(true)).blocks[3].theta() == build(six_observed(true)).blocks[3].theta());
  LvmSpec other = six_observed(true);
  other.seed = 1;
  CHECK_FALSE(build(other).blocks[3].theta() == build(six_observed(true)).blocks[3].theta());
}

TEST_CASE("classify: a fresh symmetric model with no evidence predicts uniformly") {
  LvmSpec spec = six_observed(true);
  Model m = build(spec);
  m.blocks.back().set_theta(RowStochasticMatrix::uniform(20, 2));
  const auto c = classify(m, std::vector<std::optional<Message>>(6));
  CHECK(c.f_l.is_uniform());
  CHECK(c.label == 0);
}

TEST_CASE("classify agrees with enumeration and ignores evidence scale") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Model m = small_class_model(rng.next());
    std::vector<std::optional<Message>> obs(2);
    obs[0] = Message::delta(2, rng.below(2));
    if (rng.below(2)) obs[1] = Message({rng.uniform01() + 0.1, rng.uniform01() + 0.1});
    const auto c = classify(m, obs);
    oracle::Observations o = fixtures::to_oracle(make_evidence(m, obs));
    CHECK(fixtures::diff(c.f_l, exact(m, o).y[2]) <= 1e-10);

    std::vector<std::optional<Message>> scaled = obs;
    for (auto& e : scaled) {
      if (!e) continue;
      std::vector<double> v(e->values().begin(), e->values().end());
      for (double& x : v) x *= 7.5;
      e = Message(v);
    }
    CHECK(classify(m, scaled).label == c.label);
  }
}

TEST_CASE("classify needs a class variable") {
  LvmSpec spec = six_observed(false);
  CHECK_THROWS_AS(classify(build(spec), std::vector<std::optional<Message>>(6)), InvalidSpec);
  CHECK_THROWS_AS(classify(build(six_observed(true)), std::vector<std::optional<Message>>(5)), ShapeMismatch);
}

TEST_CASE("complete: all unknown gives the prior predictive") {
  const Model m = small_class_model(3);
  const auto c = complete(m, {std::nullopt, std::nullopt});
  const auto t = exact(m, oracle::Observations(3));
  for (std::size_t j = 0; j < 3; ++j) CHECK(fixtures::diff(c.forwards[j], t.y[j]) <= 1e-12);
  CHECK(fixtures::diff(*c.class_posterior, t.y[2]) <= 1e-12);
}

TEST_CASE("complete: one known of two matches the exact conditional") {
  const Model m = small_class_model(4);
  const auto c = complete(m, {Message::delta(2, 1), std::nullopt});
  CHECK_FALSE(c.known[1]);
  oracle::Observations o(3);
  o[0] = oracle::Vec{0.0, 1.0};
  const auto t = exact(m, o);
  CHECK(fixtures::diff(c.forwards[1], t.y[1]) <= 1e-10);
  CHECK(fixtures::diff(*c.class_posterior, t.y[2]) <= 1e-10);
}

TEST_CASE("complete: a clamped class conditions the completion") {
  const Model m = small_class_model(6);
  const auto c = complete(m, {Message::delta(2, 0), std::nullopt}, Message::delta(2, 1));
  oracle::Observations o(3);
  o[0] = oracle::Vec{1.0, 0.0};
  o[2] = oracle::Vec{0.0, 1.0};
  const auto t = exact(m, o);
  CHECK(fixtures::diff(c.forwards[1], t.y[1]) <= 1e-10);
  CHECK(*c.class_posterior == Message::delta(2, 1));

  // A uniform b_L behaves exactly like no label at all.
  const auto u = complete(m, {Message::delta(2, 0), std::nullopt}, Message::uniform(2));
  const auto none = complete(m, {Message::delta(2, 0), std::nullopt});
  CHECK(*u.class_posterior == *none.class_posterior);
  CHECK(u.forwards[1] == none.forwards[1]);
}

TEST_CASE("prototype: naive Bayes reads matrix rows exactly") {
  LvmSpec spec;
  spec.hidden_dims = {3};
  spec.observed = {variable("A", 4), variable("B", 2)};
  spec.class_variable = variable("L", 3);
  spec.naive_bayes = true;
  spec.seed = 8;
  Model m = build(spec);
  m.sources[0].set_prior(Message({0.5, 0.2, 0.3}));
  for (std::size_t j = 0; j < 3; ++j) {
    const auto f = prototype(m, j);
    REQUIRE(f.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
      const auto row = m.blocks[i].theta().row(j);
      CHECK(std::equal(row.begin(), row.end(), f[i].values().begin()));
    }
  }
  CHECK_THROWS_AS(prototype(m, 3), IndexOutOfRange);
  CHECK_THROWS_AS(prototype(m, 99), IndexOutOfRange);
}

TEST_CASE("prototype matches P(Y_i | L = j) by enumeration") {
  const Model m = small_class_model(12);
  for (std::size_t j = 0; j < 2; ++j) {
    const auto f = prototype(m, j);
    oracle::Observations o(3);
    o[2] = oracle::Vec(2, 0.0);
    (*o[2])[j] = 1.0;
    const auto t = exact(m, o);
    for (std::size_t i = 0; i < 2; ++i) CHECK(fixtures::diff(f[i], t.y[i]) <= 1e-10);
  }
}

TEST_CASE("centroid: delta source selects one row of every matrix, bitwise") {
  Model m = build(six_observed(true));
  m.sources[0].set_prior(normalize(Message(oracle::Vec(20, 1.0))));
  for (std::size_t j = 0; j < 20; ++j) {
    const auto f = centroid(m, j);
    REQUIRE(f.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) {
      const auto row = m.blocks[i].theta().row(j);
      CHECK(std::equal(row.begin(), row.end(), f[i].values().begin()));
    }
  }
  CHECK_THROWS_AS(centroid(m, 20), IndexOutOfRange);
}

TEST_CASE("centroids weighted by the prior reproduce the prior predictive") {
  Rng rng(17);
  LvmSpec spec;
  spec.hidden_dims = {5};
  spec.observed = {variable("A", 3), variable("B", 4)};
  spec.seed = 2;
  Model m = build(spec);
  m.sources[0].set_prior(Message(oracle::random_vec(rng, 5)));
  const auto predictive = complete(m, {std::nullopt, std::nullopt});
  for (std::size_t i = 0; i < 2; ++i) {
    oracle::Vec mix(m.variables[i].size(), 0.0);
    for (std::size_t j = 0; j < 5; ++j) {
      const auto f = centroid(m, j);
      for (std::size_t y = 0; y < mix.size(); ++y) mix[y] += m.sources[0].prior()[j] * f[i][y];
    }
    CHECK(fixtures::diff(predictive.forwards[i], mix) <= 1e-12);
  }
}

TEST_CASE("centroid needs a single hidden variable") {
  LvmSpec spec;
  spec.hidden_dims = {2, 2};
  spec.observed = {variable("A", 2)};
  CHECK_THROWS_AS(centroid(build(spec), 0), InvalidSpec);
}

TEST_CASE("product-space model equals a flat model over the joint alphabet") {
  Rng rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    LvmSpec spec;
    spec.hidden_dims = {2, 3};
    spec.observed = {variable("A", 3), variable("B", 2), variable("C", 4)};
    spec.seed = rng.next();
    Model joint = build(spec);
    joint.sources[0].set_prior(Message(oracle::random_vec(rng, 2)));
    joint.sources[1].set_prior(Message(oracle::random_vec(rng, 3)));

    LvmSpec flat_spec = spec;
    flat_spec.hidden_dims = {6};
    Model flat = build(flat_spec);
    std::vector<double> outer;
    for (std::size_t a = 0; a < 2; ++a)
      for (std::size_t b = 0; b < 3; ++b) outer.push_back(joint.sources[0].prior()[a] * joint.sources[1].prior()[b]);
    flat.sources[0].set_prior(Message(outer));
    for (std::size_t j = 0; j < 3; ++j) flat.blocks[j].set_theta(joint.blocks[j].theta());

    const Evidence ev = fixtures::random_evidence(rng, joint);
    const Snapshot a = infer_pass(joint, ev);
    const Snapshot b = infer_pass(flat, ev);
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(fixtures::diff(a.bottom[j].forward, to_vec(b.bottom[j].forward)) <= 1e-12);
      CHECK(fixtures::diff(marginal(a.bottom[j]), to_vec(marginal(b.bottom[j]))) <= 1e-12);
    }
  }
}
