#include <doctest.h>

#include <random>

#include "unitsel/errors.hpp"
#include "unitsel/factor.hpp"

using namespace unitsel;

namespace {

constexpr VarId U = 0, V = 1;

Factor prior_u() { return Factor({U}, {2}, {0.2, 0.8}); }
Factor cpt_v() { return Factor({U, V}, {2, 2}, {0.6, 0.4, 0.3, 0.7}); }
Factor joint_uv() { return Factor({U, V}, {2, 2}, {0.12, 0.08, 0.24, 0.56}); }

Factor random_factor(std::mt19937_64& rng, std::vector<VarId> scope, const std::vector<int>& card_of) {
  std::vector<int> cards;
  std::size_t size = 1;
  for (VarId v : scope) {
    cards.push_back(card_of[v]);
    size *= static_cast<std::size_t>(card_of[v]);
  }
  std::uniform_real_distribution<double> d(0.0, 1.0);
  std::vector<double> values(size);
  for (auto& x : values) x = d(rng) < 0.15 ? 0.0 : d(rng);
  return Factor(std::move(scope), std::move(cards), std::move(values));
}

std::vector<VarId> random_scope(std::mt19937_64& rng, int universe) {
  std::vector<VarId> scope;
  for (VarId v = 0; v < universe; ++v)
    if (std::uniform_int_distribution<int>(0, 1)(rng)) scope.push_back(v);
  return scope;
}

}  // namespace

TEST_CASE("factor construction validates layout") {
  CHECK(Factor().is_scalar());
  CHECK(Factor()[0] == 1.0);
  CHECK_THROWS_AS(Factor({1, 0}, {2, 2}, {1, 1, 1, 1}), StructuralError);
  CHECK_THROWS_AS(Factor({0}, {2}, {1, 1, 1}), StructuralError);
  CHECK_THROWS_AS(Factor({0}, {2}, {1, -1}), StructuralError);
  Factor f = joint_uv();
  CHECK(f.at({{U, 1}, {V, 0}}) == doctest::Approx(0.24));
  CHECK(f.assignment_at(3) == Instantiation{{U, 1}, {V, 1}});
}

TEST_CASE("multiply") {
  CHECK(approx_equal(multiply(prior_u(), cpt_v()), joint_uv()));
  Factor f = joint_uv();
  CHECK(multiply(f, Factor::constant({U, V}, {2, 2}, 1.0)) == f);
  CHECK(multiply(f, Factor::constant({U, V}, {2, 2}, 0.0)).total() == 0.0);
  CHECK_THROWS_AS(multiply(Factor({U}, {2}, {1, 1}), Factor({U}, {3}, {1, 1, 1})), StructuralError);
}

TEST_CASE("sum_out") {
  const VarId u[] = {U};
  CHECK(approx_equal(sum_out(joint_uv(), u), Factor({V}, {2}, {0.36, 0.64})));
  CHECK(sum_out(joint_uv(), std::span<const VarId>{}) == joint_uv());
  const VarId v[] = {V};
  Factor per_row = sum_out(cpt_v(), v);
  CHECK(per_row[0] == doctest::Approx(1.0));
  CHECK(per_row[1] == doctest::Approx(1.0));
  const VarId missing[] = {7};
  CHECK_THROWS_AS(sum_out(joint_uv(), missing), StructuralError);
}

TEST_CASE("max_out records maximizers") {
  const VarId u[] = {U};
  auto r = max_out(joint_uv(), u);
  CHECK(approx_equal(r.factor, Factor({V}, {2}, {0.24, 0.56})));
  CHECK(r.maximizers.lookup({{V, 0}}).at(U) == 1);
  CHECK(r.maximizers.lookup({{V, 1}}).at(U) == 1);

  auto none = max_out(joint_uv(), std::span<const VarId>{});
  CHECK(none.factor == joint_uv());
  CHECK(none.maximizers.empty());

  auto flat = max_out(Factor::constant({U, V}, {2, 2}, 0.25), std::array<VarId, 2>{U, V});
  CHECK(flat.factor[0] == 0.25);
  CHECK(flat.maximizers.lookup({}) == Instantiation{{U, 0}, {V, 0}});
}

TEST_CASE("divide") {
  Factor f = joint_uv();
  CHECK(approx_equal(divide(f, f), Factor::constant({U, V}, {2, 2}, 1.0)));
  CHECK(approx_equal(divide(Factor({U}, {2}, {0.12, 0.24}), prior_u()), Factor({U}, {2}, {0.6, 0.3})));
  CHECK(divide(Factor({U}, {1}, {0.0}), Factor({U}, {1}, {0.0}))[0] == 0.0);
  CHECK_THROWS_AS(divide(Factor({U}, {2}, {0.1, 0.2}), Factor({U}, {2}, {0.0, 1.0})), ConsistencyError);
  CHECK_THROWS_AS(divide(Factor({U}, {2}, {1, 1}), Factor({V}, {2}, {1, 1})), StructuralError);
}

TEST_CASE("reduce") {
  CHECK(approx_equal(reduce(joint_uv(), {{V, 0}}), Factor({U, V}, {2, 2}, {0.12, 0, 0.24, 0})));
  CHECK(reduce(joint_uv(), {}) == joint_uv());
  CHECK(reduce(Factor::constant({U}, {2}, 0.0), {{U, 1}}).total() == 0.0);
}

TEST_CASE("algebraic properties on random factors") {
  std::mt19937_64 rng(11);
  const std::vector<int> card{2, 3, 2, 2, 3};
  for (int trial = 0; trial < 200; ++trial) {
    Factor f = random_factor(rng, random_scope(rng, 5), card);
    Factor g = random_factor(rng, random_scope(rng, 5), card);
    Factor h = random_factor(rng, random_scope(rng, 5), card);
    CHECK(approx_equal(multiply(f, g), multiply(g, f), 1e-15));
    CHECK(approx_equal(multiply(multiply(f, g), h), multiply(f, multiply(g, h)), 1e-12));

    std::vector<VarId> only_f;
    for (VarId v : f.scope())
      if (!g.mentions(v)) only_f.push_back(v);
    CHECK(approx_equal(sum_out(multiply(f, g), only_f), multiply(sum_out(f, only_f), g)));
    auto lhs = max_out(multiply(f, g), only_f);
    CHECK(approx_equal(lhs.factor, multiply(max_out(f, only_f).factor, g)));

    // maximizer reproduces the max value in every cell
    for (std::size_t i = 0; i < lhs.factor.size(); ++i) {
      Instantiation ctx = lhs.factor.assignment_at(i);
      Instantiation full = ctx;
      for (auto [var, state] : lhs.maximizers.lookup(ctx)) full[var] = state;
      CHECK(multiply(f, g).at(full) == lhs.factor[i]);
    }

    std::vector<double> positive(f.values());
    for (auto& x : positive) x += 0.5;
    Factor p(f.scope(), f.cards(), positive);
    CHECK(approx_equal(multiply(divide(f, p), p), f, 1e-12));
  }
}
