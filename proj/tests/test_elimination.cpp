#include <doctest.h>

#include <queue>
#include <random>

#include "support/corpus.hpp"
#include "unitsel/bench.hpp"
#include "unitsel/elimination.hpp"
#include "unitsel/errors.hpp"
#include "unitsel/worlds.hpp"

using namespace unitsel;

namespace {

std::string names(const Scm& s, const std::vector<VarId>& ids) {
  std::string out;
  for (VarId v : ids) out += (out.empty() ? "" : ",") + s.variable(v).name;
  return out;
}

int width(const Scm& s, const EliminationOrder& o) { return simulate_elimination(moral_graph(s), o).width; }

EliminationOrder random_constrained(std::mt19937_64& rng, int n, const std::set<VarId>& units) {
  std::vector<VarId> rest, tail(units.begin(), units.end());
  for (VarId v = 0; v < n; ++v)
    if (!units.count(v)) rest.push_back(v);
  std::shuffle(rest.begin(), rest.end(), rng);
  std::shuffle(tail.begin(), tail.end(), rng);
  rest.insert(rest.end(), tail.begin(), tail.end());
  return {rest, units};
}

MoralGraph random_graph(std::mt19937_64& rng, int n, double density) {
  MoralGraph g(n);
  std::bernoulli_distribution edge(density);
  for (VarId a = 0; a < n; ++a)
    for (VarId b = a + 1; b < n; ++b)
      if (edge(rng)) g.add_edge(a, b);
  return g;
}

// U, A -> X; X, U -> Y
Scm base_axy() {
  Scm s;
  VarId a = s.add_variable("A", {"0", "1"});
  VarId x = s.add_variable("X", {"0", "1"});
  VarId y = s.add_variable("Y", {"0", "1"});
  VarId u = s.add_variable("U", {"0", "1"});
  s.set_cpt(a, {0.5, 0.5});
  s.set_cpt(u, {0.5, 0.5});
  s.set_parents(x, {a, u});
  s.set_cpt(x, {1, 0, 0, 1, 0, 1, 1, 0});
  s.set_parents(y, {x, u});
  s.set_cpt(y, {1, 0, 0, 1, 0, 1, 0, 1});
  return s;
}

}  // namespace

TEST_CASE("moral graph") {
  Scm v;
  VarId a = v.add_variable("A", {"0", "1"}), b = v.add_variable("B", {"0", "1"}), c = v.add_variable("C", {"0", "1"});
  v.set_parents(c, {a, b});
  v.set_cpt(c, {1, 0, 1, 0, 1, 0, 0, 1});
  CHECK(moral_graph(v).adjacent(a, b));

  Scm chain;
  a = chain.add_variable("A", {"0", "1"});
  b = chain.add_variable("B", {"0", "1"});
  c = chain.add_variable("C", {"0", "1"});
  chain.set_parents(b, {a});
  chain.set_parents(c, {b});
  chain.set_cpt(b, {1, 0, 0, 1});
  chain.set_cpt(c, {1, 0, 0, 1});
  auto g = moral_graph(chain);
  CHECK(g.edge_count() == 2);
  CHECK_FALSE(g.adjacent(a, c));

  Scm five = corpus::load_fixture("five_node.json");
  auto m = moral_graph(five);
  CHECK(m.edge_count() == 6);
  for (auto [p, q] : std::vector<std::pair<int, int>>{{0, 1}, {0, 2}, {1, 2}, {1, 3}, {2, 3}, {2, 4}})
    CHECK(m.adjacent(p, q));
}

TEST_CASE("trace order on the five-node model") {
  Scm five = corpus::load_fixture("five_node.json");
  auto order = load_order_file(five, std::string(FIXTURES_DIR) + "/five_node.order");
  CHECK(order.is_constrained_by({0, 1}));
  auto r = simulate_elimination(moral_graph(five), order);
  std::vector<std::string> got;
  for (const auto& c : r.clusters) got.push_back(format_var_set(five, c));
  CHECK(got == std::vector<std::string>{"CE", "BCD", "ABC", "AB", "A"});
  CHECK(r.width == 2);
  CHECK(width(five, minfill_order(moral_graph(five))) == 2);
  CHECK(exhaustive_min_width(moral_graph(five)).width == 2);
}

TEST_CASE("simulation corner cases") {
  MoralGraph iso(3);
  iso.add_edge(0, 1);
  auto r = simulate_elimination(iso, {{2, 0, 1}, std::nullopt});
  CHECK(r.clusters[0] == std::vector<VarId>{2});
  for (int k = 1; k <= 6; ++k) {
    MoralGraph complete(k);
    for (VarId a = 0; a < k; ++a)
      for (VarId b = a + 1; b < k; ++b) complete.add_edge(a, b);
    std::vector<VarId> seq(static_cast<std::size_t>(k));
    for (VarId v = 0; v < k; ++v) seq[v] = k - 1 - v;
    CHECK(order_width(complete, seq) == k - 1);
  }
}

TEST_CASE("minfill on trees and tie breaking") {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 20; ++t) {
    int n = 12;
    MoralGraph tree(n);
    for (VarId v = 1; v < n; ++v) tree.add_edge(v, std::uniform_int_distribution<int>(0, v - 1)(rng));
    auto order = minfill_order(tree);
    MoralGraph copy = tree;
    int fills = 0;
    for (VarId v : order.sequence) {
      fills += copy.fill_count(v);
      copy.eliminate(v);
    }
    CHECK(fills == 0);
    CHECK(simulate_elimination(tree, order).width == 1);
  }
  MoralGraph empty(3);
  CHECK(minfill_order(empty).sequence == std::vector<VarId>{0, 1, 2});
  CHECK(minfill_order(empty, std::set<VarId>{0}).sequence == std::vector<VarId>{1, 2, 0});
}

TEST_CASE("exact oracles agree and bound minfill") {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 40; ++t) {
    int n = std::uniform_int_distribution<int>(3, 8)(rng);
    MoralGraph g = random_graph(rng, n, 0.4);
    std::set<VarId> suffix;
    for (VarId v = 0; v < n; ++v)
      if (std::bernoulli_distribution(0.3)(rng)) suffix.insert(v);
    auto ex = exhaustive_min_width(g);
    CHECK(ex.width == subset_dp_min_width(g));
    CHECK(simulate_elimination(g, ex.order).width == ex.width);
    CHECK(simulate_elimination(g, minfill_order(g)).width >= ex.width);
    auto exc = exhaustive_min_width(g, suffix);
    CHECK(exc.width == subset_dp_min_width(g, suffix));
    CHECK(exc.order.is_constrained_by(suffix));
    CHECK(exc.width >= ex.width);
    CHECK(simulate_elimination(g, minfill_order(g, suffix)).width >= exc.width);
  }
}

TEST_CASE("width is invariant under relabeling") {
  std::mt19937_64 rng(15);
  for (int t = 0; t < 30; ++t) {
    int n = 9;
    MoralGraph g = random_graph(rng, n, 0.35);
    std::vector<VarId> perm(static_cast<std::size_t>(n));
    for (VarId v = 0; v < n; ++v) perm[v] = v;
    std::shuffle(perm.begin(), perm.end(), rng);
    MoralGraph h(n);
    for (VarId a = 0; a < n; ++a)
      for (VarId b : g.neighbors(a))
        if (a < b) h.add_edge(perm[a], perm[b]);
    std::vector<VarId> seq(static_cast<std::size_t>(n)), mapped;
    for (VarId v = 0; v < n; ++v) seq[v] = v;
    std::shuffle(seq.begin(), seq.end(), rng);
    for (VarId v : seq) mapped.push_back(perm[v]);
    CHECK(order_width(g, seq) == order_width(h, mapped));
    CHECK(subset_dp_min_width(g) == subset_dp_min_width(h));
  }
}

TEST_CASE("lifting reproduces the worked orders") {
  Scm s = base_axy();
  VarId a = 0, x = 1, y = 2, u = 3;
  ObjectiveFunction L{{u},
                      {{0.5, {{x, 1}}, {{y, 1}}, {{x, 0}}, {{y, 0}}, {{y, 1}}},
                       {0.5, {{x, 0}}, {{y, 1}}, {{x, 1}}, {{y, 1}}, {{y, 0}}}}};
  auto om = build_objective_model(s, L);
  EliminationOrder pi{{a, x, y, u}, std::set<VarId>{u}};
  auto unc = lift_order_unconstrained(pi, om.components, om.mixture);
  CHECK(names(om.model, unc.sequence) ==
        "A^1,A^2,X^1,X^2,[X^1],[X^2],[[X^1]],[[X^2]],Y^1,Y^2,[Y^1],[Y^2],[[Y^1]],[[Y^2]],U,H");
  auto con = lift_order_constrained(pi, om.components, om.mixture, {u});
  CHECK(names(om.model, con.sequence) ==
        "A^1,A^2,X^1,X^2,[X^1],[X^2],[[X^1]],[[X^2]],Y^1,Y^2,[Y^1],[Y^2],[[Y^1]],[[Y^2]],H,U");
  CHECK(con.is_valid(om.model.size()));
  CHECK_THROWS_AS(lift_order_constrained({{u, a, x, y}, std::nullopt}, om.components, om.mixture, {u}),
                  StructuralError);

  auto [one, wm] = triplet_model(s);
  auto single = lift_order_unconstrained(pi, {wm}, std::nullopt);
  CHECK(names(one, single.sequence) == "A,X,[X],[[X]],Y,[Y],[[Y]],U");
  EliminationOrder plain{{a, x, y, u}, std::nullopt};
  CHECK(lift_order_constrained(plain, om.components, om.mixture, {}).sequence ==
        lift_order_unconstrained(plain, om.components, om.mixture).sequence);
}

TEST_CASE("constrained n-world lifting keeps the width") {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 50; ++t) {
    Scm s = corpus::random_scm(rng, std::uniform_int_distribution<int>(1, 4)(rng),
                               std::uniform_int_distribution<int>(2, 7)(rng));
    auto roots = s.roots();
    std::set<VarId> units;
    for (VarId r : roots)
      if (units.empty() || std::bernoulli_distribution(0.5)(rng)) units.insert(r);
    int n = std::uniform_int_distribution<int>(1, 4)(rng);
    auto [m, wm] = n_world_model(s, units, n);
    auto pi = minfill_order(moral_graph(s), units);
    std::set<VarId> lifted_units;
    for (VarId u : units) lifted_units.insert(wm.copy(u, 0));
    auto lifted = lift_order_constrained(pi, {wm}, std::nullopt, units);
    CHECK(lifted.is_constrained_by(lifted_units));
    CHECK(width(m, lifted) == width(s, pi));
  }
}

TEST_CASE("adding a root") {
  std::mt19937_64 rng(41);
  int strict = 0;
  for (int t = 0; t < 100; ++t) {
    Scm s = corpus::random_scm(rng, 2, std::uniform_int_distribution<int>(2, 8)(rng));
    auto roots = s.roots();
    std::set<VarId> units(roots.begin(), roots.end());
    auto pi = minfill_order(moral_graph(s), units);
    int w = width(s, pi);

    Scm with_h = s;
    VarId h = with_h.add_variable("H", {"0", "1"});
    auto free_order = append_root_order({pi.sequence, std::nullopt}, h);
    CHECK(width(with_h, free_order) == std::max(w, 0));

    std::vector<VarId> kids;
    for (VarId v : s.internal_nodes())
      if (std::bernoulli_distribution(0.4)(rng)) kids.push_back(v);
    if (kids.empty()) kids.push_back(s.internal_nodes().back());
    for (VarId k : kids) {
      auto ps = with_h.parents(k);
      ps.push_back(h);
      with_h.set_parents(k, ps);
      with_h.set_cpt(k, std::vector<double>(with_h.cpt_length(k), 0.5));
    }
    CHECK(width(with_h, append_root_order({pi.sequence, std::nullopt}, h)) <= w + 1);

    // H inserted just before the unit block
    std::vector<VarId> seq;
    for (VarId v : pi.sequence)
      if (!units.count(v)) seq.push_back(v);
    seq.push_back(h);
    for (VarId v : pi.sequence)
      if (units.count(v)) seq.push_back(v);
    int w2 = width(with_h, {seq, units});
    CHECK(w2 <= std::max(w + 1, static_cast<int>(units.size())));
    if (kids.size() == 1 && w2 < w + 1) ++strict;
  }
  // a single child does not force w' = w + 1
  CHECK(strict > 0);
}

TEST_CASE("neighbors of H after eliminating everything but U and H") {
  std::mt19937_64 rng(55);
  for (int t = 0; t < 60; ++t) {
    Scm s = corpus::random_scm(rng, std::uniform_int_distribution<int>(2, 4)(rng),
                               std::uniform_int_distribution<int>(2, 7)(rng));
    VarId h = s.add_variable("H", {"0", "1"});
    for (VarId v : s.internal_nodes()) {
      if (v == h || !std::bernoulli_distribution(0.3)(rng)) continue;
      auto ps = s.parents(v);
      ps.push_back(h);
      s.set_parents(v, ps);
      s.set_cpt(v, std::vector<double>(s.cpt_length(v), 0.5));
    }
    auto roots = s.roots();
    std::set<VarId> units;
    for (VarId r : roots)
      if (r != h) units.insert(r);
    MoralGraph g = moral_graph(s);
    MoralGraph work = g;
    std::vector<VarId> rest;
    for (VarId v = 0; v < s.size(); ++v)
      if (v != h && !units.count(v)) rest.push_back(v);
    std::shuffle(rest.begin(), rest.end(), rng);
    for (VarId v : rest) work.eliminate(v);

    for (VarId u : units) {
      // path from u to h whose interior avoids U and H
      std::vector<bool> seen(static_cast<std::size_t>(s.size()), false);
      std::queue<VarId> q;
      q.push(u);
      seen[u] = true;
      bool reach = false;
      while (!q.empty() && !reach) {
        VarId v = q.front();
        q.pop();
        for (VarId w : g.neighbors(v)) {
          if (w == h) reach = true;
          if (seen[w] || units.count(w) || w == h) continue;
          seen[w] = true;
          q.push(w);
        }
      }
      CHECK(work.adjacent(u, h) == reach);
    }
  }
}

TEST_CASE("external roots") {
  Scm markov;
  std::vector<VarId> us, xs;
  for (int i = 0; i < 4; ++i) us.push_back(markov.add_variable("U" + std::to_string(i), {"0", "1"}));
  for (int i = 0; i < 4; ++i) {
    VarId x = markov.add_variable("X" + std::to_string(i), {"0", "1"});
    std::vector<VarId> ps{us[i]};
    if (i > 0) ps.push_back(xs.back());
    markov.set_parents(x, ps);
    markov.set_cpt(x, std::vector<double>(markov.cpt_length(x), 0.5));
    xs.push_back(x);
  }
  CHECK(is_external(markov, {us.begin(), us.end()}));
  auto pi = minfill_order(moral_graph(markov), std::set<VarId>(us.begin(), us.end()));
  CHECK(width(markov, pi) >= 4);

  // U0 is the only link between X0 and the rest
  Scm cut;
  VarId a = cut.add_variable("A", {"0", "1"});
  VarId b = cut.add_variable("B", {"0", "1"});
  VarId c = cut.add_variable("C", {"0", "1"});
  cut.set_parents(b, {a});
  cut.set_parents(c, {a});
  cut.set_cpt(b, {1, 0, 0, 1});
  cut.set_cpt(c, {1, 0, 0, 1});
  CHECK_FALSE(is_external(cut, {a}));

  Scm split;
  split.add_variable("P", {"0", "1"});
  split.add_variable("Q", {"0", "1"});
  CHECK_THROWS_AS(is_external(split, {}), StructuralError);

  for (int n = 3; n <= 6; ++n) {
    auto t = gen_tight_family(n);
    // computed, not assumed: U_1 is the only parent link of X^1 to the chain
    bool ext = is_external(t.scm, {t.units.begin(), t.units.end()});
    CHECK(ext == false);
  }
}

TEST_CASE("order files") {
  Scm five = corpus::load_fixture("five_node.json");
  auto o = parse_order(five, "#constrained: A,B\nE\nD\nC\nB\nA\n");
  CHECK(format_order(five, o) == "#constrained: B,A\nE\nD\nC\nB\nA\n");
  CHECK(parse_order(five, format_order(five, o)).sequence == o.sequence);
  CHECK_THROWS_AS(parse_order(five, "E\nD\n"), InputError);
  CHECK_THROWS_AS(parse_order(five, "E\nD\nC\nB\nZ\n"), InputError);
  CHECK_THROWS_AS(parse_order(five, "#constrained: E\nE\nD\nC\nB\nA\n"), InputError);
}
