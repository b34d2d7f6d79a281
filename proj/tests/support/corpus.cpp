#include "support/corpus.hpp"

#include <algorithm>

#include "unitsel/worlds.hpp"

namespace corpus {

namespace {

int uniform(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

double real(std::mt19937_64& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

std::vector<std::string> states(const std::string& name, int card) {
  std::vector<std::string> s;
  for (int k = 0; k < card; ++k) s.push_back(name + "_" + std::to_string(k));
  return s;
}

std::vector<double> distribution(std::mt19937_64& rng, int card, bool allow_zero) {
  std::vector<double> p(static_cast<std::size_t>(card));
  double total = 0;
  for (auto& x : p) total += (x = 0.05 + real(rng));
  if (allow_zero && card > 1 && real(rng) < 0.5) {
    int k = uniform(rng, 0, card - 1);
    total -= p[k];
    p[k] = 0.0;
  }
  for (auto& x : p) x /= total;
  return p;
}

std::vector<VarId> sample(std::mt19937_64& rng, std::vector<VarId> pool, int k) {
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(static_cast<std::size_t>(std::min<int>(k, static_cast<int>(pool.size()))));
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::size_t rows(const Scm& scm, const std::vector<VarId>& parents) {
  std::size_t r = 1;
  for (VarId p : parents) r *= static_cast<std::size_t>(scm.cardinality(p));
  return r;
}

}  // namespace

Scm random_scm(std::mt19937_64& rng, int roots, int endogenous, int max_card, bool zero_priors) {
  Scm scm;
  for (int i = 0; i < roots; ++i) {
    std::string name = "U" + std::to_string(i + 1);
    VarId r = scm.add_variable(name, states(name, uniform(rng, 2, std::max(2, max_card))));
    scm.set_cpt(r, distribution(rng, scm.cardinality(r), zero_priors && real(rng) < 0.2));
  }
  for (int i = 0; i < endogenous; ++i) {
    std::string name = "X" + std::to_string(i + 1);
    VarId x = scm.add_variable(name, states(name, uniform(rng, 2, std::max(2, max_card))));
    std::vector<VarId> earlier(static_cast<std::size_t>(x));
    for (VarId k = 0; k < x; ++k) earlier[k] = k;
    auto parents = sample(rng, earlier, uniform(rng, 1, 3));
    scm.set_parents(x, parents);
    std::vector<double> table;
    for (std::size_t r = 0; r < rows(scm, parents); ++r) {
      int s = uniform(rng, 0, scm.cardinality(x) - 1);
      for (int k = 0; k < scm.cardinality(x); ++k) table.push_back(k == s ? 1.0 : 0.0);
    }
    scm.set_cpt(x, table);
  }
  return scm;
}

Instance random_instance(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Instance inst;
  int root_count = uniform(rng, 1, 4);
  int endo = uniform(rng, 2, 8);
  inst.scm = random_scm(rng, root_count, endo, 2, true);
  const Scm& scm = inst.scm;

  std::vector<VarId> roots = scm.roots(), endogenous = scm.internal_nodes();
  inst.objective.units = sample(rng, roots, uniform(rng, 1, std::min(3, root_count)));

  auto random_states = [&](const std::vector<VarId>& vars) {
    Instantiation out;
    for (VarId v : vars) out[v] = uniform(rng, 0, scm.cardinality(v) - 1);
    return out;
  };

  int terms = uniform(rng, 1, 3);
  double total = 0;
  for (int t = 0; t < terms; ++t) {
    ObjectiveTerm term;
    term.weight = 0.1 + real(rng);
    total += term.weight;
    auto outcomes = sample(rng, endogenous, uniform(rng, 1, 2));
    std::vector<VarId> rest;
    for (VarId v : endogenous)
      if (!std::count(outcomes.begin(), outcomes.end(), v)) rest.push_back(v);

    // split outcomes between worlds 2 and 3
    std::vector<VarId> ys, ws;
    for (VarId o : outcomes) (real(rng) < 0.6 ? ys : ws).push_back(o);
    term.y = random_states(ys);
    term.w = random_states(ws);
    if (!rest.empty()) {
      if (real(rng) < 0.7) term.x = random_states(sample(rng, rest, 1));
      if (!ws.empty() && real(rng) < 0.7) term.v = random_states(sample(rng, rest, 1));
    }
    if (real(rng) < 0.5) {
      // evidence observed under a sampled exogenous state, so it is possible
      Instantiation exo;
      for (VarId r : roots) {
        auto p = scm.cpt(r);
        std::discrete_distribution<int> d(p.begin(), p.end());
        exo[r] = d(rng);
      }
      Instantiation world = scm.solve(exo);
      for (VarId v : sample(rng, endogenous, uniform(rng, 1, 2))) term.e[v] = world.at(v);
    }
    inst.objective.terms.push_back(term);
  }
  double acc = 0;
  for (std::size_t t = 0; t + 1 < inst.objective.terms.size(); ++t) acc += (inst.objective.terms[t].weight /= total);
  inst.objective.terms.back().weight = 1.0 - acc;
  return inst;
}

Query random_query(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Query q;
  int n = uniform(rng, 3, 12);
  int roots = uniform(rng, 1, std::max(1, n / 3));
  q.model = random_scm(rng, roots, n - roots, n <= 8 ? 3 : 2, true);
  // replace internal truth tables with random distributions, some with zeros
  for (VarId v : q.model.internal_nodes()) {
    std::vector<double> table;
    for (std::size_t r = 0; r < rows(q.model, q.model.parents(v)); ++r) {
      auto p = distribution(rng, q.model.cardinality(v), real(rng) < 0.3);
      table.insert(table.end(), p.begin(), p.end());
    }
    q.model.set_cpt(v, table);
  }
  std::vector<VarId> all(static_cast<std::size_t>(n));
  for (VarId v = 0; v < n; ++v) all[v] = v;
  std::shuffle(all.begin(), all.end(), rng);
  std::size_t k = 0;
  int t = uniform(rng, 1, std::min(3, n - 1));
  for (int i = 0; i < t; ++i) q.targets.push_back(all[k++]);
  auto take = [&](int count) {
    Instantiation out;
    for (int i = 0; i < count && k < all.size(); ++i, ++k) out[all[k]] = uniform(rng, 0, q.model.cardinality(all[k]) - 1);
    return out;
  };
  q.e1 = take(uniform(rng, 0, 2));
  q.e2 = take(uniform(rng, 0, 2));
  q.e = q.e1;
  q.e.insert(q.e2.begin(), q.e2.end());
  std::sort(q.targets.begin(), q.targets.end());
  return q;
}

Formula random_3cnf(std::mt19937_64& rng, int vars, int clauses) {
  std::string text = "p cnf " + std::to_string(vars) + " " + std::to_string(clauses) + "\n";
  for (int c = 0; c < clauses; ++c) {
    std::vector<VarId> pool(static_cast<std::size_t>(vars));
    for (int v = 0; v < vars; ++v) pool[v] = v + 1;
    for (VarId v : sample(rng, pool, 3)) text += (real(rng) < 0.5 ? "-" : "") + std::to_string(v) + " ";
    text += "0\n";
  }
  return parse_dimacs(text);
}

double enumerate_marginal(const Scm& scm, const Instantiation& e) {
  std::vector<VarId> all(static_cast<std::size_t>(scm.size()));
  for (VarId v = 0; v < scm.size(); ++v) all[v] = v;
  double total = 0;
  for_each_instantiation(scm, all, [&](const Instantiation& z) {
    for (auto [var, state] : e)
      if (z.at(var) != state) return;
    total += joint_prob(scm, z);
  });
  return total;
}

std::vector<double> enumerate_table(const Scm& scm, const std::vector<VarId>& vars, const Instantiation& e) {
  std::vector<double> out;
  for_each_instantiation(scm, vars, [&](const Instantiation& a) {
    Instantiation both = e;
    both.insert(a.begin(), a.end());
    out.push_back(enumerate_marginal(scm, both));
  });
  return out;
}

Scm load_fixture(const std::string& name) {
  return load_model_file(std::string(FIXTURES_DIR) + "/" + name, {.allow_nonfunctional = true});
}

}  // namespace corpus
