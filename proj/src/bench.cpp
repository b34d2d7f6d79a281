#include "unitsel/bench.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <set>

#include "unitsel/errors.hpp"
#include "unitsel/worlds.hpp"

namespace unitsel {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0;
  for (auto p : parts) h = splitmix(h ^ p);
  return h;
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_int(rng, 0, static_cast<int>(i) - 1)]);
}

template <typename T>
const T& pick(const std::vector<T>& v, std::mt19937_64& rng) {
  return v[uniform_int(rng, 0, static_cast<int>(v.size()) - 1)];
}

int width_of(const Scm& scm, const EliminationOrder& order) {
  return simulate_elimination(moral_graph(scm), order).width;
}

}  // namespace

Scm gen_random_scm(const GenConfig& cfg) {
  if (cfg.node_count < 2) throw InputError("random SCM needs at least 2 nodes");
  if (cfg.max_parents < 1) throw InputError("max_parents must be positive");
  std::mt19937_64 rng(cfg.seed);
  const int n = cfg.node_count;
  std::vector<std::vector<int>> parents(n);
  for (int i = 1; i < n; ++i) {
    std::vector<int> pool(i);
    for (int k = 0; k < i; ++k) pool[k] = k;
    shuffle(pool, rng);
    int k = uniform_int(rng, 1, std::min(cfg.max_parents, i));
    parents[i].assign(pool.begin(), pool.begin() + k);
    std::sort(parents[i].begin(), parents[i].end());
  }

  Scm scm;
  for (int i = 0; i < n; ++i) scm.add_variable("N" + std::to_string(i + 1), {"0", "1"});
  int extra = 0;
  for (int i = 1; i < n; ++i) {
    std::vector<VarId> ps(parents[i].begin(), parents[i].end());
    bool has_root = std::any_of(ps.begin(), ps.end(), [&](VarId p) { return parents[p].empty(); });
    if (!has_root) ps.push_back(scm.add_variable("R" + std::to_string(++extra), {"0", "1"}));
    scm.set_parents(i, ps);
    std::vector<double> table;
    for (std::size_t row = 0; row < (std::size_t{1} << ps.size()); ++row) {
      int state = uniform_int(rng, 0, 1);
      table.push_back(state == 0 ? 1.0 : 0.0);
      table.push_back(state == 1 ? 1.0 : 0.0);
    }
    scm.set_cpt(i, table);
  }
  std::uniform_real_distribution<double> prior(0.05, 0.95);
  for (VarId r : scm.roots()) {
    double a = prior(rng), b = prior(rng);
    scm.set_cpt(r, {a / (a + b), b / (a + b)});
  }
  return scm;
}

std::vector<VarId> pick_units(const Scm& scm, double ratio, std::mt19937_64& rng) {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw InputError("unit ratio must lie in (0, 1]");
  std::vector<VarId> roots = scm.roots();
  long count = std::max(1L, std::lround(ratio * static_cast<double>(roots.size())));
  shuffle(roots, rng);
  roots.resize(static_cast<std::size_t>(std::min<long>(count, static_cast<long>(roots.size()))));
  std::sort(roots.begin(), roots.end());
  return roots;
}

TightFamily gen_tight_family(int n) {
  if (n < 3) throw InputError("tight family needs n >= 3");
  TightFamily t;
  Scm& s = t.scm;
  for (int i = 1; i <= n; ++i) t.units.push_back(s.add_variable("U" + std::to_string(i), {"0", "1"}));
  std::vector<VarId> xs;
  for (int i = 1; i < n; ++i) xs.push_back(s.add_variable("X" + std::to_string(i), {"0", "1"}));
  VarId e = s.add_variable("E", {"0", "1"});
  for (VarId u : t.units) s.set_cpt(u, {0.5, 0.5});

  s.set_parents(e, {t.units[n - 1]});
  s.set_cpt(e, {1, 0, 0, 1});
  for (int i = 0; i < n - 1; ++i) {
    std::vector<VarId> ps{t.units[i], t.units[i + 1]};
    if (i == n - 2) ps.push_back(e);
    s.set_parents(xs[i], ps);
    std::vector<double> table;
    for (std::size_t row = 0; row < (std::size_t{1} << ps.size()); ++row) {
      int parity = std::popcount(row) & 1;
      table.push_back(parity == 0 ? 1.0 : 0.0);
      table.push_back(parity == 1 ? 1.0 : 0.0);
    }
    s.set_cpt(xs[i], table);
  }

  t.objective.units = t.units;
  for (int k = 0; k + 1 < n - 1; k += 2) {
    ObjectiveTerm term;
    term.x = {{e, 1}};
    term.y = {{xs[k], 1}};
    term.v = {{e, 0}};
    term.w = {{xs[k + 1], 1}};
    t.objective.terms.push_back(term);
  }
  if ((n - 1) % 2 == 1) {
    ObjectiveTerm term;
    term.x = {{e, 1}};
    term.y = {{xs[n - 2], 1}};
    t.objective.terms.push_back(term);
  }
  for (auto& term : t.objective.terms) term.weight = 1.0 / static_cast<double>(t.objective.terms.size());

  t.order.sequence = xs;
  t.order.sequence.push_back(e);
  t.order.sequence.insert(t.order.sequence.end(), t.units.begin(), t.units.end());
  t.order.constrained_suffix = std::set<VarId>(t.units.begin(), t.units.end());
  return t;
}

ObjectiveFunction gen_benefit_objective(const Scm& scm, VarId x, VarId y, const std::array<double, 4>& weights,
                                        const std::vector<VarId>& units) {
  if (scm.cardinality(x) != 2 || scm.cardinality(y) != 2) throw InputError("benefit objective needs binary X and Y");
  // responder, always-taker, always-denier, contrarian
  const std::array<std::pair<int, int>, 4> outcomes{{{1, 0}, {1, 1}, {0, 0}, {0, 1}}};
  ObjectiveFunction L;
  L.units = units;
  for (std::size_t k = 0; k < 4; ++k) {
    if (weights[k] == 0.0) continue;
    ObjectiveTerm term;
    term.weight = weights[k];
    term.x = {{x, 1}};
    term.y = {{y, outcomes[k].first}};
    term.v = {{x, 0}};
    term.w = {{y, outcomes[k].second}};
    L.terms.push_back(term);
  }
  return L;
}

std::vector<WidthRow> run_width_table(const BenchConfig& cfg) {
  std::vector<WidthRow> rows;
  for (int n : cfg.sizes) {
    for (std::size_t r = 0; r < cfg.unit_ratios.size(); ++r) {
      WidthRow row;
      row.n = n;
      row.ur = cfg.unit_ratios[r];
      for (int t = 0; t < cfg.trials; ++t) {
        std::uint64_t seed = mix({cfg.seed, static_cast<std::uint64_t>(n), r, static_cast<std::uint64_t>(t)});
        GenConfig gen{n, seed, cfg.max_parents, row.ur, 1};
        Scm scm = gen_random_scm(gen);
        std::mt19937_64 rng(splitmix(seed));
        auto units = pick_units(scm, row.ur, rng);

        auto kids = scm.children();
        std::vector<VarId> leaves, endogenous;
        for (VarId v : scm.internal_nodes()) {
          endogenous.push_back(v);
          if (kids[v].empty()) leaves.push_back(v);
        }
        if (endogenous.size() < 2) throw InputError("width table needs at least two endogenous nodes");
        VarId y = pick(leaves, rng);
        std::vector<VarId> ancestors, others;
        std::set<VarId> seen{y};
        std::vector<VarId> stack{y};
        while (!stack.empty()) {
          VarId v = stack.back();
          stack.pop_back();
          for (VarId p : scm.parents(v))
            if (seen.insert(p).second) {
              stack.push_back(p);
              if (!scm.is_root(p)) ancestors.push_back(p);
            }
        }
        for (VarId v : endogenous)
          if (v != y) others.push_back(v);
        std::sort(ancestors.begin(), ancestors.end());
        VarId x = pick(ancestors.empty() ? others : ancestors, rng);

        std::uniform_real_distribution<double> unit(0.05, 1.0);
        std::array<double, 4> weights{};
        double total = 0;
        for (double& w : weights) total += (w = unit(rng));
        for (double& w : weights) w /= total;

        auto L = gen_benefit_objective(scm, x, y, weights, units);
        auto om = build_objective_model(scm, L);
        std::set<VarId> base_units(units.begin(), units.end());
        std::set<VarId> om_units(om.units.begin(), om.units.end());

        auto base_order = minfill_order(moral_graph(scm), base_units);
        int w = width_of(scm, base_order);
        int w1 = width_of(om.model, minfill_order(moral_graph(om.model), om_units));
        int lifted = width_of(om.model, lift_order_constrained(base_order, om.components, om.mixture, base_units));
        auto [twin, twin_map] = twin_model(scm);
        int w2 = static_cast<int>(units.size()) + width_of(twin, minfill_order(moral_graph(twin)));

        if (lifted > 2 * w + 2) ++row.lifted_violations;
        row.n1 += om.model.size();
        row.n2 += twin.size();
        row.roots += static_cast<double>(scm.roots().size());
        row.w += w;
        row.w1 += w1;
        row.w2 += w2;
      }
      double k = std::max(1, cfg.trials);
      for (double* f : {&row.n1, &row.n2, &row.roots, &row.w, &row.w1, &row.w2}) *f /= k;
      rows.push_back(row);
    }
  }
  return rows;
}

std::string width_table_csv(const std::vector<WidthRow>& rows) {
  std::string out = "n,n2,R,ur,n1,w,w1,w2\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%.2f,%.2f,%.2f,%.2f,%.2f,%.2f,%.2f\n", r.n, r.n2, r.roots, r.ur, r.n1, r.w, r.w1,
                  r.w2);
    out += buf;
  }
  return out;
}

}  // namespace unitsel
