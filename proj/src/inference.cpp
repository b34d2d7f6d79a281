#include "unitsel/inference.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "unitsel/errors.hpp"

namespace unitsel {

namespace {

// Relative margin a candidate must clear to displace the incumbent in the
// enumeration oracles, so round-off never reorders exact ties.
constexpr double kTieMargin = 1e-10;

bool beats(double candidate, double incumbent) { return candidate > incumbent * (1.0 + kTieMargin); }

struct SplitOrder {
  std::vector<VarId> summed;
  std::vector<VarId> maximized;
};

SplitOrder resolve_order(const Scm& model, const std::vector<VarId>& targets,
                         const std::optional<EliminationOrder>& order) {
  std::set<VarId> units(targets.begin(), targets.end());
  if (units.size() != targets.size()) throw StructuralError("target variables repeat");
  for (VarId u : units)
    if (u < 0 || u >= model.size()) throw StructuralError("unknown target variable");
  EliminationOrder chosen = order ? *order : minfill_order(moral_graph(model), units);
  if (static_cast<int>(chosen.sequence.size()) != model.size() ||
      !EliminationOrder{chosen.sequence, std::nullopt}.is_valid(model.size()))
    throw StructuralError("elimination order must list every model variable exactly once");
  if (!chosen.is_constrained_by(units)) throw StructuralError("elimination order is not constrained by the targets");
  SplitOrder split;
  std::size_t tail = chosen.sequence.size() - units.size();
  split.summed.assign(chosen.sequence.begin(), chosen.sequence.begin() + static_cast<std::ptrdiff_t>(tail));
  split.maximized.assign(chosen.sequence.begin() + static_cast<std::ptrdiff_t>(tail), chosen.sequence.end());
  return split;
}

double pool_product_scalar(const FactorPool& pool) {
  double p = 1.0;
  for (const auto& pf : pool) {
    if (!pf.factor.is_scalar()) throw ConsistencyError("non-scalar factor left after full elimination");
    p *= pf.factor[0];
  }
  return p;
}

Instantiation decode(const std::vector<MaxStep>& steps) {
  Instantiation u;
  for (auto it = steps.rbegin(); it != steps.rend(); ++it) {
    for (auto [var, state] : it->maximizers.lookup(u)) u[var] = state;
  }
  return u;
}

void check_disjoint(const std::vector<VarId>& targets, const Instantiation& a, const Instantiation& b) {
  for (VarId t : targets)
    if (a.count(t) || b.count(t)) throw StructuralError("target and evidence variables overlap");
  for (const auto& kv : a)
    if (b.count(kv.first)) throw StructuralError("evidence sets e1 and e2 overlap");
}

Instantiation merged(const Instantiation& a, const Instantiation& b) {
  Instantiation out = a;
  out.insert(b.begin(), b.end());
  return out;
}

std::vector<VarId> sorted_copy(std::vector<VarId> v) {
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

FactorPool make_pool(const Scm& model, const Instantiation& evidence) {
  FactorPool pool;
  for (VarId v = 0; v < model.size(); ++v) pool.push_back({model.cpt_factor(v), {Provenance::Kind::Cpt, v}});
  auto lambdas = evidence_to_lambdas(model, evidence);
  std::size_t i = 0;
  for (const auto& kv : evidence) pool.push_back({std::move(lambdas[i++]), {Provenance::Kind::Lambda, kv.first}});
  return pool;
}

EliminationResult eliminate(EliminationOp op, FactorPool pool, const std::vector<VarId>& order, int first_step) {
  EliminationResult r;
  int step = first_step;
  for (VarId var : order) {
    TraceRecord rec;
    rec.step = step;
    rec.var = var;
    rec.op = op;
    std::vector<Factor> touched;
    FactorPool kept;
    for (auto& pf : pool) {
      if (pf.factor.mentions(var)) {
        rec.inputs.push_back(pf.origin);
        rec.input_scopes.push_back(pf.factor.scope());
        touched.push_back(std::move(pf.factor));
      } else {
        kept.push_back(std::move(pf));
      }
    }
    if (touched.empty()) {
      rec.cluster = {var};
      r.trace.push_back(std::move(rec));
      pool = std::move(kept);
      ++step;
      continue;
    }
    Factor product = multiply_all(touched);
    rec.cluster = product.scope();
    const VarId vars[] = {var};
    Factor created;
    if (op == EliminationOp::Sum) {
      created = sum_out(product, vars);
    } else {
      auto m = max_out(product, vars);
      created = std::move(m.factor);
      r.max_steps.push_back({var, std::move(m.maximizers)});
    }
    kept.push_back({std::move(created), {Provenance::Kind::Step, step}});
    pool = std::move(kept);
    r.trace.push_back(std::move(rec));
    ++step;
  }
  r.pool = std::move(pool);
  return r;
}

QueryResult map_ve(const Scm& model, const std::vector<VarId>& targets, const Instantiation& e,
                   const std::optional<EliminationOrder>& order) {
  check_disjoint(targets, e, {});
  auto split = resolve_order(model, targets, order);
  auto summed = eliminate(EliminationOp::Sum, make_pool(model, e), split.summed);
  auto maxed = eliminate(EliminationOp::Max, std::move(summed.pool), split.maximized,
                         static_cast<int>(split.summed.size()) + 1);
  QueryResult q;
  q.value = pool_product_scalar(maxed.pool);
  q.instantiation = decode(maxed.max_steps);
  q.trace = std::move(summed.trace);
  q.trace.insert(q.trace.end(), maxed.trace.begin(), maxed.trace.end());
  return q;
}

QueryResult rmap_ve(const Scm& model, const std::vector<VarId>& targets, const Instantiation& e1,
                    const Instantiation& e2, const std::optional<EliminationOrder>& order) {
  check_disjoint(targets, e1, e2);
  auto split = resolve_order(model, targets, order);
  auto joint = eliminate(EliminationOp::Sum, make_pool(model, merged(e1, e2)), split.summed);
  auto conditioning = eliminate(EliminationOp::Sum, make_pool(model, e2), split.summed);

  std::map<Provenance, const Factor*> denominators;
  for (const auto& pf : conditioning.pool) denominators.emplace(pf.origin, &pf.factor);
  if (denominators.size() != joint.pool.size())
    throw ConsistencyError("RMAP_VE passes left different numbers of factors");

  FactorPool ratios;
  FactorPool support;  // 0/1 indicators of the conditioning factors
  for (const auto& pf : joint.pool) {
    auto it = denominators.find(pf.origin);
    if (it == denominators.end()) throw ConsistencyError("RMAP_VE factor without a corresponding factor");
    if (it->second->scope() != pf.factor.scope())
      throw ConsistencyError("RMAP_VE corresponding factors have different scopes");
    ratios.push_back({divide(pf.factor, *it->second), pf.origin});
    std::vector<double> ind(it->second->values());
    for (double& x : ind) x = x > 0.0 ? 1.0 : 0.0;
    support.push_back({Factor(it->second->scope(), it->second->cards(), std::move(ind)), pf.origin});
  }

  // Units with Pr(u, e2) > 0, counted by summing the support indicators.
  const int first_max_step = static_cast<int>(split.summed.size()) + 1;
  auto counted = eliminate(EliminationOp::Sum, support, split.maximized, first_max_step);
  double included = pool_product_scalar(counted.pool);
  double total = 1.0;
  for (VarId t : targets) total *= model.cardinality(t);
  if (included < 0.5) throw InconsistentEvidenceError("evidence inconsistent with every unit");

  auto maxed = eliminate(EliminationOp::Max, std::move(ratios), split.maximized, first_max_step);
  QueryResult q;
  q.value = pool_product_scalar(maxed.pool);
  q.instantiation = decode(maxed.max_steps);
  if (q.value == 0.0) {
    // every ratio is 0 and excluded units tie at 0/0; return an included one
    auto any_included = eliminate(EliminationOp::Max, std::move(support), split.maximized, first_max_step);
    q.instantiation = decode(any_included.max_steps);
  }
  q.excluded = static_cast<std::size_t>(std::llround(total - included));
  q.trace = std::move(joint.trace);
  q.trace.insert(q.trace.end(), maxed.trace.begin(), maxed.trace.end());
  return q;
}

double probability_of_evidence(const Scm& model, const Instantiation& e) {
  // Nodes outside the ancestral set of e sum to one; observed variables are
  // sliced out before ordering so the evidence cuts the graph.
  std::vector<bool> needed(static_cast<std::size_t>(model.size()), false);
  std::vector<VarId> stack;
  for (const auto& kv : e) {
    if (kv.first < 0 || kv.first >= model.size()) throw StructuralError("unknown evidence variable");
    stack.push_back(kv.first);
  }
  while (!stack.empty()) {
    VarId v = stack.back();
    stack.pop_back();
    if (needed[v]) continue;
    needed[v] = true;
    for (VarId p : model.parents(v)) stack.push_back(p);
  }
  std::vector<VarId> observed;
  for (const auto& kv : e) observed.push_back(kv.first);

  FactorPool pool;
  MoralGraph g(model.size());
  std::set<VarId> present;
  for (VarId v = 0; v < model.size(); ++v) {
    if (!needed[v]) continue;
    Factor f = model.cpt_factor(v);
    std::vector<VarId> drop;
    for (VarId s : f.scope())
      if (e.count(s)) drop.push_back(s);
    if (!drop.empty()) f = sum_out(reduce(f, e), drop);
    const auto& scope = f.scope();
    for (std::size_t i = 0; i < scope.size(); ++i) {
      present.insert(scope[i]);
      for (std::size_t j = i + 1; j < scope.size(); ++j) g.add_edge(scope[i], scope[j]);
    }
    pool.push_back({std::move(f), {Provenance::Kind::Cpt, v}});
  }
  std::vector<VarId> order;
  for (VarId v : minfill_order(g).sequence)
    if (present.count(v)) order.push_back(v);
  auto r = eliminate(EliminationOp::Sum, std::move(pool), order);
  return pool_product_scalar(r.pool);
}

std::optional<double> conditional_probability(const Scm& model, const Instantiation& e1, const Instantiation& e2) {
  double den = probability_of_evidence(model, e2);
  if (den == 0.0) return std::nullopt;
  for (const auto& kv : e1) {
    auto it = e2.find(kv.first);
    if (it != e2.end() && it->second != kv.second) return 0.0;
  }
  return probability_of_evidence(model, merged(e1, e2)) / den;
}

Factor posterior(const Scm& model, const std::vector<VarId>& targets, const Instantiation& evidence,
                 const std::optional<EliminationOrder>& order) {
  check_disjoint(targets, evidence, {});
  auto split = resolve_order(model, targets, order);
  auto r = eliminate(EliminationOp::Sum, make_pool(model, evidence), split.summed);
  std::vector<Factor> remaining;
  for (auto& pf : r.pool) remaining.push_back(std::move(pf.factor));
  Factor joint = multiply_all(remaining);
  double mass = joint.total();
  if (mass == 0.0) throw InconsistentEvidenceError("posterior: evidence has zero probability");
  std::vector<double> values(joint.values());
  for (double& x : values) x /= mass;
  return Factor(joint.scope(), joint.cards(), std::move(values));
}

QueryResult brute_map(const Scm& model, const std::vector<VarId>& targets, const Instantiation& e) {
  check_disjoint(targets, e, {});
  QueryResult best;
  bool any = false;
  for_each_instantiation(model, sorted_copy(targets), [&](const Instantiation& u) {
    double p = probability_of_evidence(model, merged(u, e));
    if (!any || beats(p, best.value)) {
      best.value = p;
      best.instantiation = u;
      any = true;
    }
  });
  return best;
}

QueryResult brute_rmap(const Scm& model, const std::vector<VarId>& targets, const Instantiation& e1,
                       const Instantiation& e2) {
  check_disjoint(targets, e1, e2);
  QueryResult best;
  bool any = false;
  for_each_instantiation(model, sorted_copy(targets), [&](const Instantiation& u) {
    Instantiation cond = merged(u, e2);
    double den = probability_of_evidence(model, cond);
    if (den == 0.0) {
      ++best.excluded;
      return;
    }
    double p = probability_of_evidence(model, merged(cond, e1)) / den;
    if (!any || beats(p, best.value)) {
      best.value = p;
      best.instantiation = u;
      any = true;
    }
  });
  if (!any) throw InconsistentEvidenceError("evidence inconsistent with every unit");
  return best;
}

QueryResult unit_select(const Scm& scm, const ObjectiveFunction& L, SolveMethod method,
                        const std::optional<EliminationOrder>& base_order, const ObjectiveBuildOptions& build) {
  if (method == SolveMethod::Ve) {
    auto om = build_objective_model(scm, L, build);
    std::optional<EliminationOrder> order;
    if (base_order) {
      std::set<VarId> units(L.units.begin(), L.units.end());
      order = lift_order_constrained(*base_order, om.components, om.mixture, units);
    }
    auto r = rmap_ve(om.model, om.units, om.e1, om.e2, order);
    Instantiation base_u;
    for (std::size_t i = 0; i < L.units.size(); ++i) base_u[L.units[i]] = r.instantiation.at(om.units[i]);
    r.instantiation = std::move(base_u);
    return r;
  }

  auto report = validate_objective(scm, L);
  if (!report.ok()) throw InputError("invalid objective: " + report.violations.front());
  QueryResult best;
  bool any = false;
  for_each_instantiation(scm, sorted_copy(L.units), [&](const Instantiation& u) {
    auto value = evaluate_L_brute(scm, L, u);
    if (!value) {
      ++best.excluded;
      return;
    }
    if (!any || beats(*value, best.value)) {
      best.value = *value;
      best.instantiation = u;
      any = true;
    }
  });
  if (!any) throw InconsistentEvidenceError("evidence inconsistent with every unit");
  return best;
}

std::string format_trace(const Scm& model, const std::vector<TraceRecord>& trace) {
  auto scope_str = [&](const std::vector<VarId>& scope) { return format_var_set(model, scope); };
  std::vector<std::array<std::string, 6>> rows;
  rows.push_back({"i", "var", "op", "factors", "new factor", "cluster"});
  for (const auto& rec : trace) {
    std::string factors;
    for (std::size_t k = 0; k < rec.inputs.size(); ++k) {
      if (!factors.empty()) factors += " ";
      const auto& p = rec.inputs[k];
      switch (p.kind) {
        case Provenance::Kind::Cpt:
          factors += "f_" + model.variable(p.id).name + "(" + scope_str(rec.input_scopes[k]) + ")";
          break;
        case Provenance::Kind::Lambda:
          factors += "lambda_" + model.variable(p.id).name;
          break;
        case Provenance::Kind::Step:
          factors += "f_" + std::to_string(p.id) + "(" + scope_str(rec.input_scopes[k]) + ")";
          break;
      }
    }
    std::vector<VarId> reduced;
    for (VarId v : rec.cluster)
      if (v != rec.var) reduced.push_back(v);
    rows.push_back({std::to_string(rec.step), model.variable(rec.var).name,
                    rec.op == EliminationOp::Sum ? "sum" : "max", factors,
                    "f_" + std::to_string(rec.step) + "(" + scope_str(reduced) + ")", scope_str(rec.cluster)});
  }
  std::array<std::size_t, 6> widths{};
  for (const auto& row : rows)
    for (std::size_t c = 0; c < 6; ++c) widths[c] = std::max(widths[c], row[c].size());
  std::ostringstream out;
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < 6; ++c) {
      out << row[c];
      if (c + 1 < 6) out << std::string(widths[c] - row[c].size(), ' ') << " | ";
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace unitsel
