#include "unitsel/objective.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "unitsel/errors.hpp"

namespace unitsel {

namespace {

constexpr double kWeightTolerance = 1e-9;
constexpr int kWorldObserved = 0;
constexpr int kWorldTreated = 1;
constexpr int kWorldAlternative = 2;

// Needs one world and no interventions, so the term is an ordinary
// conditional and stays meaningful on non-functional models.
bool observational_single_world(const ObjectiveTerm& t) {
  if (!t.x.empty() || !t.v.empty()) return false;
  return (!t.e.empty()) + (!t.y.empty()) + (!t.w.empty()) <= 1;
}

bool all_observational(const ObjectiveFunction& L) {
  return std::all_of(L.terms.begin(), L.terms.end(), observational_single_world);
}

bool consistent_with(const Instantiation& full, const Instantiation& part) {
  for (auto [var, state] : part)
    if (full.at(var) != state) return false;
  return true;
}

// Pr(target | cond) by full-joint enumeration; nullopt on zero mass.
std::optional<double> enumerate_conditional(const Scm& scm, const Instantiation& target, const Instantiation& cond) {
  std::vector<VarId> all(static_cast<std::size_t>(scm.size()));
  for (VarId v = 0; v < scm.size(); ++v) all[v] = v;
  double num = 0.0, den = 0.0;
  for_each_instantiation(scm, all, [&](const Instantiation& z) {
    if (!consistent_with(z, cond)) return;
    double p = joint_prob(scm, z);
    den += p;
    if (consistent_with(z, target)) num += p;
  });
  if (den == 0.0) return std::nullopt;
  return num / den;
}

std::string world_name(const std::string& base, int component, int world) {
  std::string out = base + "^" + std::to_string(component + 1);
  for (int i = 0; i < world; ++i) out = "[" + out + "]";
  return out;
}

std::array<bool, 3> worlds_needed(const ObjectiveTerm& t, bool drop) {
  if (!drop) return {true, true, true};
  return {!t.e.empty(), !(t.x.empty() && t.y.empty()), !(t.v.empty() && t.w.empty())};
}

void merge_into(Instantiation& target, const Instantiation& extra) {
  for (auto [var, state] : extra) {
    auto [it, inserted] = target.emplace(var, state);
    if (!inserted && it->second != state) throw StructuralError("conflicting query assignments");
  }
}

}  // namespace

ObjectiveReport validate_objective(const Scm& scm, const ObjectiveFunction& L) {
  ObjectiveReport r;
  auto name = [&](VarId v) { return (v >= 0 && v < scm.size()) ? scm.variable(v).name : std::to_string(v); };

  std::vector<VarId> units = L.units;
  std::sort(units.begin(), units.end());
  if (std::adjacent_find(units.begin(), units.end()) != units.end()) r.violations.push_back("unit variables repeat");
  for (VarId u : L.units) {
    if (u < 0 || u >= scm.size()) r.violations.push_back("unknown unit variable " + name(u));
    else if (!scm.is_root(u)) r.violations.push_back("unit variable '" + name(u) + "' is not exogenous");
  }

  if (L.terms.empty()) r.violations.push_back("objective has no terms");
  double total = 0.0;
  for (std::size_t i = 0; i < L.terms.size(); ++i) {
    const auto& t = L.terms[i];
    std::string where = "term " + std::to_string(i + 1);
    if (!(t.weight >= 0.0)) r.violations.push_back(where + " has a negative weight");
    total += t.weight;
    for (const auto* inst : {&t.x, &t.y, &t.v, &t.w, &t.e}) {
      for (auto [var, state] : *inst) {
        if (var < 0 || var >= scm.size()) {
          r.violations.push_back(where + " references unknown variable " + name(var));
          continue;
        }
        if (scm.is_root(var)) r.violations.push_back(where + ": variable '" + name(var) + "' is not endogenous");
        if (state < 0 || state >= scm.cardinality(var))
          r.violations.push_back(where + ": state index out of range for '" + name(var) + "'");
      }
    }
    for (const auto* treat : {&t.x, &t.v})
      for (const auto* outcome : {&t.y, &t.w})
        for (const auto& kv : *treat)
          if (outcome->count(kv.first))
            r.violations.push_back(where + ": treatment and outcome overlap on '" + name(kv.first) + "'");
  }
  if (!L.terms.empty() && std::abs(total - 1.0) > kWeightTolerance) {
    std::ostringstream msg;
    msg << "weights sum to " << total << ", not 1";
    r.violations.push_back(msg.str());
  }
  return r;
}

Instantiation ObjectiveModel::lift_units(const Instantiation& base_u, const std::vector<VarId>& base_units) const {
  Instantiation out;
  for (auto [var, state] : base_u) {
    auto it = std::find(base_units.begin(), base_units.end(), var);
    if (it == base_units.end()) throw StructuralError("lift_units: not a unit variable");
    out[units[static_cast<std::size_t>(it - base_units.begin())]] = state;
  }
  return out;
}

ObjectiveModel build_objective_model(const Scm& scm, const ObjectiveFunction& L, const ObjectiveBuildOptions& options) {
  auto report = validate_objective(scm, L);
  if (!report.ok()) {
    std::string msg = "invalid objective:";
    for (const auto& v : report.violations) msg += "\n  " + v;
    throw InputError(msg);
  }
  auto model_report = validate(scm);
  if (!model_report.is_bayesian_network()) throw InputError("base model is not a valid Bayesian network");
  if (options.require_functional && !model_report.functional && !all_observational(L))
    throw InputError("objective models require a functional (SCM) base model");

  const std::set<VarId> unit_set(L.units.begin(), L.units.end());
  const int n = static_cast<int>(L.terms.size());
  ObjectiveModel om;
  om.n = n;
  Scm& g = om.model;

  std::vector<VarId> shared_id(static_cast<std::size_t>(scm.size()), kNoCopy);
  for (VarId u : L.units) {
    const auto& var = scm.variable(u);
    shared_id[u] = g.add_variable(var.name, var.states);
    g.set_cpt(shared_id[u], scm.cpt(u));
    om.units.push_back(shared_id[u]);
  }

  for (int c = 0; c < n; ++c) {
    const auto& term = L.terms[static_cast<std::size_t>(c)];
    auto built = worlds_needed(term, options.drop_unused_worlds);
    om.built.push_back(built);
    WorldMap wm;
    wm.world_count = 3;
    wm.shared = unit_set;
    wm.copies.assign(static_cast<std::size_t>(scm.size()), std::vector<VarId>(3, kNoCopy));
    for (const auto& var : scm.variables()) {
      if (unit_set.count(var.id)) {
        std::fill(wm.copies[var.id].begin(), wm.copies[var.id].end(), shared_id[var.id]);
      } else if (scm.is_root(var.id)) {
        // Non-unit exogenous: one copy per component, shared by its worlds.
        VarId id = g.add_variable(world_name(var.name, c, 0), var.states);
        std::fill(wm.copies[var.id].begin(), wm.copies[var.id].end(), id);
        g.set_cpt(id, scm.cpt(var.id));
      }
    }
    for (int k = 0; k < 3; ++k) {
      if (!built[static_cast<std::size_t>(k)]) continue;
      for (VarId v : scm.internal_nodes())
        wm.copies[v][k] = g.add_variable(world_name(scm.variable(v).name, c, k), scm.variable(v).states);
    }
    for (int k = 0; k < 3; ++k) {
      if (!built[static_cast<std::size_t>(k)]) continue;
      for (VarId v : scm.internal_nodes()) {
        std::vector<VarId> ps;
        for (VarId p : scm.parents(v)) ps.push_back(wm.copies[p][k]);
        g.set_parents(wm.copies[v][k], std::move(ps));
        g.set_cpt(wm.copies[v][k], scm.cpt(v));
      }
    }
    Instantiation interventions = wm.lift(term.x, kWorldTreated);
    merge_into(interventions, wm.lift(term.v, kWorldAlternative));
    g = mutilate(g, interventions);

    merge_into(om.e1, wm.lift(term.y, kWorldTreated));
    merge_into(om.e1, wm.lift(term.w, kWorldAlternative));
    merge_into(om.e2, interventions);
    merge_into(om.e2, wm.lift(term.e, kWorldObserved));
    om.components.push_back(std::move(wm));
  }

  // Mixture root with prior equal to the term weights.
  std::string h_name = "H";
  while (g.find(h_name)) h_name += "'";
  std::vector<std::string> h_states;
  std::vector<double> h_prior;
  for (int c = 0; c < n; ++c) {
    h_states.push_back("h" + std::to_string(c + 1));
    h_prior.push_back(L.terms[static_cast<std::size_t>(c)].weight);
  }
  om.mixture = g.add_variable(h_name, h_states);
  g.set_cpt(om.mixture, h_prior);

  // Outcome CPT rewrite: under h_c the original CPT, otherwise a point mass
  // on the outcome state named by term c.
  for (int c = 0; c < n; ++c) {
    const auto& term = L.terms[static_cast<std::size_t>(c)];
    Instantiation outcomes = om.components[static_cast<std::size_t>(c)].lift(term.y, kWorldTreated);
    merge_into(outcomes, om.components[static_cast<std::size_t>(c)].lift(term.w, kWorldAlternative));
    for (auto [z, z_state] : outcomes) {
      const auto& old = g.cpt(z);
      const auto card = static_cast<std::size_t>(g.cardinality(z));
      const std::size_t rows = old.size() / card;
      std::vector<double> table;
      table.reserve(old.size() * static_cast<std::size_t>(n));
      for (std::size_t row = 0; row < rows; ++row) {
        for (int h = 0; h < n; ++h) {
          for (std::size_t s = 0; s < card; ++s) {
            if (h == c) table.push_back(old[row * card + s]);
            else table.push_back(s == static_cast<std::size_t>(z_state) ? 1.0 : 0.0);
          }
        }
      }
      auto ps = g.parents(z);
      ps.push_back(om.mixture);
      g.set_parents(z, std::move(ps));
      g.set_cpt(z, std::move(table));
    }
  }
  return om;
}

std::optional<double> evaluate_L_brute(const Scm& scm, const ObjectiveFunction& L, const Instantiation& u) {
  const bool functional = validate(scm).functional;
  if (!functional && !all_observational(L))
    throw InputError("counterfactual terms require a functional (SCM) base model");
  double value = 0.0;
  for (const auto& t : L.terms) {
    std::optional<double> term;
    if (functional) {
      term = counterfactual_oracle(scm, t.x, t.y, t.v, t.w, t.e, u);
    } else {
      Instantiation target = t.y, cond = t.e;
      target.insert(t.w.begin(), t.w.end());
      cond.insert(u.begin(), u.end());
      term = enumerate_conditional(scm, target, cond);
    }
    if (!term) return std::nullopt;
    value += t.weight * *term;
  }
  return value;
}

std::size_t parameter_count(const Scm& scm) {
  std::size_t total = 0;
  for (VarId v = 0; v < scm.size(); ++v) total += scm.cpt(v).size();
  return total;
}

SizeStats model_size_stats(const Scm& base, const ObjectiveFunction& L, const ObjectiveModel& om) {
  SizeStats s;
  s.components = om.n;
  s.nodes = om.model.size();
  s.parameters = parameter_count(om.model);
  s.base_parameters = parameter_count(base);
  const int endo = static_cast<int>(base.internal_nodes().size());
  const int exo = static_cast<int>(base.roots().size());
  const int units = static_cast<int>(L.units.size());
  s.expected_nodes = units + 1;
  for (const auto& built : om.built) {
    int worlds = static_cast<int>(std::count(built.begin(), built.end(), true));
    s.expected_nodes += worlds * endo + (exo - units);
  }
  return s;
}

ObjectiveFunction load_objective(const Scm& scm, std::string_view json_text) {
  using nlohmann::json;
  ObjectiveFunction L;
  try {
    json doc = json::parse(json_text);
    for (const auto& u : doc.at("units")) {
      auto id = scm.find(u.get<std::string>());
      if (!id) throw InputError("unknown unit variable '" + u.get<std::string>() + "'");
      L.units.push_back(*id);
    }
    auto read_inst = [&](const json& term, const char* key) {
      Instantiation inst;
      if (!term.contains(key)) return inst;
      for (auto it = term.at(key).begin(); it != term.at(key).end(); ++it) {
        auto id = scm.find(it.key());
        if (!id) throw InputError("unknown variable '" + it.key() + "' in objective");
        inst[*id] = scm.state_index(*id, it.value().get<std::string>());
      }
      return inst;
    };
    for (const auto& term : doc.at("terms")) {
      ObjectiveTerm t;
      t.weight = term.at("weight").get<double>();
      t.x = read_inst(term, "x");
      t.y = read_inst(term, "y");
      t.v = read_inst(term, "v");
      t.w = read_inst(term, "w");
      t.e = read_inst(term, "e");
      L.terms.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed objective document: ") + e.what());
  } catch (const StructuralError& e) {
    throw InputError(e.what());
  }
  return L;
}

ObjectiveFunction load_objective_file(const Scm& scm, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open objective file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return load_objective(scm, buf.str());
}

std::string save_objective(const Scm& scm, const ObjectiveFunction& L) {
  using nlohmann::json;
  json doc;
  json units = json::array();
  for (VarId u : L.units) units.push_back(scm.variable(u).name);
  doc["units"] = units;
  json terms = json::array();
  auto write_inst = [&](json& term, const char* key, const Instantiation& inst) {
    if (inst.empty()) return;
    json obj = json::object();
    for (auto [var, state] : inst) obj[scm.variable(var).name] = scm.variable(var).states.at(static_cast<std::size_t>(state));
    term[key] = obj;
  };
  for (const auto& t : L.terms) {
    json term;
    term["weight"] = t.weight;
    write_inst(term, "x", t.x);
    write_inst(term, "y", t.y);
    write_inst(term, "v", t.v);
    write_inst(term, "w", t.w);
    write_inst(term, "e", t.e);
    terms.push_back(term);
  }
  doc["terms"] = terms;
  return doc.dump(1) + "\n";
}

}  // namespace unitsel
