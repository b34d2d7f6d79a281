#include "unitsel/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "unitsel/errors.hpp"

namespace unitsel {

namespace {

constexpr double kRowTolerance = 1e-9;
constexpr double kFunctionalTolerance = 1e-12;

bool is_zero_one(double v) {
  return std::abs(v) <= kFunctionalTolerance || std::abs(v - 1.0) <= kFunctionalTolerance;
}

}  // namespace

VarId Scm::add_variable(std::string name, std::vector<std::string> states) {
  if (states.empty()) throw StructuralError("variable '" + name + "' needs at least one state");
  for (std::size_t i = 0; i < states.size(); ++i)
    for (std::size_t j = i + 1; j < states.size(); ++j)
      if (states[i] == states[j])
        throw StructuralError("variable '" + name + "' repeats state '" + states[i] + "'");
  if (by_name_.count(name)) throw StructuralError("duplicate variable name '" + name + "'");
  VarId id = static_cast<VarId>(vars_.size());
  by_name_.emplace(name, id);
  vars_.push_back(Variable{id, std::move(name), std::move(states)});
  parents_.emplace_back();
  // Roots default to a uniform prior until a CPT is set.
  cpts_.emplace_back(vars_.back().states.size(), 1.0 / static_cast<double>(vars_.back().states.size()));
  return id;
}

void Scm::set_parents(VarId node, std::vector<VarId> parents) {
  for (VarId p : parents)
    if (p < 0 || p >= size() || p == node)
      throw StructuralError("invalid parent reference for '" + vars_.at(node).name + "'");
  parents_.at(node) = std::move(parents);
}

void Scm::set_cpt(VarId node, std::vector<double> table) { cpts_.at(node) = std::move(table); }

std::optional<VarId> Scm::find(std::string_view name) const {
  auto it = by_name_.find(std::string(name));
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

VarId Scm::id_of(std::string_view name) const {
  auto id = find(name);
  if (!id) throw StructuralError("unknown variable '" + std::string(name) + "'");
  return *id;
}

int Scm::state_index(VarId id, std::string_view state) const {
  const auto& states = variable(id).states;
  auto it = std::find(states.begin(), states.end(), state);
  if (it == states.end())
    throw StructuralError("variable '" + variable(id).name + "' has no state '" + std::string(state) + "'");
  return static_cast<int>(it - states.begin());
}

std::vector<VarId> Scm::roots() const {
  std::vector<VarId> out;
  for (VarId v = 0; v < size(); ++v)
    if (is_root(v)) out.push_back(v);
  return out;
}

std::vector<VarId> Scm::internal_nodes() const {
  std::vector<VarId> out;
  for (VarId v = 0; v < size(); ++v)
    if (!is_root(v)) out.push_back(v);
  return out;
}

std::vector<std::vector<VarId>> Scm::children() const {
  std::vector<std::vector<VarId>> out(size());
  for (VarId v = 0; v < size(); ++v)
    for (VarId p : parents_[v]) out[p].push_back(v);
  return out;
}

std::vector<VarId> Scm::topological_order() const {
  auto kids = children();
  std::vector<int> indegree(size());
  for (VarId v = 0; v < size(); ++v) indegree[v] = static_cast<int>(parents_[v].size());
  std::vector<VarId> ready, order;
  for (VarId v = size(); v-- > 0;)
    if (indegree[v] == 0) ready.push_back(v);
  while (!ready.empty()) {
    VarId v = ready.back();
    ready.pop_back();
    order.push_back(v);
    for (auto it = kids[v].rbegin(); it != kids[v].rend(); ++it)
      if (--indegree[*it] == 0) ready.push_back(*it);
  }
  if (static_cast<int>(order.size()) != size()) throw StructuralError("parent relation has a cycle");
  return order;
}

std::size_t Scm::cpt_length(VarId id) const {
  std::size_t n = static_cast<std::size_t>(cardinality(id));
  for (VarId p : parents_.at(id)) n *= static_cast<std::size_t>(cardinality(p));
  return n;
}

Factor Scm::cpt_factor(VarId id) const {
  const auto& ps = parents_.at(id);
  const auto& table = cpts_.at(id);
  if (table.size() != cpt_length(id))
    throw StructuralError("CPT of '" + variable(id).name + "' has the wrong length");
  std::vector<VarId> declared(ps);
  declared.push_back(id);
  std::vector<VarId> scope(declared);
  std::sort(scope.begin(), scope.end());
  if (std::adjacent_find(scope.begin(), scope.end()) != scope.end())
    throw StructuralError("repeated parent for '" + variable(id).name + "'");
  std::vector<int> cards;
  for (VarId v : scope) cards.push_back(cardinality(v));

  // Re-layout from declared order to canonical ascending-id order.
  std::vector<double> values(table.size());
  std::vector<int> digits(declared.size(), 0);
  std::vector<std::size_t> canon_stride(declared.size());
  {
    std::vector<std::size_t> strides(scope.size());
    std::size_t s = 1;
    for (std::size_t i = scope.size(); i-- > 0;) {
      strides[i] = s;
      s *= static_cast<std::size_t>(cards[i]);
    }
    for (std::size_t i = 0; i < declared.size(); ++i)
      canon_stride[i] = strides[std::lower_bound(scope.begin(), scope.end(), declared[i]) - scope.begin()];
  }
  for (std::size_t k = 0; k < table.size(); ++k) {
    std::size_t target = 0;
    for (std::size_t i = 0; i < declared.size(); ++i) target += canon_stride[i] * static_cast<std::size_t>(digits[i]);
    values[target] = table[k];
    for (std::size_t i = declared.size(); i-- > 0;) {
      if (++digits[i] < cardinality(declared[i])) break;
      digits[i] = 0;
    }
  }
  return Factor(std::move(scope), std::move(cards), std::move(values));
}

std::vector<Factor> Scm::factors() const {
  std::vector<Factor> out;
  out.reserve(vars_.size());
  for (VarId v = 0; v < size(); ++v) out.push_back(cpt_factor(v));
  return out;
}

Instantiation Scm::solve(const Instantiation& exogenous, const Instantiation& interventions) const {
  Instantiation world;
  for (VarId v : topological_order()) {
    if (auto it = interventions.find(v); it != interventions.end()) {
      world[v] = it->second;
      continue;
    }
    if (is_root(v)) {
      auto it = exogenous.find(v);
      if (it == exogenous.end()) throw StructuralError("solve: root '" + variable(v).name + "' unassigned");
      world[v] = it->second;
      continue;
    }
    std::size_t row = 0;
    for (VarId p : parents_[v]) row = row * static_cast<std::size_t>(cardinality(p)) + static_cast<std::size_t>(world.at(p));
    const int card = cardinality(v);
    int chosen = -1;
    for (int s = 0; s < card; ++s) {
      double p = cpts_[v][row * static_cast<std::size_t>(card) + static_cast<std::size_t>(s)];
      if (std::abs(p - 1.0) <= kFunctionalTolerance) chosen = s;
      else if (std::abs(p) > kFunctionalTolerance) chosen = -2;
      if (chosen == -2) break;
    }
    if (chosen < 0) throw StructuralError("solve: CPT of '" + variable(v).name + "' is not functional");
    world[v] = chosen;
  }
  return world;
}

ValidationReport validate(const Scm& scm) {
  ValidationReport r;
  for (VarId v = 0; v < scm.size(); ++v) {
    const auto& name = scm.variable(v).name;
    for (VarId p : scm.parents(v)) {
      if (p < 0 || p >= scm.size()) {
        r.well_formed = false;
        r.violations.push_back("node '" + name + "' references an unknown parent");
      }
    }
  }
  if (!r.well_formed) return r;
  try {
    scm.topological_order();
  } catch (const StructuralError&) {
    r.acyclic = false;
    r.violations.push_back("parent relation is cyclic");
  }
  for (VarId v = 0; v < scm.size(); ++v) {
    const auto& name = scm.variable(v).name;
    const auto& table = scm.cpt(v);
    if (table.size() != scm.cpt_length(v)) {
      r.well_formed = false;
      std::ostringstream msg;
      msg << "CPT of '" << name << "' has length " << table.size() << ", expected " << scm.cpt_length(v);
      r.violations.push_back(msg.str());
      continue;
    }
    const auto card = static_cast<std::size_t>(scm.cardinality(v));
    bool node_functional = true;
    for (std::size_t row = 0; row * card < table.size(); ++row) {
      double sum = 0.0;
      for (std::size_t s = 0; s < card; ++s) {
        double p = table[row * card + s];
        if (!(p >= 0.0) || !std::isfinite(p)) {
          r.normalized = false;
          r.violations.push_back("CPT of '" + name + "' has a negative or non-finite entry");
        }
        sum += p;
        if (!is_zero_one(p)) node_functional = false;
      }
      if (std::abs(sum - 1.0) > kRowTolerance) {
        r.normalized = false;
        std::ostringstream msg;
        msg << "CPT of '" << name << "' row " << row << " sums to " << sum;
        r.violations.push_back(msg.str());
      }
    }
    if (!scm.is_root(v) && !node_functional) {
      r.functional = false;
      r.nonfunctional_nodes.push_back(v);
      r.violations.push_back("CPT of internal node '" + name + "' is not functional");
    }
  }
  return r;
}

double joint_prob(const Scm& scm, const Instantiation& full) {
  double p = 1.0;
  for (VarId v = 0; v < scm.size(); ++v) {
    if (!full.count(v)) throw StructuralError("joint_prob: variable '" + scm.variable(v).name + "' unassigned");
    std::size_t row = 0;
    for (VarId q : scm.parents(v)) row = row * static_cast<std::size_t>(scm.cardinality(q)) + static_cast<std::size_t>(full.at(q));
    p *= scm.cpt(v)[row * static_cast<std::size_t>(scm.cardinality(v)) + static_cast<std::size_t>(full.at(v))];
  }
  return p;
}

std::vector<Factor> evidence_to_lambdas(const Scm& scm, const Instantiation& e) {
  std::vector<Factor> out;
  for (auto [var, state] : e) {
    int card = scm.cardinality(var);
    if (state < 0 || state >= card) throw StructuralError("evidence state out of range");
    std::vector<double> values(static_cast<std::size_t>(card), 0.0);
    values[static_cast<std::size_t>(state)] = 1.0;
    out.emplace_back(std::vector<VarId>{var}, std::vector<int>{card}, std::move(values));
  }
  return out;
}

Scm load_model(std::string_view json_text, const LoadOptions& options) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("malformed model document: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("variables") || !doc["variables"].is_array())
    throw InputError("model document needs a 'variables' array");
  Scm scm;
  try {
    for (const auto& v : doc["variables"]) {
      if (!v.is_object() || !v.contains("name") || !v.contains("states"))
        throw InputError("each variable needs 'name' and 'states'");
      scm.add_variable(v.at("name").get<std::string>(), v.at("states").get<std::vector<std::string>>());
    }
    const json parents = doc.value("parents", json::object());
    const json cpts = doc.value("cpts", json::object());
    for (auto it = parents.begin(); it != parents.end(); ++it) {
      auto node = scm.find(it.key());
      if (!node) throw InputError("'parents' names unknown variable '" + it.key() + "'");
      std::vector<VarId> ps;
      for (const auto& p : it.value()) {
        auto pid = scm.find(p.get<std::string>());
        if (!pid) throw InputError("unknown parent '" + p.get<std::string>() + "' of '" + it.key() + "'");
        ps.push_back(*pid);
      }
      scm.set_parents(*node, std::move(ps));
    }
    for (VarId v = 0; v < scm.size(); ++v) {
      const auto& name = scm.variable(v).name;
      if (!cpts.contains(name)) throw InputError("missing CPT for '" + name + "'");
      auto table = cpts.at(name).get<std::vector<double>>();
      if (table.size() != scm.cpt_length(v)) {
        std::ostringstream msg;
        msg << "CPT of '" << name << "' has length " << table.size() << ", expected " << scm.cpt_length(v);
        throw InputError(msg.str());
      }
      scm.set_cpt(v, std::move(table));
    }
    for (auto it = cpts.begin(); it != cpts.end(); ++it)
      if (!scm.find(it.key())) throw InputError("'cpts' names unknown variable '" + it.key() + "'");
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed model document: ") + e.what());
  } catch (const StructuralError& e) {
    throw InputError(e.what());
  }
  auto report = validate(scm);
  bool ok = options.allow_nonfunctional ? report.is_bayesian_network() : report.is_scm();
  if (!ok) {
    std::string msg = "illegal model:";
    for (const auto& v : report.violations) msg += "\n  " + v;
    throw InputError(msg);
  }
  return scm;
}

std::string save_model(const Scm& scm) {
  using nlohmann::json;
  json doc;
  json vars = json::array();
  json parents = json::object();
  json cpts = json::object();
  for (const auto& v : scm.variables()) {
    vars.push_back(json{{"name", v.name}, {"states", v.states}});
    json ps = json::array();
    for (VarId p : scm.parents(v.id)) ps.push_back(scm.variable(p).name);
    parents[v.name] = ps;
    cpts[v.name] = scm.cpt(v.id);
  }
  doc["variables"] = vars;
  doc["parents"] = parents;
  doc["cpts"] = cpts;
  return doc.dump(1) + "\n";
}

Scm load_model_file(const std::string& path, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open model file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return load_model(buf.str(), options);
}

Instantiation parse_assignments(const Scm& scm, std::string_view text) {
  Instantiation out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string_view::npos) comma = text.size();
    std::string_view item = text.substr(pos, comma - pos);
    pos = comma + 1;
    if (item.empty()) continue;
    std::size_t eq = item.find('=');
    if (eq == std::string_view::npos) throw InputError("expected name=state, got '" + std::string(item) + "'");
    auto id = scm.find(item.substr(0, eq));
    if (!id) throw InputError("unknown variable '" + std::string(item.substr(0, eq)) + "'");
    const auto& states = scm.variable(*id).states;
    auto state = item.substr(eq + 1);
    auto it = std::find(states.begin(), states.end(), state);
    if (it == states.end())
      throw InputError("variable '" + scm.variable(*id).name + "' has no state '" + std::string(state) + "'");
    int index = static_cast<int>(it - states.begin());
    auto [slot, inserted] = out.emplace(*id, index);
    if (!inserted && slot->second != index)
      throw InputError("conflicting assignments for '" + scm.variable(*id).name + "'");
  }
  return out;
}

std::string format_assignments(const Scm& scm, const Instantiation& inst) {
  std::string out;
  for (auto [var, state] : inst) {
    if (!out.empty()) out += ",";
    out += scm.variable(var).name + "=" + scm.variable(var).states.at(static_cast<std::size_t>(state));
  }
  return out;
}

std::string format_var_set(const Scm& scm, const std::vector<VarId>& ids) {
  bool short_names = std::all_of(ids.begin(), ids.end(), [&](VarId v) { return scm.variable(v).name.size() == 1; });
  std::string out;
  for (VarId v : ids) {
    if (!out.empty() && !short_names) out += ",";
    out += scm.variable(v).name;
  }
  return out;
}

}  // namespace unitsel
