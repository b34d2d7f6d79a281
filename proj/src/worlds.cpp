#include "unitsel/worlds.hpp"

#include <algorithm>

#include "unitsel/errors.hpp"

namespace unitsel {

namespace {

std::string copy_name(const std::string& base, int world, CopyNaming naming) {
  if (naming == CopyNaming::Superscript) return base + "^" + std::to_string(world + 1);
  std::string out = base;
  for (int i = 0; i < world; ++i) out = "[" + out + "]";
  return out;
}

bool consistent(const Instantiation& world, const Instantiation& required) {
  for (auto [var, state] : required)
    if (world.at(var) != state) return false;
  return true;
}

void require_endogenous(const Scm& scm, const Instantiation& inst, const char* role) {
  for (auto [var, state] : inst) {
    if (scm.is_root(var))
      throw StructuralError(std::string("counterfactual ") + role + " variable '" + scm.variable(var).name +
                            "' must be endogenous");
    if (state < 0 || state >= scm.cardinality(var)) throw StructuralError("state index out of range");
  }
}

}  // namespace

bool WorldMap::has_world(int world) const {
  for (const auto& per_var : copies)
    if (per_var.at(world) != kNoCopy) return true;
  return false;
}

Instantiation WorldMap::lift(const Instantiation& base_inst, int world) const {
  Instantiation out;
  for (auto [var, state] : base_inst) {
    VarId id = copy(var, world);
    if (id == kNoCopy) throw StructuralError("world " + std::to_string(world + 1) + " was not built");
    out[id] = state;
  }
  return out;
}

std::pair<Scm, WorldMap> n_world_model(const Scm& scm, const std::set<VarId>& shared, int n, CopyNaming naming) {
  if (n < 1) throw StructuralError("n_world_model needs n >= 1");
  if (naming == CopyNaming::Brackets && n > 3) throw StructuralError("bracket naming covers at most 3 worlds");
  for (VarId s : shared)
    if (s < 0 || s >= scm.size() || !scm.is_root(s))
      throw StructuralError("shared variables must be roots of the base model");

  Scm out;
  WorldMap wm;
  wm.world_count = n;
  wm.shared = shared;
  wm.copies.assign(static_cast<std::size_t>(scm.size()), std::vector<VarId>(static_cast<std::size_t>(n), kNoCopy));
  for (const auto& v : scm.variables()) {
    if (shared.count(v.id)) {
      VarId id = out.add_variable(v.name, v.states);
      std::fill(wm.copies[v.id].begin(), wm.copies[v.id].end(), id);
    } else {
      for (int k = 0; k < n; ++k)
        wm.copies[v.id][k] = out.add_variable(n == 1 ? v.name : copy_name(v.name, k, naming), v.states);
    }
  }
  for (const auto& v : scm.variables()) {
    for (int k = 0; k < n; ++k) {
      VarId id = wm.copies[v.id][k];
      if (shared.count(v.id) && k > 0) continue;
      std::vector<VarId> ps;
      for (VarId p : scm.parents(v.id)) ps.push_back(wm.copies[p][k]);
      out.set_parents(id, std::move(ps));
      out.set_cpt(id, scm.cpt(v.id));
    }
  }
  return {std::move(out), std::move(wm)};
}

std::pair<Scm, WorldMap> triplet_model(const Scm& scm) {
  auto roots = scm.roots();
  return n_world_model(scm, std::set<VarId>(roots.begin(), roots.end()), 3, CopyNaming::Brackets);
}

std::pair<Scm, WorldMap> twin_model(const Scm& scm) {
  auto roots = scm.roots();
  return n_world_model(scm, std::set<VarId>(roots.begin(), roots.end()), 2, CopyNaming::Brackets);
}

Scm mutilate(const Scm& model, const Instantiation& interventions) {
  Scm out = model;
  for (auto [var, state] : interventions) {
    if (var < 0 || var >= model.size()) throw StructuralError("mutilate: unknown variable");
    int card = model.cardinality(var);
    if (state < 0 || state >= card) throw StructuralError("mutilate: state index out of range");
    std::vector<double> point(static_cast<std::size_t>(card), 0.0);
    point[static_cast<std::size_t>(state)] = 1.0;
    out.set_parents(var, {});
    out.set_cpt(var, std::move(point));
  }
  return out;
}

CounterfactualQuery counterfactual_query(const Scm& scm, const Instantiation& x, const Instantiation& y,
                                         const Instantiation& v, const Instantiation& w,
                                         const Instantiation& e) {
  for (const auto* inst : {&x, &y, &v, &w, &e}) require_endogenous(scm, *inst, "query");
  for (const auto* treat : {&x, &v})
    for (const auto* outcome : {&y, &w})
      for (const auto& kv : *treat)
        if (outcome->count(kv.first))
          throw StructuralError("treatment and outcome variables overlap on '" + scm.variable(kv.first).name + "'");

  auto [triplet, wm] = triplet_model(scm);
  Instantiation interventions = wm.lift(x, 1);
  for (auto kv : wm.lift(v, 2)) interventions.insert(kv);
  CounterfactualQuery q{mutilate(triplet, interventions), wm, {}, {}};
  q.e1 = wm.lift(y, 1);
  for (auto kv : wm.lift(w, 2)) q.e1.insert(kv);
  q.e2 = interventions;
  for (auto kv : wm.lift(e, 0)) q.e2.insert(kv);
  return q;
}

std::optional<double> counterfactual_oracle(const Scm& scm, const Instantiation& x, const Instantiation& y,
                                            const Instantiation& v, const Instantiation& w,
                                            const Instantiation& e, const Instantiation& u) {
  std::vector<VarId> rest;
  for (VarId r : scm.roots())
    if (!u.count(r)) rest.push_back(r);
  for (auto [var, state] : u)
    if (!scm.is_root(var)) throw StructuralError("counterfactual_oracle: unit variables must be roots");

  double evidence_mass = 0.0;
  double joint_mass = 0.0;
  for_each_instantiation(scm, rest, [&](const Instantiation& n) {
    double theta = 1.0;
    for (auto [var, state] : n) theta *= scm.cpt(var)[static_cast<std::size_t>(state)];
    if (theta == 0.0) return;
    Instantiation exo = n;
    exo.insert(u.begin(), u.end());
    if (!consistent(scm.solve(exo), e)) return;
    evidence_mass += theta;
    if (consistent(scm.solve(exo, x), y) && consistent(scm.solve(exo, v), w)) joint_mass += theta;
  });
  // The unit's own prior must also be positive for the conditional to exist.
  for (auto [var, state] : u)
    if (scm.cpt(var)[static_cast<std::size_t>(state)] == 0.0) return std::nullopt;
  if (evidence_mass == 0.0) return std::nullopt;
  return joint_mass / evidence_mass;
}

}  // namespace unitsel
