#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "unitsel/model.hpp"

namespace unitsel {

inline constexpr VarId kNoCopy = -1;

// Maps each base variable to its copy in every world of a multi-world model.
// Shared variables map to one id in all worlds; a world that was not built
// holds kNoCopy for every variable.
struct WorldMap {
  int world_count = 0;
  std::set<VarId> shared;                   // base ids
  std::vector<std::vector<VarId>> copies;   // [base id][world] -> model id

  VarId copy(VarId base, int world) const { return copies.at(base).at(world); }
  bool has_world(int world) const;
  // Translates an instantiation over base ids into world `world`.
  Instantiation lift(const Instantiation& base_inst, int world) const;
};

enum class CopyNaming {
  Brackets,     // X, [X], [[X]]
  Superscript,  // X^1, X^2, ...
};

// Copies of `scm` in n worlds sharing the `shared` roots.
std::pair<Scm, WorldMap> n_world_model(const Scm& scm, const std::set<VarId>& shared, int n,
                                       CopyNaming naming = CopyNaming::Superscript);
// Three worlds sharing every root.
std::pair<Scm, WorldMap> triplet_model(const Scm& scm);
// Two worlds sharing every root.
std::pair<Scm, WorldMap> twin_model(const Scm& scm);

// Each intervened variable loses its parents and gets a point mass on the
// intervened state.
Scm mutilate(const Scm& model, const Instantiation& interventions);

struct CounterfactualQuery {
  Scm model;  // mutilated triplet
  WorldMap worlds;
  Instantiation e1;
  Instantiation e2;
};

// Pr(y_x, w_v | e) as Pr(e1 | e2) on a mutilated triplet model.
CounterfactualQuery counterfactual_query(const Scm& scm, const Instantiation& x, const Instantiation& y,
                                         const Instantiation& v, const Instantiation& w,
                                         const Instantiation& e);

// Ground truth by enumerating exogenous states consistent with the unit u.
// Returns nullopt when Pr(e, u) = 0.
std::optional<double> counterfactual_oracle(const Scm& scm, const Instantiation& x, const Instantiation& y,
                                            const Instantiation& v, const Instantiation& w,
                                            const Instantiation& e, const Instantiation& u);

// Calls fn(inst) for every joint state of `vars`, first variable slowest.
template <typename Fn>
void for_each_instantiation(const Scm& scm, const std::vector<VarId>& vars, Fn&& fn) {
  Instantiation inst;
  for (VarId v : vars) inst[v] = 0;
  while (true) {
    fn(static_cast<const Instantiation&>(inst));
    if (vars.empty()) return;
    std::size_t i = vars.size();
    while (true) {
      --i;
      if (++inst[vars[i]] < scm.cardinality(vars[i])) break;
      inst[vars[i]] = 0;
      if (i == 0) return;
    }
  }
}

}  // namespace unitsel
