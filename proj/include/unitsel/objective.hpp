#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "unitsel/model.hpp"
#include "unitsel/worlds.hpp"

namespace unitsel {

// weight * Pr(y_x, w_v | e, u)
struct ObjectiveTerm {
  double weight = 0.0;
  Instantiation x, y, v, w, e;
};

// L(u) = sum_i weight_i * term_i(u) over the unit variables `units`.
struct ObjectiveFunction {
  std::vector<VarId> units;
  std::vector<ObjectiveTerm> terms;
};

struct ObjectiveReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

ObjectiveReport validate_objective(const Scm& scm, const ObjectiveFunction& L);

struct ObjectiveModel {
  Scm model;
  VarId mixture = kNoCopy;
  std::vector<VarId> units;                // model ids, aligned with L.units
  std::vector<WorldMap> components;        // three world slots each
  std::vector<std::array<bool, 3>> built;  // which worlds each component kept
  Instantiation e1;                        // outcomes
  Instantiation e2;                        // treatments and evidence
  int n = 0;

  // Base-model unit instantiation -> objective-model ids.
  Instantiation lift_units(const Instantiation& base_u, const std::vector<VarId>& base_units) const;
};

struct ObjectiveBuildOptions {
  // Counterfactual semantics needs functional CPTs. Objectives whose terms
  // each use one world without interventions are accepted regardless.
  bool require_functional = true;
  // Drop world 1 when e_i is empty, world 2 when x_i and y_i are, world 3
  // when v_i and w_i are.
  bool drop_unused_worlds = true;
};

ObjectiveModel build_objective_model(const Scm& scm, const ObjectiveFunction& L,
                                     const ObjectiveBuildOptions& options = {});

// Reference evaluator: sum of weighted counterfactual_oracle values. nullopt
// when some term has zero conditioning mass at u.
std::optional<double> evaluate_L_brute(const Scm& scm, const ObjectiveFunction& L, const Instantiation& u);

struct SizeStats {
  int components = 0;
  int nodes = 0;
  int expected_nodes = 0;  // closed-form count from the construction
  std::size_t parameters = 0;
  std::size_t base_parameters = 0;
};

SizeStats model_size_stats(const Scm& base, const ObjectiveFunction& L, const ObjectiveModel& om);
std::size_t parameter_count(const Scm& scm);

ObjectiveFunction load_objective(const Scm& scm, std::string_view json_text);
ObjectiveFunction load_objective_file(const Scm& scm, const std::string& path);
std::string save_objective(const Scm& scm, const ObjectiveFunction& L);

}  // namespace unitsel
