#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "unitsel/factor.hpp"

namespace unitsel {

// A discrete DAG with one CPT per node. Roots are exogenous; a legal SCM has
// functional (0/1) CPTs at every internal node. CPT tables are stored with
// parents in declared order and the child last, child index fastest.
class Scm {
 public:
  VarId add_variable(std::string name, std::vector<std::string> states);
  void set_parents(VarId node, std::vector<VarId> parents);
  void set_cpt(VarId node, std::vector<double> table);

  int size() const { return static_cast<int>(vars_.size()); }
  const Variable& variable(VarId id) const { return vars_.at(id); }
  const std::vector<Variable>& variables() const { return vars_; }
  const std::vector<VarId>& parents(VarId id) const { return parents_.at(id); }
  const std::vector<double>& cpt(VarId id) const { return cpts_.at(id); }
  int cardinality(VarId id) const { return vars_.at(id).cardinality(); }

  std::optional<VarId> find(std::string_view name) const;
  VarId id_of(std::string_view name) const;  // throws StructuralError
  int state_index(VarId id, std::string_view state) const;

  bool is_root(VarId id) const { return parents_.at(id).empty(); }
  std::vector<VarId> roots() const;
  std::vector<VarId> internal_nodes() const;
  std::vector<std::vector<VarId>> children() const;
  // Throws StructuralError on a cycle.
  std::vector<VarId> topological_order() const;

  // Expected CPT length given current parents.
  std::size_t cpt_length(VarId id) const;
  // CPT as a canonical factor over sorted (parents + node).
  Factor cpt_factor(VarId id) const;
  std::vector<Factor> factors() const;

  // Propagates structural equations from a full exogenous assignment; for
  // intervened nodes the given state replaces the equation. Requires
  // functional internal CPTs.
  Instantiation solve(const Instantiation& exogenous, const Instantiation& interventions = {}) const;

 private:
  std::vector<Variable> vars_;
  std::vector<std::vector<VarId>> parents_;
  std::vector<std::vector<double>> cpts_;
  std::unordered_map<std::string, VarId> by_name_;
};

struct ValidationReport {
  bool well_formed = true;  // parent references and CPT lengths
  bool acyclic = true;
  bool normalized = true;
  bool functional = true;  // every internal CPT is 0/1
  std::vector<VarId> nonfunctional_nodes;
  std::vector<std::string> violations;

  bool is_bayesian_network() const { return well_formed && acyclic && normalized; }
  bool is_scm() const { return is_bayesian_network() && functional; }
};

ValidationReport validate(const Scm& scm);

double joint_prob(const Scm& scm, const Instantiation& full);

// One 0/1 indicator factor per evidence assignment.
std::vector<Factor> evidence_to_lambdas(const Scm& scm, const Instantiation& e);

struct LoadOptions {
  bool allow_nonfunctional = false;
};

Scm load_model(std::string_view json_text, const LoadOptions& options = {});
std::string save_model(const Scm& scm);
Scm load_model_file(const std::string& path, const LoadOptions& options = {});

// "name=state,name=state" <-> Instantiation
Instantiation parse_assignments(const Scm& scm, std::string_view text);
std::string format_assignments(const Scm& scm, const Instantiation& inst);

// Names joined by "", when every name is a single character, else by ",".
std::string format_var_set(const Scm& scm, const std::vector<VarId>& ids);

}  // namespace unitsel
