#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "unitsel/inference.hpp"
#include "unitsel/model.hpp"

namespace unitsel {

using Assignment = std::map<std::string, bool>;

// Binary AST stored as an arena; children precede parents.
class Formula {
 public:
  enum class Op { Var, Not, And, Or };
  struct Node {
    Op op = Op::Var;
    std::string name;  // Var only
    int left = -1;
    int right = -1;
  };

  // Declares a variable without using it (DIMACS headers may do this).
  void declare(const std::string& name);
  int var(const std::string& name);
  int negate(int child);
  int conjoin(int left, int right);
  int disjoin(int left, int right);

  void set_root(int node) { root_ = node; }
  int root() const { return root_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  const Node& node(int i) const { return nodes_.at(i); }
  // Variables in declaration order.
  const std::vector<std::string>& variables() const { return vars_; }
  std::size_t gate_count() const;

  // Optional E-MAJSAT partition: the U side; V is every other variable.
  std::vector<std::string> units;

  bool evaluate(const Assignment& z) const;

 private:
  int push(Node n);

  std::vector<Node> nodes_;
  std::vector<std::string> vars_;
  std::map<std::string, int> var_nodes_;
  int root_ = -1;
};

// CNF over x1..xN; clauses and literals right-nested. Throws InputError
// with the offending line number.
Formula parse_dimacs(std::string_view text);
Formula load_dimacs_file(const std::string& path);

// {"op":"var","name":..} | {"op":"not","arg":..} | {"op":"and"|"or","left":..,"right":..};
// the document may wrap it as {"formula":..,"units":[..]}.
Formula formula_from_json(const nlohmann::json& j);
nlohmann::json formula_to_json(const Formula& f);

struct Circuit {
  Scm scm;
  VarId sentinel = 0;
  std::vector<VarId> inputs;  // aligned with Formula::variables()
};

// One uniform binary root per variable, one functional gate per AST node.
Circuit compile_formula(const Formula& f);

struct Ratio {
  std::uint64_t num = 0;
  std::uint64_t den = 1;
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

inline constexpr std::size_t kEnumerationVarLimit = 20;

// |{v : uv |= f}| / |V-space| where V = variables not fixed by u.
Ratio emajsat_ratio(const Formula& f, const Assignment& u);
std::uint64_t count_models(const Formula& f);

struct SatResult {
  bool satisfiable = false;
  std::optional<Assignment> witness;
};

// Reverse-MAP with every variable as a unit, e1 = {S=1}, e2 = {}.
SatResult sat_via_rmap(const Formula& f, SolveMethod method = SolveMethod::Ve);

}  // namespace unitsel
