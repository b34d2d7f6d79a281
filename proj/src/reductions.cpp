#include "unitsel/reductions.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "unitsel/errors.hpp"

namespace unitsel {

using nlohmann::json;

void Formula::declare(const std::string& name) {
  if (std::find(vars_.begin(), vars_.end(), name) == vars_.end()) vars_.push_back(name);
}

int Formula::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

int Formula::var(const std::string& name) {
  if (auto it = var_nodes_.find(name); it != var_nodes_.end()) return it->second;
  declare(name);
  int id = push({Op::Var, name, -1, -1});
  var_nodes_[name] = id;
  return id;
}

int Formula::negate(int child) { return push({Op::Not, {}, child, -1}); }
int Formula::conjoin(int left, int right) { return push({Op::And, {}, left, right}); }
int Formula::disjoin(int left, int right) { return push({Op::Or, {}, left, right}); }

std::size_t Formula::gate_count() const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.op != Op::Var; }));
}

bool Formula::evaluate(const Assignment& z) const {
  if (root_ < 0) throw StructuralError("formula has no root");
  std::vector<char> val(nodes_.size(), 0);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    switch (n.op) {
      case Op::Var: {
        auto it = z.find(n.name);
        if (it == z.end()) throw InputError("assignment misses variable " + n.name);
        val[i] = it->second;
        break;
      }
      case Op::Not: val[i] = !val[n.left]; break;
      case Op::And: val[i] = val[n.left] && val[n.right]; break;
      case Op::Or: val[i] = val[n.left] || val[n.right]; break;
    }
  }
  return val[root_];
}

namespace {

[[noreturn]] void dimacs_error(int line, const std::string& what) {
  throw InputError("dimacs line " + std::to_string(line) + ": " + what);
}

int fold(Formula& f, const std::vector<int>& parts, bool conj) {
  int acc = parts.back();
  for (auto it = parts.rbegin() + 1; it != parts.rend(); ++it) acc = conj ? f.conjoin(*it, acc) : f.disjoin(*it, acc);
  return acc;
}

}  // namespace

Formula parse_dimacs(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  long nvars = -1, nclauses = -1;
  std::vector<std::vector<long>> clauses;
  std::vector<long> current;
  int last_line = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;
    if (tok[0] == 'c' || tok[0] == '%') continue;
    if (tok == "p") {
      if (nvars >= 0) dimacs_error(line_no, "second problem line");
      std::string fmt;
      if (!(ls >> fmt >> nvars >> nclauses) || fmt != "cnf" || nvars < 0 || nclauses < 0)
        dimacs_error(line_no, "expected 'p cnf <vars> <clauses>'");
      continue;
    }
    if (nvars < 0) dimacs_error(line_no, "clause before problem line");
    ls.seekg(0);
    while (ls >> tok) {
      long lit = 0;
      try {
        std::size_t used = 0;
        lit = std::stol(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        dimacs_error(line_no, "bad literal '" + tok + "'");
      }
      if (lit == 0) {
        if (current.empty()) dimacs_error(line_no, "empty clause");
        clauses.push_back(std::move(current));
        current.clear();
        continue;
      }
      if (std::labs(lit) > nvars)
        dimacs_error(line_no, "literal " + std::to_string(lit) + " exceeds declared variable count " + std::to_string(nvars));
      current.push_back(lit);
    }
    last_line = line_no;
  }
  if (nvars < 0) dimacs_error(line_no, "missing problem line");
  if (!current.empty()) clauses.push_back(std::move(current));
  if (static_cast<long>(clauses.size()) != nclauses)
    dimacs_error(last_line, "header declares " + std::to_string(nclauses) + " clauses, found " +
                                std::to_string(clauses.size()));
  if (clauses.empty()) dimacs_error(last_line, "formula has no clauses");

  Formula f;
  for (long v = 1; v <= nvars; ++v) f.declare("x" + std::to_string(v));
  std::vector<int> clause_nodes;
  for (const auto& c : clauses) {
    std::vector<int> lits;
    for (long lit : c) {
      int v = f.var("x" + std::to_string(std::labs(lit)));
      lits.push_back(lit < 0 ? f.negate(v) : v);
    }
    clause_nodes.push_back(fold(f, lits, false));
  }
  f.set_root(fold(f, clause_nodes, true));
  return f;
}

Formula load_dimacs_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_dimacs(ss.str());
}

namespace {

int node_from_json(Formula& f, const json& j) {
  if (!j.is_object() || !j.contains("op")) throw InputError("formula node needs an 'op'");
  std::string op = j.at("op").get<std::string>();
  if (op == "var") return f.var(j.at("name").get<std::string>());
  if (op == "not") return f.negate(node_from_json(f, j.at("arg")));
  if (op == "and" || op == "or") {
    int l = node_from_json(f, j.at("left"));
    int r = node_from_json(f, j.at("right"));
    return op == "and" ? f.conjoin(l, r) : f.disjoin(l, r);
  }
  throw InputError("unknown formula op '" + op + "'");
}

json node_to_json(const Formula& f, int i) {
  const auto& n = f.node(i);
  switch (n.op) {
    case Formula::Op::Var: return {{"op", "var"}, {"name", n.name}};
    case Formula::Op::Not: return {{"op", "not"}, {"arg", node_to_json(f, n.left)}};
    case Formula::Op::And:
    case Formula::Op::Or:
      return {{"op", n.op == Formula::Op::And ? "and" : "or"},
              {"left", node_to_json(f, n.left)},
              {"right", node_to_json(f, n.right)}};
  }
  return {};
}

}  // namespace

Formula formula_from_json(const json& j) {
  Formula f;
  try {
    if (j.contains("formula")) {
      f.set_root(node_from_json(f, j.at("formula")));
      if (j.contains("units")) f.units = j.at("units").get<std::vector<std::string>>();
    } else {
      f.set_root(node_from_json(f, j));
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed formula: ") + e.what());
  }
  for (const auto& u : f.units)
    if (std::find(f.variables().begin(), f.variables().end(), u) == f.variables().end())
      throw InputError("unit '" + u + "' is not a formula variable");
  return f;
}

json formula_to_json(const Formula& f) {
  json body = node_to_json(f, f.root());
  if (f.units.empty()) return body;
  return {{"formula", body}, {"units", f.units}};
}

Circuit compile_formula(const Formula& f) {
  if (f.root() < 0) throw StructuralError("formula has no root");
  Circuit c;
  std::set<std::string> taken(f.variables().begin(), f.variables().end());
  for (const auto& name : f.variables()) c.inputs.push_back(c.scm.add_variable(name, {"0", "1"}));

  std::vector<VarId> node_var(f.nodes().size(), kNoCopy);
  int gate_no = 0;
  for (std::size_t i = 0; i < f.nodes().size(); ++i) {
    const auto& n = f.node(static_cast<int>(i));
    if (n.op == Formula::Op::Var) {
      node_var[i] = c.scm.id_of(n.name);
      continue;
    }
    std::string name = static_cast<int>(i) == f.root() ? "S" : "g" + std::to_string(++gate_no);
    while (taken.count(name)) name += "'";
    taken.insert(name);
    VarId gate = c.scm.add_variable(name, {"0", "1"});
    node_var[i] = gate;

    std::vector<VarId> parents{node_var[n.left]};
    if (n.op != Formula::Op::Not && node_var[n.right] != parents[0]) parents.push_back(node_var[n.right]);
    std::vector<double> table;
    for (int cfg = 0; cfg < (1 << parents.size()); ++cfg) {
      // first parent slowest
      auto state = [&](VarId p) {
        std::size_t k = std::find(parents.begin(), parents.end(), p) - parents.begin();
        return (cfg >> (parents.size() - 1 - k)) & 1;
      };
      int out = 0;
      switch (n.op) {
        case Formula::Op::Not: out = 1 - state(parents[0]); break;
        case Formula::Op::And: out = state(node_var[n.left]) * state(node_var[n.right]); break;
        case Formula::Op::Or: out = std::min(1, state(node_var[n.left]) + state(node_var[n.right])); break;
        case Formula::Op::Var: break;
      }
      table.push_back(out == 0 ? 1.0 : 0.0);
      table.push_back(out == 1 ? 1.0 : 0.0);
    }
    c.scm.set_parents(gate, parents);
    c.scm.set_cpt(gate, table);
  }
  c.sentinel = node_var[f.root()];
  return c;
}

namespace {

template <typename Fn>
void enumerate_bits(const std::vector<std::string>& vars, Assignment base, Fn&& fn) {
  if (vars.size() > kEnumerationVarLimit)
    throw InputError("enumeration over " + std::to_string(vars.size()) + " variables exceeds the limit of " +
                     std::to_string(kEnumerationVarLimit));
  for (std::uint64_t m = 0; m < (std::uint64_t{1} << vars.size()); ++m) {
    for (std::size_t k = 0; k < vars.size(); ++k) base[vars[k]] = (m >> k) & 1;
    fn(static_cast<const Assignment&>(base));
  }
}

}  // namespace

Ratio emajsat_ratio(const Formula& f, const Assignment& u) {
  const auto& all = f.variables();
  for (const auto& kv : u)
    if (std::find(all.begin(), all.end(), kv.first) == all.end())
      throw InputError("'" + kv.first + "' is not a formula variable");
  for (const auto& name : f.units)
    if (!u.count(name)) throw InputError("unit '" + name + "' is not assigned");
  std::vector<std::string> free;
  for (const auto& name : all)
    if (!u.count(name)) free.push_back(name);
  Ratio r;
  r.den = std::uint64_t{1} << std::min(free.size(), kEnumerationVarLimit);
  enumerate_bits(free, u, [&](const Assignment& z) { r.num += f.evaluate(z); });
  return r;
}

std::uint64_t count_models(const Formula& f) {
  Formula plain = f;
  plain.units.clear();
  return emajsat_ratio(plain, {}).num;
}

SatResult sat_via_rmap(const Formula& f, SolveMethod method) {
  Circuit c = compile_formula(f);
  SatResult r;
  if (f.node(f.root()).op == Formula::Op::Var) {
    Assignment w;
    for (const auto& name : f.variables()) w[name] = name == f.node(f.root()).name;
    r.satisfiable = true;
    r.witness = std::move(w);
    return r;
  }
  Instantiation e1{{c.sentinel, 1}};
  QueryResult q = method == SolveMethod::Ve ? rmap_ve(c.scm, c.inputs, e1, {}) : brute_rmap(c.scm, c.inputs, e1, {});
  r.satisfiable = q.value > 0.5;
  if (r.satisfiable) {
    Assignment w;
    for (std::size_t k = 0; k < c.inputs.size(); ++k) w[f.variables()[k]] = q.instantiation.at(c.inputs[k]) == 1;
    r.witness = std::move(w);
  }
  return r;
}

}  // namespace unitsel
