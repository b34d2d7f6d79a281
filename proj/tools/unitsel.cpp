// unitsel: exact unit selection on structural causal models.
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "unitsel/bench.hpp"
#include "unitsel/elimination.hpp"
#include "unitsel/errors.hpp"
#include "unitsel/inference.hpp"
#include "unitsel/objective.hpp"
#include "unitsel/reductions.hpp"

using namespace unitsel;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kInput = 1, kInconsistent = 2, kInternal = 3 };

std::uint64_t default_seed() {
  if (const char* s = std::getenv("UNITSEL_SEED")) {
    try {
      return std::stoull(s);
    } catch (const std::exception&) {
      throw InputError("UNITSEL_SEED is not an unsigned integer");
    }
  }
  return 1;
}

// Values rounded to 12 significant digits so equal answers from different
// engines print identically.
double printable(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return std::strtod(buf, nullptr);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw InputError("cannot write " + out_path);
  out << text;
}

std::vector<VarId> parse_var_list(const Scm& scm, const std::string& text) {
  std::vector<VarId> ids;
  std::stringstream ss(text);
  std::string name;
  while (std::getline(ss, name, ',')) {
    if (name.empty()) continue;
    ids.push_back(scm.id_of(name));
  }
  return ids;
}

json instantiation_json(const Scm& scm, const Instantiation& inst) {
  json j = json::object();
  for (auto [var, state] : inst) j[scm.variable(var).name] = scm.variable(var).states.at(state);
  return j;
}

std::optional<EliminationOrder> order_from_file(const Scm& scm, const std::string& path) {
  if (path.empty()) return std::nullopt;
  return load_order_file(scm, path);
}

void print_query(const Scm& scm, const QueryResult& q, bool trace) {
  std::cout << "value: " << fmt(q.value) << "\n";
  std::cout << "instantiation: " << format_assignments(scm, q.instantiation) << "\n";
  if (trace) std::cout << format_trace(scm, q.trace);
}

struct Bound {
  std::string label;
  int value;
};

void print_bound(const std::string& what, int observed, const Bound& b) {
  std::cout << what << ": " << observed << " bound=" << b.label << " observed<=bound "
            << (observed <= b.value ? "PASS" : "FAIL") << "\n";
}

int run_width(const std::string& model_path, const std::string& units_text, const std::string& order_spec,
              const std::string& objective_path) {
  Scm scm = load_model_file(model_path, {.allow_nonfunctional = true});
  auto unit_ids = parse_var_list(scm, units_text);
  std::set<VarId> units(unit_ids.begin(), unit_ids.end());
  std::optional<std::set<VarId>> suffix;
  if (!units.empty()) suffix = units;
  MoralGraph g = moral_graph(scm);

  EliminationOrder order;
  if (order_spec == "minfill") {
    order = minfill_order(g, suffix);
  } else if (order_spec == "exhaustive") {
    order = exhaustive_min_width(g, suffix).order;
  } else {
    order = load_order_file(scm, order_spec);
    if (!units.empty() && !order.is_constrained_by(units))
      throw InputError("order file is not constrained by the given units");
  }
  auto report = simulate_elimination(g, order);
  std::cout << "order: ";
  for (std::size_t i = 0; i < order.sequence.size(); ++i)
    std::cout << (i ? "," : "") << scm.variable(order.sequence[i]).name;
  std::cout << "\nwidth: " << report.width << "\nclusters:";
  for (const auto& c : report.clusters) std::cout << " " << format_var_set(scm, c);
  std::cout << "\n";
  if (objective_path.empty()) return kOk;

  ObjectiveFunction L = load_objective_file(scm, objective_path);
  if (units.empty()) units.insert(L.units.begin(), L.units.end());
  auto om = build_objective_model(scm, L);
  const int w = report.width;
  const int n = om.n;
  MoralGraph og = moral_graph(om.model);
  std::set<VarId> om_units(om.units.begin(), om.units.end());
  std::cout << "objective model: nodes=" << om.model.size() << " components=" << n << "\n";
  std::cout << "objective constrained minfill width: " << simulate_elimination(og, minfill_order(og, om_units)).width
            << "\n";
  if (om.model.size() <= kExhaustiveNodeLimit)
    std::cout << "objective constrained treewidth: " << exhaustive_min_width(og, om_units).width << "\n";

  auto lifted_u = lift_order_unconstrained(order, om.components, om.mixture);
  print_bound("lifted unconstrained width", simulate_elimination(og, lifted_u).width,
              {"3n(w+1)", 3 * n * (w + 1)});
  if (order.is_constrained_by(units)) {
    auto lifted_c = lift_order_constrained(order, om.components, om.mixture, units);
    std::set<VarId> outcomes;
    bool twin = true;
    for (const auto& t : L.terms) {
      for (const auto& kv : t.y) outcomes.insert(kv.first);
      for (const auto& kv : t.w) outcomes.insert(kv.first);
      if (!t.e.empty()) twin = false;
    }
    Bound b{"max(3w+3,|U|)", std::max(3 * w + 3, static_cast<int>(units.size()))};
    if (outcomes.size() == 1) b = twin ? Bound{"2w+2", 2 * w + 2} : Bound{"3w+3", 3 * w + 3};
    print_bound("lifted constrained width", simulate_elimination(og, lifted_c).width, b);
  }
  return kOk;
}

BenchConfig bench_config(const std::string& name) {
  BenchConfig cfg;
  if (name == "default") return cfg;
  if (name == "small") {
    cfg.sizes = {10, 15, 20};
    cfg.unit_ratios = {0.2, 1.0};
    return cfg;
  }
  std::ifstream in(name);
  if (!in) throw InputError("unknown bench config '" + name + "' (expected default, small or a JSON file)");
  json j;
  try {
    in >> j;
    cfg.sizes = j.value("sizes", cfg.sizes);
    cfg.unit_ratios = j.value("unit_ratios", cfg.unit_ratios);
    cfg.trials = j.value("trials", cfg.trials);
    cfg.max_parents = j.value("max_parents", cfg.max_parents);
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed bench config: ") + e.what());
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact unit selection on structural causal models"};
  app.require_subcommand(1, 1);

  std::string model_path, objective_path, order_path, out_path, method = "ve";
  std::string targets, e_text, e1_text, e2_text, units_text, order_spec = "minfill";
  std::string dimacs_path, kind = "random", config = "default", objective_out, order_out;
  bool as_json = false, trace = false;
  int n = 10, max_parents = 3;
  std::uint64_t seed = 0;
  bool seed_given = false;

  auto* solve = app.add_subcommand("solve", "argmax_u L(u) for an objective function");
  solve->add_option("--model", model_path, "model JSON")->required();
  solve->add_option("--objective", objective_path, "objective JSON")->required();
  solve->add_option("--method", method, "ve or brute")->check(CLI::IsMember({"ve", "brute"}));
  solve->add_option("--order", order_path, "base-model order file (U-constrained)");
  solve->add_flag("--json", as_json, "emit JSON");

  auto* map = app.add_subcommand("map", "max_u Pr(u, e)");
  auto* rmap = app.add_subcommand("rmap", "max_u Pr(e1 | u, e2)");
  for (auto* sub : {map, rmap}) {
    sub->add_option("--model", model_path, "model JSON")->required();
    sub->add_option("--targets", targets, "comma-separated target variables")->required();
    sub->add_option("--order", order_path, "order file");
    sub->add_flag("--trace", trace, "print the elimination trace");
  }
  map->add_option("--e", e_text, "evidence name=state,...");
  rmap->add_option("--e1", e1_text, "evidence name=state,...");
  rmap->add_option("--e2", e2_text, "evidence name=state,...");

  auto* width = app.add_subcommand("width", "elimination width, clusters and lifting bounds");
  width->add_option("--model", model_path, "model JSON")->required();
  width->add_option("--units", units_text, "comma-separated unit variables");
  width->add_option("--order", order_spec, "minfill, exhaustive or an order file");
  width->add_option("--objective", objective_path, "objective JSON; enables lifted-order bounds");

  auto* build = app.add_subcommand("build", "write the objective model");
  build->add_option("--model", model_path, "model JSON")->required();
  build->add_option("--objective", objective_path, "objective JSON")->required();
  build->add_option("--out", out_path, "output path (default stdout)");

  auto* compile = app.add_subcommand("compile-cnf", "compile a DIMACS CNF into an SCM circuit");
  compile->add_option("--dimacs", dimacs_path, "CNF file")->required();
  compile->add_option("--out", out_path, "output path (default stdout)");

  auto* gen = app.add_subcommand("gen", "generate instances");
  gen->add_option("--kind", kind, "random or tight")->check(CLI::IsMember({"random", "tight"}));
  gen->add_option("--n", n, "node count (random) or unit count (tight)");
  gen->add_option("--max-parents", max_parents, "random DAG in-degree cap");
  auto* seed_opt = gen->add_option("--seed", seed, "seed (default UNITSEL_SEED or 1)");
  gen->add_option("--out", out_path, "model output path (default stdout)");
  gen->add_option("--objective-out", objective_out, "tight family objective output path");
  gen->add_option("--order-out", order_out, "tight family order output path");

  auto* bench = app.add_subcommand("bench", "width table over random SCMs");
  bench->add_option("--config", config, "default, small or a JSON file");
  auto* bench_seed = bench->add_option("--seed", seed, "master seed (default UNITSEL_SEED or 1)");
  bench->add_option("--out", out_path, "CSV output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kInput;
  }
  seed_given = seed_opt->count() > 0 || bench_seed->count() > 0;

  try {
    if (*solve) {
      Scm scm = load_model_file(model_path, {.allow_nonfunctional = true});
      ObjectiveFunction L = load_objective_file(scm, objective_path);
      auto r = unit_select(scm, L, method == "ve" ? SolveMethod::Ve : SolveMethod::Brute,
                           order_from_file(scm, order_path));
      if (as_json) {
        json j{{"unit", instantiation_json(scm, r.instantiation)},
               {"value", printable(r.value)},
               {"excluded", r.excluded}};
        std::cout << j.dump() << "\n";
      } else {
        std::cout << "unit: " << format_assignments(scm, r.instantiation) << "\n";
        std::cout << "value: " << fmt(r.value) << "\n";
        std::cout << "excluded: " << r.excluded << "\n";
      }
    } else if (*map || *rmap) {
      Scm scm = load_model_file(model_path, {.allow_nonfunctional = true});
      auto t = parse_var_list(scm, targets);
      auto order = order_from_file(scm, order_path);
      QueryResult q = *map ? map_ve(scm, t, parse_assignments(scm, e_text), order)
                           : rmap_ve(scm, t, parse_assignments(scm, e1_text), parse_assignments(scm, e2_text), order);
      print_query(scm, q, trace);
      if (*rmap) std::cout << "excluded: " << q.excluded << "\n";
    } else if (*width) {
      return run_width(model_path, units_text, order_spec, objective_path);
    } else if (*build) {
      Scm scm = load_model_file(model_path, {.allow_nonfunctional = true});
      ObjectiveFunction L = load_objective_file(scm, objective_path);
      emit(save_model(build_objective_model(scm, L).model), out_path);
    } else if (*compile) {
      Circuit c = compile_formula(load_dimacs_file(dimacs_path));
      emit(save_model(c.scm), out_path);
      std::cerr << "sentinel: " << c.scm.variable(c.sentinel).name << "\n";
    } else if (*gen) {
      if (!seed_given) seed = default_seed();
      if (kind == "random") {
        GenConfig cfg;
        cfg.node_count = n;
        cfg.seed = seed;
        cfg.max_parents = max_parents;
        emit(save_model(gen_random_scm(cfg)), out_path);
      } else {
        auto t = gen_tight_family(n);
        emit(save_model(t.scm), out_path);
        if (!objective_out.empty()) emit(save_objective(t.scm, t.objective), objective_out);
        if (!order_out.empty()) emit(format_order(t.scm, t.order), order_out);
      }
    } else if (*bench) {
      BenchConfig cfg = bench_config(config);
      cfg.seed = seed_given ? seed : default_seed();
      emit(width_table_csv(run_width_table(cfg)), out_path);
    }
  } catch (const InconsistentEvidenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInconsistent;
  } catch (const ConsistencyError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInput;
  } catch (const StructuralError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInput;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kOk;
}
