#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "unitsel/elimination.hpp"
#include "unitsel/model.hpp"
#include "unitsel/objective.hpp"

namespace unitsel {

struct GenConfig {
  int node_count = 10;  // nodes of the random DAG, before roots are added
  std::uint64_t seed = 1;
  int max_parents = 3;
  double unit_ratio = 0.2;
  int trials = 25;
};

// Random DAG whose internal nodes each get a root parent (adding dedicated
// roots where needed); deterministic truth tables, random root priors.
Scm gen_random_scm(const GenConfig& cfg);

// round(ratio * |roots|) roots, at least one, chosen uniformly.
std::vector<VarId> pick_units(const Scm& scm, double ratio, std::mt19937_64& rng);

struct TightFamily {
  Scm scm;
  std::vector<VarId> units;
  ObjectiveFunction objective;
  EliminationOrder order;  // X^1..X^{n-1}, E, U_1..U_n
};

TightFamily gen_tight_family(int n);

// Response-type terms with X=1 as x and X=0 as x'; zero-weight terms are omitted.
ObjectiveFunction gen_benefit_objective(const Scm& scm, VarId x, VarId y, const std::array<double, 4>& weights,
                                        const std::vector<VarId>& units);

struct WidthRow {
  int n = 0;
  double ur = 0.0;
  double n1 = 0, n2 = 0, roots = 0;
  double w = 0, w1 = 0, w2 = 0;
  int lifted_violations = 0;  // trials whose lifted constrained order exceeded 2w+2
};

struct BenchConfig {
  std::vector<int> sizes{10, 15, 20, 25, 30, 35, 40, 45};
  std::vector<double> unit_ratios{0.2, 0.4, 0.6, 0.8, 1.0};
  int trials = 25;
  int max_parents = 3;
  std::uint64_t seed = 1;
};

std::vector<WidthRow> run_width_table(const BenchConfig& cfg);
std::string width_table_csv(const std::vector<WidthRow>& rows);

}  // namespace unitsel
