#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "unitsel/objective.hpp"
#include "unitsel/reductions.hpp"

namespace corpus {

using namespace unitsel;

// Random functional SCM: `roots` exogenous roots, `endogenous` internal
// nodes with 1..3 earlier parents, random truth tables.
Scm random_scm(std::mt19937_64& rng, int roots, int endogenous, int max_card = 2, bool zero_priors = false);

struct Instance {
  Scm scm;
  ObjectiveFunction objective;
};

// <= 8 endogenous, <= 3 binary unit roots, objective with 1..3 terms.
Instance random_instance(std::uint64_t seed);

struct Query {
  Scm model;  // not necessarily functional
  std::vector<VarId> targets;
  Instantiation e;   // MAP evidence
  Instantiation e1;  // Reverse-MAP evidence
  Instantiation e2;
};

// Bayesian network on <= 12 variables with a random query.
Query random_query(std::uint64_t seed);

Formula random_3cnf(std::mt19937_64& rng, int vars, int clauses);

// Full-joint enumeration oracles.
double enumerate_marginal(const Scm& scm, const Instantiation& e);
std::vector<double> enumerate_table(const Scm& scm, const std::vector<VarId>& vars, const Instantiation& e);

Scm load_fixture(const std::string& name);

}  // namespace corpus
