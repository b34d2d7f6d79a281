#pragma once

#include <optional>
#include <string>
#include <vector>

#include "unitsel/elimination.hpp"
#include "unitsel/factor.hpp"
#include "unitsel/model.hpp"
#include "unitsel/objective.hpp"

namespace unitsel {

// Where a pooled factor came from. Two elimination passes over the same
// model and order produce pools whose entries pair up by provenance.
struct Provenance {
  enum class Kind { Cpt, Lambda, Step };
  Kind kind = Kind::Cpt;
  int id = 0;  // node id for Cpt/Lambda, 1-based step for Step

  friend auto operator<=>(const Provenance&, const Provenance&) = default;
};

struct PooledFactor {
  Factor factor;
  Provenance origin;
};

using FactorPool = std::vector<PooledFactor>;

FactorPool make_pool(const Scm& model, const Instantiation& evidence);

enum class EliminationOp { Sum, Max };

struct TraceRecord {
  int step = 0;  // 1-based, continuing across passes
  VarId var = 0;
  EliminationOp op = EliminationOp::Sum;
  std::vector<Provenance> inputs;
  std::vector<std::vector<VarId>> input_scopes;
  std::vector<VarId> cluster;  // scope of the product before the op
};

struct MaxStep {
  VarId var = 0;
  MaximizerTable maximizers;
};

struct EliminationResult {
  FactorPool pool;
  std::vector<TraceRecord> trace;
  std::vector<MaxStep> max_steps;  // filled for EliminationOp::Max
};

EliminationResult eliminate(EliminationOp op, FactorPool pool, const std::vector<VarId>& order, int first_step = 1);

struct QueryResult {
  double value = 0.0;
  Instantiation instantiation;  // over the target variables
  std::size_t excluded = 0;     // units with zero conditioning mass
  std::vector<TraceRecord> trace;
};

// max_u Pr(u, e) by sum-then-max elimination. `order` must be U-constrained;
// defaults to constrained minfill.
QueryResult map_ve(const Scm& model, const std::vector<VarId>& targets, const Instantiation& e,
                   const std::optional<EliminationOrder>& order = {});

// max_u Pr(e1 | u, e2) by two summation passes, pairwise division and a
// max pass. Throws InconsistentEvidenceError when Pr(u, e2) = 0 for every u.
QueryResult rmap_ve(const Scm& model, const std::vector<VarId>& targets, const Instantiation& e1,
                    const Instantiation& e2, const std::optional<EliminationOrder>& order = {});

// Enumeration oracles; ties resolve to the lexicographically smallest
// instantiation in target order.
QueryResult brute_map(const Scm& model, const std::vector<VarId>& targets, const Instantiation& e);
QueryResult brute_rmap(const Scm& model, const std::vector<VarId>& targets, const Instantiation& e1,
                       const Instantiation& e2);

// Pr(e) by summing out every variable.
double probability_of_evidence(const Scm& model, const Instantiation& e);
// Pr(e1 | e2); nullopt when Pr(e2) = 0.
std::optional<double> conditional_probability(const Scm& model, const Instantiation& e1, const Instantiation& e2);

// Normalized Pr(targets | evidence).
Factor posterior(const Scm& model, const std::vector<VarId>& targets, const Instantiation& evidence,
                 const std::optional<EliminationOrder>& order = {});

enum class SolveMethod { Ve, Brute };

// argmax_u L(u). The instantiation is over base-model unit ids.
QueryResult unit_select(const Scm& scm, const ObjectiveFunction& L, SolveMethod method,
                        const std::optional<EliminationOrder>& base_order = {},
                        const ObjectiveBuildOptions& build = {});

// Text table in the layout of a VE trace: step, variable, factors, new factor, cluster.
std::string format_trace(const Scm& model, const std::vector<TraceRecord>& trace);

}  // namespace unitsel
