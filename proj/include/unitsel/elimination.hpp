#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "unitsel/model.hpp"
#include "unitsel/worlds.hpp"

namespace unitsel {

// Undirected graph over dense variable ids.
class MoralGraph {
 public:
  explicit MoralGraph(int node_count = 0);

  int size() const { return static_cast<int>(adj_.size()); }
  void add_edge(VarId a, VarId b);
  bool adjacent(VarId a, VarId b) const { return adj_[a].count(b) > 0; }
  const std::set<VarId>& neighbors(VarId v) const { return adj_[v]; }
  std::size_t edge_count() const;

  // Connects all neighbors of v pairwise, then detaches v. Returns the
  // cluster {v} + neighbors, ascending.
  std::vector<VarId> eliminate(VarId v);
  // Number of fill edges eliminating v would add.
  int fill_count(VarId v) const;

 private:
  std::vector<std::set<VarId>> adj_;
};

MoralGraph moral_graph(const Scm& scm);

struct EliminationOrder {
  std::vector<VarId> sequence;
  std::optional<std::set<VarId>> constrained_suffix;

  // Permutation of 0..node_count-1 with the suffix (if any) occupying the tail.
  bool is_valid(int node_count) const;
  bool is_constrained_by(const std::set<VarId>& units) const;
};

struct ClusterReport {
  std::vector<std::vector<VarId>> clusters;  // in elimination sequence
  int width = -1;
};

ClusterReport simulate_elimination(const MoralGraph& g, const EliminationOrder& order);
// Width of an order over a subset-free sequence (convenience).
int order_width(const MoralGraph& g, const std::vector<VarId>& sequence);

// Greedy minimum-fill order; ties go to the smallest id. With a suffix, the
// suffix variables are only eligible once every other node is gone.
EliminationOrder minfill_order(const MoralGraph& g, const std::optional<std::set<VarId>>& constrained_suffix = {});

// Certified minimum width by enumerating every (constrained) permutation.
// Limited to small graphs.
struct ExhaustiveResult {
  int width = -1;
  EliminationOrder order;
};
inline constexpr int kExhaustiveNodeLimit = 11;
ExhaustiveResult exhaustive_min_width(const MoralGraph& g, const std::optional<std::set<VarId>>& constrained_suffix = {});

// Exact (constrained) treewidth by dynamic programming over eliminated
// subsets. Agrees with exhaustive_min_width; reaches larger graphs.
inline constexpr int kSubsetNodeLimit = 24;
int subset_dp_min_width(const MoralGraph& g, const std::optional<std::set<VarId>>& constrained_suffix = {});

// Order of an n-component (or n-world) model from an order of its base SCM:
// each non-unit X becomes its world-1 copies across components, then world-2
// copies, then world-3 copies. Copies already emitted are skipped.
EliminationOrder lift_order_unconstrained(const EliminationOrder& base, const std::vector<WorldMap>& components,
                                          std::optional<VarId> mixture);
// As above but requires a U-constrained base order; the mixture is placed
// immediately before the unit block.
EliminationOrder lift_order_constrained(const EliminationOrder& base, const std::vector<WorldMap>& components,
                                        std::optional<VarId> mixture, const std::set<VarId>& units);
EliminationOrder append_root_order(const EliminationOrder& base, VarId root);

// True iff the DAG minus `units` stays connected. Throws when the DAG itself
// is disconnected.
bool is_external(const Scm& scm, const std::set<VarId>& units);
bool is_connected(const Scm& scm, const std::set<VarId>& removed = {});

// Plain-text order files: one name per line, optional "#constrained: a,b" header.
EliminationOrder parse_order(const Scm& scm, std::string_view text);
EliminationOrder load_order_file(const Scm& scm, const std::string& path);
std::string format_order(const Scm& scm, const EliminationOrder& order);

}  // namespace unitsel
