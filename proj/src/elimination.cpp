#include "unitsel/elimination.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>

#include "unitsel/errors.hpp"

namespace unitsel {

MoralGraph::MoralGraph(int node_count) : adj_(static_cast<std::size_t>(node_count)) {}

void MoralGraph::add_edge(VarId a, VarId b) {
  if (a == b) return;
  adj_.at(a).insert(b);
  adj_.at(b).insert(a);
}

std::size_t MoralGraph::edge_count() const {
  std::size_t n = 0;
  for (const auto& s : adj_) n += s.size();
  return n / 2;
}

std::vector<VarId> MoralGraph::eliminate(VarId v) {
  std::vector<VarId> nbrs(adj_[v].begin(), adj_[v].end());
  for (std::size_t i = 0; i < nbrs.size(); ++i)
    for (std::size_t j = i + 1; j < nbrs.size(); ++j) add_edge(nbrs[i], nbrs[j]);
  for (VarId u : nbrs) adj_[u].erase(v);
  adj_[v].clear();
  nbrs.push_back(v);
  std::sort(nbrs.begin(), nbrs.end());
  return nbrs;
}

int MoralGraph::fill_count(VarId v) const {
  int fill = 0;
  for (auto i = adj_[v].begin(); i != adj_[v].end(); ++i) {
    auto j = i;
    for (++j; j != adj_[v].end(); ++j)
      if (!adjacent(*i, *j)) ++fill;
  }
  return fill;
}

MoralGraph moral_graph(const Scm& scm) {
  MoralGraph g(scm.size());
  for (VarId v = 0; v < scm.size(); ++v) {
    const auto& ps = scm.parents(v);
    for (std::size_t i = 0; i < ps.size(); ++i) {
      g.add_edge(v, ps[i]);
      for (std::size_t j = i + 1; j < ps.size(); ++j) g.add_edge(ps[i], ps[j]);
    }
  }
  return g;
}

bool EliminationOrder::is_valid(int node_count) const {
  if (static_cast<int>(sequence.size()) != node_count) return false;
  std::vector<bool> seen(static_cast<std::size_t>(node_count), false);
  for (VarId v : sequence) {
    if (v < 0 || v >= node_count || seen[v]) return false;
    seen[v] = true;
  }
  return !constrained_suffix || is_constrained_by(*constrained_suffix);
}

bool EliminationOrder::is_constrained_by(const std::set<VarId>& units) const {
  if (units.size() > sequence.size()) return false;
  std::size_t tail = sequence.size() - units.size();
  for (std::size_t i = 0; i < sequence.size(); ++i)
    if ((units.count(sequence[i]) > 0) != (i >= tail)) return false;
  return true;
}

ClusterReport simulate_elimination(const MoralGraph& g, const EliminationOrder& order) {
  MoralGraph work = g;
  ClusterReport r;
  for (VarId v : order.sequence) {
    r.clusters.push_back(work.eliminate(v));
    r.width = std::max(r.width, static_cast<int>(r.clusters.back().size()) - 1);
  }
  return r;
}

int order_width(const MoralGraph& g, const std::vector<VarId>& sequence) {
  return simulate_elimination(g, EliminationOrder{sequence, std::nullopt}).width;
}

EliminationOrder minfill_order(const MoralGraph& g, const std::optional<std::set<VarId>>& constrained_suffix) {
  MoralGraph work = g;
  const int n = g.size();
  std::vector<int> fill(static_cast<std::size_t>(n));
  std::vector<bool> alive(static_cast<std::size_t>(n), true);
  for (VarId v = 0; v < n; ++v) fill[v] = work.fill_count(v);
  auto in_suffix = [&](VarId v) { return constrained_suffix && constrained_suffix->count(v) > 0; };
  int remaining_free = 0;
  for (VarId v = 0; v < n; ++v)
    if (!in_suffix(v)) ++remaining_free;

  EliminationOrder order;
  order.constrained_suffix = constrained_suffix;
  for (int step = 0; step < n; ++step) {
    VarId best = -1;
    for (VarId v = 0; v < n; ++v) {
      if (!alive[v] || (remaining_free > 0 && in_suffix(v))) continue;
      if (best < 0 || fill[v] < fill[best]) best = v;
    }
    std::set<VarId> dirty(work.neighbors(best).begin(), work.neighbors(best).end());
    work.eliminate(best);
    alive[best] = false;
    if (!in_suffix(best)) --remaining_free;
    order.sequence.push_back(best);
    std::set<VarId> second;
    for (VarId u : dirty) second.insert(work.neighbors(u).begin(), work.neighbors(u).end());
    dirty.insert(second.begin(), second.end());
    for (VarId u : dirty)
      if (alive[u]) fill[u] = work.fill_count(u);
  }
  return order;
}

ExhaustiveResult exhaustive_min_width(const MoralGraph& g, const std::optional<std::set<VarId>>& constrained_suffix) {
  std::vector<VarId> head, tail;
  for (VarId v = 0; v < g.size(); ++v) {
    if (constrained_suffix && constrained_suffix->count(v)) tail.push_back(v);
    else head.push_back(v);
  }
  double perms = 1.0;
  for (std::size_t i = 2; i <= head.size(); ++i) perms *= static_cast<double>(i);
  for (std::size_t i = 2; i <= tail.size(); ++i) perms *= static_cast<double>(i);
  if (g.size() > kExhaustiveNodeLimit || perms > 5e6)
    throw StructuralError("exhaustive order search is limited to small graphs");

  ExhaustiveResult best;
  best.order.constrained_suffix = constrained_suffix;
  std::vector<VarId> seq;
  do {
    do {
      seq = head;
      seq.insert(seq.end(), tail.begin(), tail.end());
      int w = order_width(g, seq);
      if (best.width < 0 || w < best.width) {
        best.width = w;
        best.order.sequence = seq;
      }
    } while (std::next_permutation(tail.begin(), tail.end()));
  } while (std::next_permutation(head.begin(), head.end()));
  return best;
}

int subset_dp_min_width(const MoralGraph& g, const std::optional<std::set<VarId>>& constrained_suffix) {
  const int n = g.size();
  if (n > kSubsetNodeLimit) throw StructuralError("subset DP is limited to small graphs");
  if (n == 0) return -1;
  std::vector<std::uint32_t> adj(static_cast<std::size_t>(n), 0);
  for (VarId v = 0; v < n; ++v)
    for (VarId u : g.neighbors(v)) adj[v] |= 1u << u;
  std::uint32_t free_nodes = 0;
  for (VarId v = 0; v < n; ++v)
    if (!(constrained_suffix && constrained_suffix->count(v))) free_nodes |= 1u << v;
  auto allowed = [&](std::uint32_t s) { return (s & ~free_nodes) == 0 || (s & free_nodes) == free_nodes; };

  // Neighbors of v after eliminating the set s: nodes outside s reachable
  // from v through s.
  auto q_size = [&](std::uint32_t s, VarId v) {
    std::uint32_t visited = 1u << v, reach = 0, stack = 1u << v;
    while (stack) {
      int a = std::countr_zero(stack);
      stack &= stack - 1;
      std::uint32_t fresh = adj[a] & ~visited;
      visited |= fresh;
      stack |= fresh & s;
      reach |= fresh & ~s;
    }
    return std::popcount(reach);
  };

  constexpr std::int8_t kUnset = std::numeric_limits<std::int8_t>::max();
  const std::uint32_t full = (n == 32) ? ~0u : ((1u << n) - 1);
  std::vector<std::int8_t> best(static_cast<std::size_t>(full) + 1, kUnset);
  best[0] = -1;
  for (std::uint32_t s = 1; s <= full; ++s) {
    if (!allowed(s)) continue;
    int value = kUnset;
    for (std::uint32_t rest = s; rest; rest &= rest - 1) {
      int v = std::countr_zero(rest);
      std::uint32_t prev = s & ~(1u << v);
      if (!allowed(prev) || best[prev] == kUnset) continue;
      value = std::min(value, std::max<int>(best[prev], q_size(prev, v)));
    }
    best[s] = static_cast<std::int8_t>(value);
  }
  return best[full];
}

namespace {

void emit_copies(VarId base, const std::vector<WorldMap>& components, std::vector<VarId>& out,
                 std::set<VarId>& emitted) {
  int worlds = 0;
  for (const auto& wm : components) worlds = std::max(worlds, wm.world_count);
  for (int k = 0; k < worlds; ++k) {
    for (const auto& wm : components) {
      if (k >= wm.world_count) continue;
      VarId id = wm.copy(base, k);
      if (id != kNoCopy && emitted.insert(id).second) out.push_back(id);
    }
  }
}

}  // namespace

EliminationOrder lift_order_unconstrained(const EliminationOrder& base, const std::vector<WorldMap>& components,
                                          std::optional<VarId> mixture) {
  EliminationOrder out;
  std::set<VarId> emitted;
  for (VarId x : base.sequence) emit_copies(x, components, out.sequence, emitted);
  if (mixture) out.sequence.push_back(*mixture);
  return out;
}

EliminationOrder lift_order_constrained(const EliminationOrder& base, const std::vector<WorldMap>& components,
                                        std::optional<VarId> mixture, const std::set<VarId>& units) {
  if (!base.is_constrained_by(units)) throw StructuralError("base order is not U-constrained");
  EliminationOrder out;
  std::set<VarId> emitted;
  std::vector<VarId> unit_block;
  for (VarId x : base.sequence) {
    if (units.count(x)) emit_copies(x, components, unit_block, emitted);
    else emit_copies(x, components, out.sequence, emitted);
  }
  if (mixture) out.sequence.push_back(*mixture);
  out.sequence.insert(out.sequence.end(), unit_block.begin(), unit_block.end());
  out.constrained_suffix = std::set<VarId>(unit_block.begin(), unit_block.end());
  return out;
}

EliminationOrder append_root_order(const EliminationOrder& base, VarId root) {
  EliminationOrder out = base;
  out.sequence.push_back(root);
  out.constrained_suffix.reset();
  return out;
}

bool is_connected(const Scm& scm, const std::set<VarId>& removed) {
  auto kids = scm.children();
  std::vector<bool> seen(static_cast<std::size_t>(scm.size()), false);
  VarId start = -1;
  int remaining = 0;
  for (VarId v = 0; v < scm.size(); ++v) {
    if (removed.count(v)) continue;
    ++remaining;
    if (start < 0) start = v;
  }
  if (remaining == 0) return true;
  std::vector<VarId> stack{start};
  seen[start] = true;
  int reached = 1;
  while (!stack.empty()) {
    VarId v = stack.back();
    stack.pop_back();
    auto visit = [&](VarId u) {
      if (removed.count(u) || seen[u]) return;
      seen[u] = true;
      ++reached;
      stack.push_back(u);
    };
    for (VarId p : scm.parents(v)) visit(p);
    for (VarId c : kids[v]) visit(c);
  }
  return reached == remaining;
}

bool is_external(const Scm& scm, const std::set<VarId>& units) {
  if (!is_connected(scm)) throw StructuralError("is_external needs a connected DAG");
  for (VarId u : units)
    if (!scm.is_root(u)) throw StructuralError("is_external: units must be roots");
  return is_connected(scm, units);
}

EliminationOrder parse_order(const Scm& scm, std::string_view text) {
  EliminationOrder order;
  std::istringstream in{std::string(text)};
  std::string line;
  auto trim = [](std::string s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  auto lookup = [&](const std::string& name) {
    auto id = scm.find(name);
    if (!id) throw InputError("order file names unknown variable '" + name + "'");
    return *id;
  };
  const std::string header = "#constrained:";
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    if (line.rfind(header, 0) == 0) {
      std::set<VarId> units;
      std::istringstream names(line.substr(header.size()));
      std::string name;
      while (std::getline(names, name, ','))
        if (!trim(name).empty()) units.insert(lookup(trim(name)));
      order.constrained_suffix = units;
      continue;
    }
    if (line[0] == '#') continue;
    order.sequence.push_back(lookup(line));
  }
  if (!order.is_valid(scm.size()))
    throw InputError("order file must list every variable once, with constrained variables last");
  return order;
}

EliminationOrder load_order_file(const Scm& scm, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open order file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_order(scm, buf.str());
}

std::string format_order(const Scm& scm, const EliminationOrder& order) {
  std::string out;
  if (order.constrained_suffix) {
    out += "#constrained: ";
    bool first = true;
    for (VarId v : order.sequence) {
      if (!order.constrained_suffix->count(v)) continue;
      if (!first) out += ",";
      out += scm.variable(v).name;
      first = false;
    }
    out += "\n";
  }
  for (VarId v : order.sequence) out += scm.variable(v).name + "\n";
  return out;
}

}  // namespace unitsel
